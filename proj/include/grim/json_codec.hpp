#pragma once

// JSON forms shared by the project file, the CLI and the HTTP API.

#include <nlohmann/json.hpp>

#include "grim/edit_engine.hpp"
#include "grim/graph_builder.hpp"
#include "grim/llm_gateway.hpp"
#include "grim/model.hpp"
#include "grim/storyline_parser.hpp"
#include "grim/validator.hpp"

namespace grim {

using json = nlohmann::json;

/// Beats as integers, dummy nodes as their labels ("START_1").
json node_ref_to_json(const NodeRef& node);
NodeRef node_ref_from_json(const json& j);
json edges_to_json(const EdgeSet& edges);

void to_json(json& j, const GenerationSpec& spec);
void from_json(const json& j, GenerationSpec& spec);

/// Wire format: {"nodes_added":[{"id":18,"description":"..."}],
/// "nodes_deleted":[9], "edges_added":[[2,18]], "edges_deleted":[[5,6]]}.
/// "id" is optional on added nodes; absent keys mean empty lists.
void to_json(json& j, const EditSet& edits);
void from_json(const json& j, EditSet& edits);
/// from_json with shape errors mapped to Error("EDIT-INVALID").
EditSet parse_edit_set(const json& j);

/// Structured form plus raw_text and its SHA-256 (raw_sha256).
void to_json(json& j, const StoryBundle& bundle);
/// Throws Error("CORRUPT") when raw_sha256 does not match raw_text.
void from_json(const json& j, StoryBundle& bundle);

void to_json(json& j, const Transcript& t);
void from_json(const json& j, Transcript& t);

void to_json(json& j, const ParseDiagnostic& d);
void to_json(json& j, const Violation& v);
void to_json(json& j, const ValidationReport& report);
void to_json(json& j, const EditCheck& check);
void to_json(json& j, const EditReport& report);
void to_json(json& j, const BundleDiff& diff);

/// Same key order as serialize_render_payload.
nlohmann::ordered_json payload_to_json(const RenderPayload& payload);
/// Throws Error(code) with the parse diagnostics as details.
RenderPayload payload_from_json(const nlohmann::ordered_json& j, const std::string& code = "CORRUPT");

}  // namespace grim
