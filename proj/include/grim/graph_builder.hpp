#pragma once

// Render payload: the NODES/EDGES JSON convention consumed by the browser
// client. Built deterministically from a bundle, or parsed from model output
// and reconciled against the deterministic build.

#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "grim/model.hpp"
#include "grim/storyline_parser.hpp"

namespace grim {

inline constexpr const char* kDefaultGameState = "None";

/// One NODES entry: [[game_state, nr_beat, beat, pathway]].
struct RenderNode {
  std::optional<std::string> game_state;
  std::optional<int> nr_beat;
  std::optional<std::string> beat;
  std::optional<std::string> pathway;

  friend bool operator==(const RenderNode&, const RenderNode&) = default;
};

using EdgePair = std::pair<std::string, std::string>;

/// One EDGES entry: {game_state: [[incoming...], [outgoing...]]}.
struct NodeEdges {
  std::string game_state = kDefaultGameState;
  std::vector<EdgePair> incoming;
  std::vector<EdgePair> outgoing;

  friend bool operator==(const NodeEdges&, const NodeEdges&) = default;
};

struct RenderPayload {
  std::vector<std::pair<std::string, RenderNode>> nodes;
  std::vector<std::pair<std::string, NodeEdges>> edges;

  const RenderNode* find_node(std::string_view id) const;
  const NodeEdges* find_edges(std::string_view id) const;
  /// Union of every incoming and outgoing pair.
  std::set<EdgePair> edge_set() const;

  friend bool operator==(const RenderPayload&, const RenderPayload&) = default;
};

/// Deterministic payload: one node per beat on some storyline plus one per
/// START_/END_ label; key order beats ascending, START_k ascending, END_k
/// ascending. A beat's pathway is the smallest index of a storyline
/// containing it. Throws Error("DANGLING-BEAT-REF") like merge_transitions.
RenderPayload build_render_payload(const StoryBundle& bundle);

/// Canonical file form: {"NODES": {...}, "EDGES": {...}}, one key per line.
std::string serialize_render_payload(const RenderPayload& payload);

struct PayloadParseResult {
  std::optional<RenderPayload> payload;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return payload.has_value(); }
};

/// Accepts either the canonical file form or model output containing a
/// "NODES:" object followed by an "EDGES:" object. Never throws.
///
/// Errors: PAYLOAD-MALFORMED, PAYLOAD-ASYMMETRIC-EDGE, PAYLOAD-KEYSET-MISMATCH.
/// Warning: PAYLOAD-DUMMY-ORDER (START_/END_ keys moved after beat keys).
PayloadParseResult parse_render_payload(std::string_view text);

struct DescriptionMismatch {
  std::string node_id;
  std::string oracle;
  std::string candidate;

  friend bool operator==(const DescriptionMismatch&, const DescriptionMismatch&) = default;
};

struct ReconcileReport {
  std::set<EdgePair> missing_edges;
  std::set<EdgePair> extra_edges;
  std::set<std::string> missing_nodes;
  std::set<std::string> extra_nodes;
  std::vector<DescriptionMismatch> description_mismatches;

  bool empty() const;
  size_t size() const;
};

struct Reconciliation {
  ReconcileReport report;
  RenderPayload repaired;
};

/// Diffs `candidate` against build_render_payload(bundle). The repaired
/// payload has the oracle's structure; beat descriptions and game states are
/// taken from the candidate wherever it has a node with the same beat number.
Reconciliation reconcile(const RenderPayload& candidate, const StoryBundle& bundle);

}  // namespace grim
