#pragma once

// End-to-end flows composed from the modules: generate a project version,
// graphify through the model, edit a project.

#include <string>
#include <tuple>
#include <vector>

#include "grim/edit_engine.hpp"
#include "grim/graph_builder.hpp"
#include "grim/llm_gateway.hpp"
#include "grim/project_store.hpp"
#include "grim/prompt_forge.hpp"
#include "grim/storyline_parser.hpp"
#include "grim/validator.hpp"

namespace grim {

struct GenerationOutcome {
  StoryBundle bundle;
  std::vector<ParseDiagnostic> diagnostics;
  ValidationReport validation;
  Transcript transcript;
};

/// prompt -> complete -> parse -> validate. Throws Error("PARSE-FAILED")
/// with the diagnostics as details when the document does not parse.
GenerationOutcome generate_bundle(const GenerationSpec& spec, CompletionProvider& provider,
                                  const TemplateSet& templates, const ParseOptions& parse_options = {},
                                  const ValidatorOptions& validator_options = {});

/// Appends the outcome as a generated version; returns its number.
int add_generated_version(Project& project, const GenerationOutcome& outcome);

struct GraphifyOutcome {
  Reconciliation reconciliation;
  std::vector<ParseDiagnostic> diagnostics;
  Transcript transcript;
};

/// Asks the model for the payload of `bundle` and reconciles it against the
/// deterministic build. An unparseable answer reconciles as an empty
/// candidate, so the repaired payload is always usable.
GraphifyOutcome graphify_via_llm(const StoryBundle& bundle, CompletionProvider& provider,
                                 const TemplateSet& templates);

struct ProjectEdit {
  EditOutcome outcome;
  BundleDiff diff;
  int new_version = 0;
};

/// apply_edit on the latest version, appended as an edited version.
ProjectEdit edit_project(Project& project, const EditSet& edits, CompletionProvider& provider,
                         const TemplateSet& templates, const EditOptions& options = {});

/// (starts, endings, storylines)
using ConstraintTriple = std::tuple<int, int, int>;

/// Reads newline-delimited values, skipping blank lines and '#' comments.
std::vector<std::string> read_list_file(const std::filesystem::path& path);
/// Each line "starts,endings,storylines". Throws Error("USAGE").
std::vector<ConstraintTriple> read_constraints_file(const std::filesystem::path& path);

/// Cartesian product in story, setting, constraint order.
std::vector<GenerationSpec> enumerate_grid(const std::vector<std::string>& stories,
                                           const std::vector<std::string>& settings,
                                           const std::vector<ConstraintTriple>& constraints);

}  // namespace grim
