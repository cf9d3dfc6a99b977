#include "grim/pipeline.hpp"

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/text.hpp"

namespace grim {

GenerationOutcome generate_bundle(const GenerationSpec& spec, CompletionProvider& provider,
                                  const TemplateSet& templates, const ParseOptions& parse_options,
                                  const ValidatorOptions& validator_options) {
  PromptText prompt = build_generation_prompt(templates, spec);
  Completion completion = provider.complete(prompt);
  ParseResult parsed = parse_storyline_document(completion.text, spec, parse_options);
  if (!parsed.ok()) {
    json details = json::array();
    for (const auto& d : parsed.diagnostics) details.push_back(d);
    throw Error("PARSE-FAILED", "generated document does not parse (" +
                                    std::to_string(parsed.errors().size()) + " error(s))",
                details);
  }
  GenerationOutcome out;
  out.bundle = std::move(*parsed.bundle);
  out.diagnostics = std::move(parsed.diagnostics);
  out.validation = validate(out.bundle, validator_options);
  out.transcript = std::move(completion.transcript);
  return out;
}

int add_generated_version(Project& project, const GenerationOutcome& outcome) {
  return project.append_version(outcome.bundle, Provenance{}, {outcome.transcript}).version;
}

GraphifyOutcome graphify_via_llm(const StoryBundle& bundle, CompletionProvider& provider,
                                 const TemplateSet& templates) {
  std::string draft = bundle.raw_text.empty() ? serialize_story_bundle(bundle) : bundle.raw_text;
  PromptText prompt = build_graphify_prompt(templates, draft);
  Completion completion = provider.complete(prompt);
  PayloadParseResult parsed = parse_render_payload(completion.text);
  GraphifyOutcome out;
  out.diagnostics = parsed.diagnostics;
  out.transcript = std::move(completion.transcript);
  out.reconciliation = reconcile(parsed.ok() ? *parsed.payload : RenderPayload{}, bundle);
  return out;
}

ProjectEdit edit_project(Project& project, const EditSet& edits, CompletionProvider& provider,
                         const TemplateSet& templates, const EditOptions& options) {
  const StoryBundle current = project.latest().bundle;
  ProjectEdit result;
  result.outcome = apply_edit(current, edits, provider, templates, options);
  result.diff = diff_bundles(current, result.outcome.new_bundle);
  Provenance provenance{Provenance::Kind::kEdited, result.outcome.edits};
  result.new_version =
      project.append_version(result.outcome.new_bundle, provenance, result.outcome.transcripts).version;
  return result;
}

std::vector<std::string> read_list_file(const std::filesystem::path& path) {
  std::vector<std::string> out;
  for (const auto& line : text::split_lines(read_file(path))) {
    std::string_view v = text::trim(line);
    if (v.empty() || v.front() == '#') continue;
    out.emplace_back(v);
  }
  return out;
}

std::vector<ConstraintTriple> read_constraints_file(const std::filesystem::path& path) {
  std::vector<ConstraintTriple> out;
  for (const auto& line : read_list_file(path)) {
    auto parts = text::split(line, ',');
    std::optional<int> v[3];
    if (parts.size() == 3)
      for (int i = 0; i < 3; ++i) v[i] = text::parse_positive_int(text::trim(parts[i]));
    if (!v[0] || !v[1] || !v[2])
      throw Error("USAGE", "constraint line '" + line + "' is not 'starts,endings,storylines'");
    out.emplace_back(*v[0], *v[1], *v[2]);
  }
  return out;
}

std::vector<GenerationSpec> enumerate_grid(const std::vector<std::string>& stories,
                                           const std::vector<std::string>& settings,
                                           const std::vector<ConstraintTriple>& constraints) {
  std::vector<GenerationSpec> out;
  out.reserve(stories.size() * settings.size() * constraints.size());
  for (const auto& story : stories)
    for (const auto& setting : settings)
      for (const auto& [starts, endings, storylines] : constraints)
        out.push_back({story, setting, starts, endings, storylines});
  return out;
}

}  // namespace grim
