// Writes replay fixtures: renders the prompt the pipeline would send and
// stores a given response under that prompt's digest.

#include <iostream>

#include <CLI11.hpp>

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/project_store.hpp"
#include "grim/prompt_forge.hpp"
#include "grim/text.hpp"

int main(int argc, char** argv) {
  CLI::App app{"grim-fixture: write replay fixtures for canned responses"};
  app.require_subcommand(1);

  std::string response_file, fixture_dir, templates_dir, model = "gpt-4", timestamp;
  auto common = [&](CLI::App* cmd) {
    cmd->add_option("--response", response_file, "file holding the model's answer")
        ->required()
        ->check(CLI::ExistingFile);
    cmd->add_option("--fixtures", fixture_dir, "fixture directory")->required();
    cmd->add_option("--templates", templates_dir, "prompt template directory");
    cmd->add_option("--model", model);
    cmd->add_option("--timestamp", timestamp, "recorded timestamp (default now)");
  };

  auto* gen = app.add_subcommand("generate", "fixture for a generation prompt");
  grim::GenerationSpec spec;
  gen->add_option("--story", spec.story)->required();
  gen->add_option("--setting", spec.setting)->required();
  gen->add_option("--starts", spec.n_starts)->required();
  gen->add_option("--ends", spec.n_endings)->required();
  gen->add_option("--storylines", spec.n_storylines)->required();
  common(gen);

  auto* edit = app.add_subcommand("edit", "fixture for an edit prompt (first attempt)");
  std::string project_file, edits_file;
  std::vector<std::string> corrections;
  edit->add_option("--project", project_file)->required()->check(CLI::ExistingFile);
  edit->add_option("--edits", edits_file, "edit set JSON")->required()->check(CLI::ExistingFile);
  edit->add_option("--correction", corrections, "corrective line of a retry prompt (repeatable)");
  common(edit);

  auto* graph = app.add_subcommand("graphify", "fixture for a graph prompt");
  graph->add_option("--project", project_file)->required()->check(CLI::ExistingFile);
  common(graph);

  CLI11_PARSE(app, argc, argv);

  try {
    grim::TemplateSet templates =
        templates_dir.empty() ? grim::TemplateSet::load_default() : grim::TemplateSet::load(templates_dir);
    grim::PromptText prompt;
    if (gen->parsed()) {
      prompt = grim::build_generation_prompt(templates, spec);
    } else {
      grim::Project project = grim::load_project(project_file);
      const auto& bundle = project.latest().bundle;
      if (edit->parsed()) {
        auto edits = grim::parse_edit_set(grim::json::parse(grim::read_file(edits_file)));
        prompt = grim::build_edit_prompt(templates, bundle, edits, corrections);
      } else {
        prompt = grim::build_graphify_prompt(
            templates, bundle.raw_text.empty() ? grim::serialize_story_bundle(bundle) : bundle.raw_text);
      }
    }
    grim::Transcript t;
    t.prompt_digest = grim::prompt_digest(prompt.text);
    t.prompt_text = prompt.text;
    t.response_text = grim::read_file(response_file);
    t.model_name = model;
    t.template_version = prompt.template_version;
    t.timestamp = timestamp.empty() ? grim::text::utc_timestamp() : timestamp;
    grim::write_fixture(fixture_dir, t);
    std::cout << t.prompt_digest << "\n";
  } catch (const grim::Error& e) {
    std::cerr << "grim-fixture: " << e.code() << ": " << e.what() << "\n";
    return 3;
  }
  return 0;
}
