#include "grim/cli.hpp"

#include <algorithm>
#include <atomic>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <thread>

#include <CLI11.hpp>

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/pipeline.hpp"
#include "grim/project_store.hpp"
#include "grim/server.hpp"
#include "grim/text.hpp"

namespace grim::cli {

namespace fs = std::filesystem;

GenerationSpec spec_from_header(std::string_view document) {
  GenerationSpec spec;
  for (const auto& raw : text::split_lines(document)) {
    std::string_view line = text::trim(raw);
    size_t colon = line.find(':');
    if (colon == std::string_view::npos) continue;
    std::string key = text::to_lower(text::trim(line.substr(0, colon)));
    std::string_view value = text::trim(line.substr(colon + 1));
    while (!value.empty() && value.back() == ',') value = text::trim(value.substr(0, value.size() - 1));
    auto count = [&](int& field) {
      if (auto n = text::parse_positive_int(value)) field = *n;
    };
    if (key == "story")
      spec.story = value;
    else if (key == "setting")
      spec.setting = value;
    else if (key == "starts")
      count(spec.n_starts);
    else if (key == "endings")
      count(spec.n_endings);
    else if (key == "storylines")
      count(spec.n_storylines);
  }
  return spec;
}

namespace {

struct GatewayFlags {
  std::string mode = "live";
  std::string fixtures;
  std::string model;
  std::string endpoint;
  double temperature = 0.0;
  int timeout = 120;
  int retries = 3;
  std::string templates;

  void attach(CLI::App* cmd) {
    cmd->add_option("--mode", mode, "live | record | replay")->check(CLI::IsMember({"live", "record", "replay"}));
    cmd->add_option("--fixtures", fixtures, "replay/record fixture directory");
    cmd->add_option("--model", model, "model name (overrides GRIM_MODEL)");
    cmd->add_option("--endpoint", endpoint, "chat-completion URL (overrides GRIM_ENDPOINT)");
    cmd->add_option("--temperature", temperature)->check(CLI::Range(0.0, 2.0));
    cmd->add_option("--timeout", timeout, "seconds")->check(CLI::PositiveNumber);
    cmd->add_option("--retries", retries)->check(CLI::Range(0, 10));
    cmd->add_option("--templates", templates, "prompt template directory");
  }

  ProviderConfig config() const {
    ProviderConfig c = ProviderConfig{}.with_environment();
    c.mode = parse_gateway_mode(mode);
    c.fixture_dir = fixtures;
    if (!model.empty()) c.model_name = model;
    if (!endpoint.empty()) c.endpoint = endpoint;
    c.temperature = temperature;
    c.timeout = std::chrono::seconds(timeout);
    c.max_retries = retries;
    return c;
  }

  TemplateSet load_templates() const {
    return templates.empty() ? TemplateSet::load_default() : TemplateSet::load(templates);
  }
};

struct Context {
  std::ostream& out;
  std::ostream& err;
  ProviderFactory factory;
  bool human = false;

  std::shared_ptr<CompletionProvider> provider(const GatewayFlags& flags) const {
    ProviderConfig config = flags.config();
    if (factory) return factory(config);
    return std::make_shared<LlmGateway>(config);
  }

  void emit(const json& j) const { out << j.dump(2) << "\n"; }
};

std::string severity_tag(Severity s) { return s == Severity::kError ? "ERROR" : "warn "; }

void print_report_human(std::ostream& os, const ValidationReport& report) {
  os << "unique beats: " << report.stats.unique_beats << "\n"
     << "max pairwise common run: " << report.stats.max_pairwise_run << "\n"
     << "computed common beats:";
  for (BeatId id : report.stats.computed_common_beats) os << " " << id;
  os << "\n";
  if (report.violations.empty()) os << "no violations\n";
  for (const auto& v : report.violations) os << severity_tag(v.severity) << "  " << v.code << "  " << v.detail << "\n";
}

void print_diagnostics_human(std::ostream& os, const std::vector<ParseDiagnostic>& diagnostics) {
  for (const auto& d : diagnostics)
    os << severity_tag(d.severity) << "  line " << d.line << "  " << d.code << "  " << d.message << "\n";
}

bool looks_like_project(const fs::path& path, const std::string& contents) {
  if (path.string().ends_with(".grim.json")) return true;
  std::string_view t = text::trim(contents);
  return !t.empty() && t.front() == '{';
}

int exit_for(const ValidationReport& report, bool strict) {
  if (report.has_errors()) return kExitValidation;
  if (strict && !report.warnings().empty()) return kExitValidation;
  return kExitOk;
}

std::string id_for_output(const fs::path& output) {
  std::string name = output.filename().string();
  constexpr std::string_view kSuffix = ".grim.json";
  if (name.ends_with(kSuffix) && name.size() > kSuffix.size()) return name.substr(0, name.size() - kSuffix.size());
  return {};
}

BeatPair parse_edge_flag(const std::string& raw, const std::vector<BeatId>& new_ids) {
  auto resolve = [&](std::string_view token) -> BeatId {
    token = text::trim(token);
    if (!token.empty() && (token.front() == 'n' || token.front() == 'N')) {
      auto k = text::parse_positive_int(token.substr(1));
      if (!k || *k > static_cast<int>(new_ids.size()))
        throw Error("USAGE", "'" + std::string(token) + "' does not name an --add-node (n1, n2, ...)");
      return new_ids[*k - 1];
    }
    if (auto ref = NodeRef::parse(token); ref && ref->is_beat()) return ref->number();
    throw Error("USAGE", "bad beat reference '" + std::string(token) + "'");
  };
  size_t sep = raw.find(':');
  if (sep == std::string::npos) sep = raw.find(',');
  if (sep == std::string::npos) throw Error("USAGE", "edge '" + raw + "' must look like A:B");
  return {resolve(std::string_view(raw).substr(0, sep)), resolve(std::string_view(raw).substr(sep + 1))};
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, ProviderFactory factory) {
  CLI::App app{"grim: narrative graph workbench"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");
  Context ctx{out, err, std::move(factory)};
  app.add_flag("--human", ctx.human, "human-readable tables instead of JSON");

  // generate
  auto* gen = app.add_subcommand("generate", "generate storylines and save a new project");
  GenerationSpec gen_spec;
  std::string gen_output;
  GatewayFlags gen_gateway;
  bool gen_strict = false;
  gen->add_option("--story", gen_spec.story)->required();
  gen->add_option("--setting", gen_spec.setting)->required();
  gen->add_option("--starts", gen_spec.n_starts)->required()->check(CLI::PositiveNumber);
  gen->add_option("--ends", gen_spec.n_endings)->required()->check(CLI::PositiveNumber);
  gen->add_option("--storylines", gen_spec.n_storylines)->required()->check(CLI::PositiveNumber);
  gen->add_option("-o,--output", gen_output, "project file (<id>.grim.json)")->required();
  gen->add_flag("--strict", gen_strict, "treat warnings as errors for the exit code");
  gen_gateway.attach(gen);

  // validate
  auto* val = app.add_subcommand("validate", "validate a project version or a storyline document");
  std::string val_input;
  bool val_strict = false;
  int val_version = 0;
  int val_starts = 0, val_ends = 0, val_storylines = 0;
  val->add_option("input", val_input, "project file or storyline document")->required()->check(CLI::ExistingFile);
  val->add_flag("--strict", val_strict, "treat warnings as errors for the exit code");
  val->add_option("--version", val_version, "project version (default latest)");
  val->add_option("--starts", val_starts, "override for documents")->check(CLI::PositiveNumber);
  val->add_option("--ends", val_ends, "override for documents")->check(CLI::PositiveNumber);
  val->add_option("--storylines", val_storylines, "override for documents")->check(CLI::PositiveNumber);

  // graph
  auto* graph = app.add_subcommand("graph", "build the render payload of a project version");
  std::string graph_input, graph_output;
  int graph_version = 0;
  bool graph_via_llm = false;
  GatewayFlags graph_gateway;
  graph->add_option("project", graph_input)->required()->check(CLI::ExistingFile);
  graph->add_option("-o,--output", graph_output, "payload file")->required();
  graph->add_option("--version", graph_version, "project version (default latest)");
  graph->add_flag("--via-llm", graph_via_llm, "ask the model for the payload, then reconcile and repair");
  graph_gateway.attach(graph);

  // edit
  auto* edit = app.add_subcommand("edit", "apply designer edits and save a new version");
  std::string edit_input, edit_json_file;
  std::vector<std::string> add_nodes, add_edges, del_edges;
  std::vector<int> del_nodes;
  int edit_attempts = 3;
  GatewayFlags edit_gateway;
  edit->add_option("project", edit_input)->required()->check(CLI::ExistingFile);
  edit->add_option("--add-node", add_nodes, "description of a new beat (repeatable)");
  edit->add_option("--add-edge", add_edges, "A:B; n1, n2 ... name added nodes (repeatable)");
  edit->add_option("--del-node", del_nodes, "beat to delete (repeatable)");
  edit->add_option("--del-edge", del_edges, "A:B transition to delete (repeatable)");
  edit->add_option("--edits", edit_json_file, "edit set JSON file")->check(CLI::ExistingFile);
  edit->add_option("--attempts", edit_attempts, "regeneration attempts")->check(CLI::Range(1, 10));
  edit_gateway.attach(edit);

  // export
  auto* exp = app.add_subcommand("export", "write the render payload of a stored version");
  std::string exp_input, exp_output;
  int exp_version = 0;
  exp->add_option("project", exp_input)->required()->check(CLI::ExistingFile);
  exp->add_option("--version", exp_version, "project version (default latest)");
  exp->add_option("-o,--output", exp_output, "payload file")->required();

  // grid
  auto* grid = app.add_subcommand("grid", "generate one project per story x setting x constraint cell");
  std::string grid_stories, grid_settings, grid_constraints, grid_out;
  int grid_parallel = 1;
  bool grid_dry_run = false;
  GatewayFlags grid_gateway;
  grid->add_option("--stories", grid_stories, "newline-delimited stories")->required()->check(CLI::ExistingFile);
  grid->add_option("--settings", grid_settings, "newline-delimited settings")->required()->check(CLI::ExistingFile);
  grid->add_option("--constraints", grid_constraints, "lines of starts,endings,storylines")
      ->required()
      ->check(CLI::ExistingFile);
  grid->add_option("--out", grid_out, "output directory")->required();
  grid->add_option("--parallel", grid_parallel, "concurrent cells")->check(CLI::Range(1, 64));
  grid->add_flag("--dry-run", grid_dry_run, "list the cells without generating");
  grid_gateway.attach(grid);

  // serve
  auto* serve = app.add_subcommand("serve", "run the HTTP API");
  ServerConfig serve_config;
  std::string serve_static, serve_projects = ".";
  GatewayFlags serve_gateway;
  int serve_attempts = 3;
  serve->add_option("--port", serve_config.port)->check(CLI::Range(0, 65535));
  serve->add_option("--host", serve_config.host);
  serve->add_option("--static", serve_static, "directory of UI files")->check(CLI::ExistingDirectory);
  serve->add_option("--projects", serve_projects, "project directory")->check(CLI::ExistingDirectory);
  serve->add_option("--attempts", serve_attempts, "edit regeneration attempts")->check(CLI::Range(1, 10));
  serve_gateway.attach(serve);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kExitUsage;
  }

  try {
    if (gen->parsed()) {
      check_generation_spec(gen_spec);
      auto provider = ctx.provider(gen_gateway);
      GenerationOutcome outcome = generate_bundle(gen_spec, *provider, gen_gateway.load_templates());
      Project project = new_project(gen_spec);
      if (std::string id = id_for_output(gen_output); !id.empty()) project.id = id;
      int version = add_generated_version(project, outcome);
      save_project(project, gen_output);
      if (ctx.human) {
        out << "project " << project.id << " version " << version << " -> " << gen_output << "\n";
        print_diagnostics_human(out, outcome.diagnostics);
        print_report_human(out, outcome.validation);
      } else {
        json diagnostics = outcome.diagnostics;
        ctx.emit({{"project_id", project.id},
                  {"path", gen_output},
                  {"version", version},
                  {"starts", outcome.bundle.starts.size()},
                  {"ends", outcome.bundle.ends.size()},
                  {"storylines", outcome.bundle.storylines.size()},
                  {"diagnostics", diagnostics},
                  {"validation", outcome.validation}});
      }
      return exit_for(outcome.validation, gen_strict);
    }

    if (val->parsed()) {
      std::string contents = read_file(val_input);
      StoryBundle bundle;
      std::vector<ParseDiagnostic> diagnostics;
      ValidatorOptions val_options;
      if (looks_like_project(val_input, contents)) {
        Project project = load_project(val_input);
        const auto& v = val_version == 0 ? project.latest() : project.version(val_version);
        bundle = v.bundle;
        if (v.provenance.kind == Provenance::Kind::kEdited)
          val_options.storyline_count = ValidatorOptions::StorylineCount::kAtLeast;
      } else {
        GenerationSpec spec = spec_from_header(contents);
        if (val_starts) spec.n_starts = val_starts;
        if (val_ends) spec.n_endings = val_ends;
        if (val_storylines) spec.n_storylines = val_storylines;
        ParseResult parsed = parse_storyline_document(contents, spec);
        diagnostics = parsed.diagnostics;
        if (!parsed.ok()) {
          if (ctx.human)
            print_diagnostics_human(out, diagnostics);
          else
            ctx.emit({{"parsed", false}, {"diagnostics", json(diagnostics)}});
          return kExitValidation;
        }
        bundle = std::move(*parsed.bundle);
      }
      ValidationReport report = validate(bundle, val_options);
      if (ctx.human) {
        print_diagnostics_human(out, diagnostics);
        print_report_human(out, report);
      } else {
        json j = report;
        j["diagnostics"] = diagnostics;
        ctx.emit(j);
      }
      return exit_for(report, val_strict);
    }

    if (graph->parsed()) {
      Project project = load_project(graph_input);
      const auto& v = graph_version == 0 ? project.latest() : project.version(graph_version);
      json summary;
      RenderPayload payload;
      if (graph_via_llm) {
        auto provider = ctx.provider(graph_gateway);
        GraphifyOutcome g = graphify_via_llm(v.bundle, *provider, graph_gateway.load_templates());
        payload = g.reconciliation.repaired;
        const auto& r = g.reconciliation.report;
        json mismatches = json::array();
        for (const auto& m : r.description_mismatches) mismatches.push_back(m.node_id);
        summary["reconcile"] = {{"missing_edges", r.missing_edges},
                                {"extra_edges", r.extra_edges},
                                {"missing_nodes", r.missing_nodes},
                                {"extra_nodes", r.extra_nodes},
                                {"description_mismatches", mismatches}};
        summary["diagnostics"] = g.diagnostics;
      } else {
        payload = build_render_payload(v.bundle);
      }
      write_file_atomic(graph_output, serialize_render_payload(payload));
      summary["path"] = graph_output;
      summary["version"] = v.version;
      summary["nodes"] = payload.nodes.size();
      summary["edges"] = payload.edge_set().size();
      if (ctx.human)
        out << "wrote " << graph_output << ": " << payload.nodes.size() << " nodes, " << payload.edge_set().size()
            << " edges\n";
      else
        ctx.emit(summary);
      return kExitOk;
    }

    if (edit->parsed()) {
      Project project = load_project(edit_input);
      const StoryBundle& current = project.latest().bundle;
      EditSet edits;
      if (!edit_json_file.empty()) edits = parse_edit_set(json::parse(read_file(edit_json_file)));
      for (const auto& d : add_nodes) edits.nodes_added.push_back({0, d});
      std::vector<BeatId> new_ids;
      for (const auto& n : assign_provisional_ids(current, edits).nodes_added) new_ids.push_back(n.id);
      for (const auto& e : add_edges) edits.edges_added.insert(parse_edge_flag(e, new_ids));
      for (const auto& e : del_edges) edits.edges_deleted.insert(parse_edge_flag(e, new_ids));
      edits.nodes_deleted.insert(del_nodes.begin(), del_nodes.end());

      EditOptions options;
      options.max_attempts = edit_attempts;
      auto provider = ctx.provider(edit_gateway);
      ProjectEdit result = edit_project(project, edits, *provider, edit_gateway.load_templates(), options);
      save_project(project, edit_input);
      if (ctx.human) {
        out << "version " << result.new_version << " accepted after " << result.outcome.attempts << " attempt(s)\n";
        out << json(result.diff).dump(2) << "\n";
        print_report_human(out, result.outcome.validation);
      } else {
        ctx.emit({{"new_version", result.new_version},
                  {"attempts", result.outcome.attempts},
                  {"edits", result.outcome.edits},
                  {"edit_report", result.outcome.edit_report},
                  {"validation", result.outcome.validation},
                  {"diff", result.diff}});
      }
      return kExitOk;
    }

    if (exp->parsed()) {
      Project project = load_project(exp_input);
      int version = exp_version == 0 ? project.latest().version : exp_version;
      export_render_payload(project, version, exp_output);
      const auto& payload = project.version(version).payload;
      if (ctx.human)
        out << "exported version " << version << " to " << exp_output << "\n";
      else
        ctx.emit({{"path", exp_output}, {"version", version}, {"nodes", payload.nodes.size()}});
      return kExitOk;
    }

    if (grid->parsed()) {
      auto cells = enumerate_grid(read_list_file(grid_stories), read_list_file(grid_settings),
                                  read_constraints_file(grid_constraints));
      std::vector<json> rows(cells.size());
      std::vector<int> codes(cells.size(), kExitOk);
      int width = static_cast<int>(std::to_string(cells.size()).size());
      auto cell_id = [&](size_t i) {
        std::ostringstream id;
        id << "cell-" << std::setw(std::max(width, 3)) << std::setfill('0') << (i + 1);
        return id.str();
      };
      for (size_t i = 0; i < cells.size(); ++i)
        rows[i] = {{"cell", cell_id(i)},
                   {"story", cells[i].story},
                   {"setting", cells[i].setting},
                   {"starts", cells[i].n_starts},
                   {"endings", cells[i].n_endings},
                   {"storylines", cells[i].n_storylines}};

      if (!grid_dry_run) {
        fs::create_directories(grid_out);
        auto provider = ctx.provider(grid_gateway);
        TemplateSet templates = grid_gateway.load_templates();
        std::atomic<size_t> next{0};
        auto worker = [&] {
          for (size_t i = next++; i < cells.size(); i = next++) {
            json& row = rows[i];
            try {
              GenerationOutcome outcome = generate_bundle(cells[i], *provider, templates);
              Project project = new_project(cells[i]);
              project.id = cell_id(i);
              add_generated_version(project, outcome);
              auto path = project_path(grid_out, project.id);
              save_project(project, path);
              const auto& r = outcome.validation;
              row["status"] = r.has_errors() ? "invalid" : "ok";
              row["project"] = path.string();
              row["errors"] = r.errors().size();
              row["warnings"] = r.warnings().size();
              row["unique_beats"] = r.stats.unique_beats;
              row["max_pairwise_run"] = r.stats.max_pairwise_run;
              row["computed_common_beats"] = r.stats.computed_common_beats;
              if (r.has_errors()) codes[i] = kExitValidation;
            } catch (const Error& e) {
              row["status"] = "failed";
              row["error"] = {{"code", e.code()}, {"message", e.what()}};
              codes[i] = kExitRuntime;
            }
          }
        };
        std::vector<std::thread> pool;
        for (int t = 1; t < grid_parallel; ++t) pool.emplace_back(worker);
        worker();
        for (auto& t : pool) t.join();
      }

      if (ctx.human) {
        out << std::left << std::setw(10) << "cell" << std::setw(10) << "status" << std::setw(8) << "beats"
            << std::setw(6) << "run" << std::setw(8) << "errors" << "spec\n";
        for (const auto& row : rows)
          out << std::setw(10) << row["cell"].get<std::string>() << std::setw(10) << row.value("status", "-")
              << std::setw(8) << row.value("unique_beats", 0) << std::setw(6) << row.value("max_pairwise_run", 0)
              << std::setw(8) << row.value("errors", 0) << row["story"].get<std::string>() << " / "
              << row["setting"].get<std::string>() << " / " << row["starts"] << "," << row["endings"] << ","
              << row["storylines"] << "\n";
      } else {
        ctx.emit({{"cells", rows.size()}, {"rows", rows}});
      }
      return codes.empty() ? kExitOk : *std::max_element(codes.begin(), codes.end());
    }

    if (serve->parsed()) {
      serve_config.project_dir = serve_projects;
      serve_config.static_dir = serve_static;
      serve_config.edit_options.max_attempts = serve_attempts;
      GrimServer server(serve_config, ctx.provider(serve_gateway), serve_gateway.load_templates());
      int port = server.bind();
      err << "grim serving on http://" << serve_config.host << ":" << port << "\n";
      server.listen();
      return kExitOk;
    }
  } catch (const EditExhausted& e) {
    err << "grim: " << e.code() << ": " << e.what() << "\n";
    for (const auto& m : e.last().edit_report.error_messages()) err << "  " << m << "\n";
    for (const auto& v : e.last().validation.errors()) err << "  " << v.code << ": " << v.detail << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    err << "grim: " << e.code() << ": " << e.what() << "\n";
    if (!e.details().is_null()) err << e.details().dump(2) << "\n";
    static const std::set<std::string> usage = {"USAGE",       "SPEC-INVALID",     "CONFIG-INVALID",
                                                "EDIT-EMPTY",  "EDIT-REF-UNKNOWN", "EDIT-ID-CLASH",
                                                "EDIT-INVALID", "VERSION-UNKNOWN"};
    return usage.contains(e.code()) ? kExitUsage : kExitRuntime;
  } catch (const std::exception& e) {
    err << "grim: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace grim::cli
