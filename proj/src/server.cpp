#include "grim/server.hpp"

#include <httplib.h>

#include <regex>
#include <set>

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/pipeline.hpp"
#include "grim/project_store.hpp"

namespace grim {

int http_status_for(const std::string& code) {
  static const std::set<std::string> bad_request = {"BAD-REQUEST",      "SPEC-INVALID",  "EDIT-EMPTY",
                                                    "EDIT-REF-UNKNOWN", "EDIT-ID-CLASH", "EDIT-INVALID",
                                                    "PRECONDITION"};
  static const std::set<std::string> gateway = {"NETWORK", "RATE-LIMITED", "EMPTY-RESPONSE", "FIXTURE-MISS",
                                                "FIXTURE-CORRUPT", "CREDENTIAL-MISSING"};
  if (bad_request.contains(code)) return 400;
  if (code == "PROJECT-UNKNOWN" || code == "VERSION-UNKNOWN" || code == "NOT-FOUND") return 404;
  if (code == "BUSY") return 409;
  if (code == "EDIT-EXHAUSTED" || code == "PARSE-FAILED") return 422;
  if (gateway.contains(code)) return 502;
  return 500;
}

namespace {

void send_json(httplib::Response& res, int status, const std::string& body) {
  res.status = status;
  res.set_content(body, "application/json");
}

void send_json(httplib::Response& res, int status, const json& body) { send_json(res, status, body.dump()); }

void send_error(httplib::Response& res, const std::string& code, const std::string& message,
                const json& details = nullptr) {
  int status = http_status_for(code);
  send_json(res, status, json{{"status", status}, {"code", code}, {"message", message}, {"details", details}});
}

bool local_origin(const std::string& origin) {
  static const std::regex pattern(R"(https?://(localhost|127\.0\.0\.1|\[::1\])(:\d+)?)");
  return std::regex_match(origin, pattern);
}

json parse_body(const httplib::Request& req) {
  try {
    return json::parse(req.body);
  } catch (const json::exception& e) {
    throw Error("BAD-REQUEST", std::string("request body is not valid JSON: ") + e.what());
  }
}

int version_number(const std::string& text) {
  try {
    return std::stoi(text);
  } catch (const std::exception&) {
    throw Error("VERSION-UNKNOWN", "bad version '" + text + "'");
  }
}

json version_summary(const ProjectVersion& v) {
  std::vector<std::string> digests;
  for (const auto& t : v.transcripts) digests.push_back(t.prompt_digest);
  json out = {{"version", v.version},
              {"provenance", v.provenance.kind == Provenance::Kind::kGenerated ? "generated" : "edited"},
              {"beats", v.bundle.beats.size()},
              {"storylines", v.bundle.storylines.size()},
              {"nodes", v.payload.nodes.size()},
              {"transcript_digests", digests}};
  if (v.provenance.kind == Provenance::Kind::kEdited) out["edits"] = v.provenance.edits;
  return out;
}

}  // namespace

GrimServer::GrimServer(ServerConfig config, std::shared_ptr<CompletionProvider> provider, TemplateSet templates)
    : config_(std::move(config)),
      provider_(std::move(provider)),
      templates_(std::move(templates)),
      http_(std::make_unique<httplib::Server>()) {
  if (!std::filesystem::is_directory(config_.project_dir))
    throw Error("IO", "project directory " + config_.project_dir.string() + " does not exist");
  install_routes();
}

GrimServer::~GrimServer() { stop(); }

int GrimServer::bind() {
  int port = config_.port == 0 ? http_->bind_to_any_port(config_.host)
                               : (http_->bind_to_port(config_.host, config_.port) ? config_.port : -1);
  if (port < 0) throw Error("IO", "cannot bind " + config_.host + ":" + std::to_string(config_.port));
  return port;
}

void GrimServer::listen() { http_->listen_after_bind(); }

void GrimServer::stop() {
  if (http_) http_->stop();
}

void GrimServer::wait_until_ready() const { http_->wait_until_ready(); }

std::shared_ptr<std::mutex> GrimServer::project_mutex(const std::string& id) {
  std::lock_guard lock(locks_guard_);
  auto& slot = project_locks_[id];
  if (!slot) slot = std::make_shared<std::mutex>();
  return slot;
}

void GrimServer::install_routes() {
  auto& http = *http_;

  auto project_file = [this](const std::string& id) {
    static const std::regex id_pattern("[0-9A-Za-z_-]{1,64}");
    auto path = project_path(config_.project_dir, id);
    if (!std::regex_match(id, id_pattern) || !std::filesystem::exists(path))
      throw Error("PROJECT-UNKNOWN", "no project '" + id + "'", {{"project_id", id}});
    return path;
  };

  // Runs `body`, mapping errors to JSON responses.
  auto guarded = [](auto body) {
    return [body](const httplib::Request& req, httplib::Response& res) {
      try {
        body(req, res);
      } catch (const EditExhausted& e) {
        const auto& last = e.last();
        json diagnostics = last.diagnostics;
        send_error(res, e.code(), e.what(),
                   {{"attempts", last.attempts},
                    {"edit_report", last.edit_report},
                    {"validation", last.validation},
                    {"diagnostics", diagnostics}});
      } catch (const Error& e) {
        send_error(res, e.code(), e.what(), e.details());
      } catch (const std::exception& e) {
        send_error(res, "INTERNAL", e.what());
      }
    };
  };

  // Holds the project's mutation lock or answers 409.
  auto with_project_lock = [this](const std::string& id, auto body) {
    auto mutex = project_mutex(id);
    std::unique_lock lock(*mutex, std::try_to_lock);
    if (!lock.owns_lock())
      throw Error("BUSY", "another generation or edit is running for project " + id, {{"project_id", id}});
    body();
  };

  http.set_post_routing_handler([](const httplib::Request& req, httplib::Response& res) {
    std::string origin = req.get_header_value("Origin");
    if (!origin.empty() && local_origin(origin)) {
      res.set_header("Access-Control-Allow-Origin", origin);
      res.set_header("Vary", "Origin");
    }
  });
  http.Options(R"(/.*)", [](const httplib::Request&, httplib::Response& res) {
    res.status = 204;
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
    res.set_header("Access-Control-Max-Age", "600");
  });

  http.Get("/healthz", [](const httplib::Request&, httplib::Response& res) {
    send_json(res, 200, json{{"status", "ok"}});
  });

  http.Post("/projects", guarded([this](const httplib::Request& req, httplib::Response& res) {
              json body = parse_body(req);
              const json& spec_json = body.is_object() && body.contains("spec") ? body["spec"] : body;
              GenerationSpec spec;
              try {
                spec = spec_json.get<GenerationSpec>();
              } catch (const json::exception& e) {
                throw Error("SPEC-INVALID", std::string("malformed spec: ") + e.what());
              }
              Project project = new_project(spec);
              save_project(project, project_path(config_.project_dir, project.id));
              send_json(res, 201, json{{"project_id", project.id}});
            }));

  http.Post(R"(/projects/([^/]+)/generate)",
            guarded([this, project_file, with_project_lock](const httplib::Request& req, httplib::Response& res) {
              std::string id = req.matches[1];
              auto path = project_file(id);
              with_project_lock(id, [&] {
                Project project = load_project(path);
                GenerationOutcome outcome = generate_bundle(project.spec, *provider_, templates_);
                int version = add_generated_version(project, outcome);
                save_project(project, path);
                json diagnostics = outcome.diagnostics;
                send_json(res, 200,
                          json{{"version", version}, {"validation", outcome.validation}, {"diagnostics", diagnostics}});
              });
            }));

  http.Get(R"(/projects/([^/]+)/versions)",
           guarded([project_file](const httplib::Request& req, httplib::Response& res) {
             Project project = load_project(project_file(req.matches[1]));
             json out = json::array();
             for (const auto& v : project.versions) out.push_back(version_summary(v));
             send_json(res, 200, out);
           }));

  http.Get(R"(/projects/([^/]+)/versions/([^/]+)/graph)",
           guarded([project_file](const httplib::Request& req, httplib::Response& res) {
             Project project = load_project(project_file(req.matches[1]));
             const auto& v = project.version(version_number(req.matches[2]));
             send_json(res, 200, serialize_render_payload(v.payload));
           }));

  http.Get(R"(/projects/([^/]+)/versions/([^/]+)/storylines)",
           guarded([project_file](const httplib::Request& req, httplib::Response& res) {
             Project project = load_project(project_file(req.matches[1]));
             const auto& v = project.version(version_number(req.matches[2]));
             json out = v.bundle;
             out["version"] = v.version;
             out["computed_common_beats"] = computed_common_beats(v.bundle);
             send_json(res, 200, out);
           }));

  http.Post(R"(/projects/([^/]+)/edits)",
            guarded([this, project_file, with_project_lock](const httplib::Request& req, httplib::Response& res) {
              std::string id = req.matches[1];
              auto path = project_file(id);
              EditSet edits = parse_edit_set(parse_body(req));
              with_project_lock(id, [&] {
                Project project = load_project(path);
                ProjectEdit result = edit_project(project, edits, *provider_, templates_, config_.edit_options);
                save_project(project, path);
                json diagnostics = result.outcome.diagnostics;
                send_json(res, 200,
                          json{{"new_version", result.new_version},
                               {"attempts", result.outcome.attempts},
                               {"edits", result.outcome.edits},
                               {"edit_report", result.outcome.edit_report},
                               {"validation", result.outcome.validation},
                               {"diagnostics", diagnostics},
                               {"diff", result.diff}});
              });
            }));

  if (!config_.static_dir.empty()) {
    if (!http.set_mount_point("/", config_.static_dir.string()))
      throw Error("IO", "static directory " + config_.static_dir.string() + " does not exist");
  }

  http.set_error_handler([](const httplib::Request&, httplib::Response& res) {
    if (res.body.empty() && res.status == 404) send_error(res, "NOT-FOUND", "no such endpoint");
  });
}

}  // namespace grim
