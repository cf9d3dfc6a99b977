#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "grim/edit_engine.hpp"
#include "grim/llm_gateway.hpp"
#include "grim/prompt_forge.hpp"

namespace httplib {
class Server;
}

namespace grim {

struct ServerConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path project_dir = ".";
  std::filesystem::path static_dir;  // empty: no static files
  EditOptions edit_options;
};

/// JSON API over the project directory.
///
///   POST /projects                              201 {project_id}
///   POST /projects/{id}/generate                200 {version, validation, diagnostics}
///   GET  /projects/{id}/versions                200 [version summaries]
///   GET  /projects/{id}/versions/{v}/graph      200 render payload
///   GET  /projects/{id}/versions/{v}/storylines 200 bundle JSON
///   POST /projects/{id}/edits                   200 {new_version, edit_report, validation, diff}
///   GET  /healthz                               200
///
/// Errors are {"status", "code", "message", "details"}: 400 bad request or
/// edit set, 404 unknown project/version, 409 mutation already running for
/// the project, 422 parse failure or edit rejected after every attempt,
/// 502 gateway failure, 500 anything else.
class GrimServer {
 public:
  GrimServer(ServerConfig config, std::shared_ptr<CompletionProvider> provider, TemplateSet templates);
  ~GrimServer();
  GrimServer(const GrimServer&) = delete;
  GrimServer& operator=(const GrimServer&) = delete;

  /// Binds the socket; returns the bound port. Throws Error("IO").
  int bind();
  /// Blocks serving requests until stop().
  void listen();
  void stop();
  void wait_until_ready() const;

 private:
  void install_routes();
  std::shared_ptr<std::mutex> project_mutex(const std::string& id);

  ServerConfig config_;
  std::shared_ptr<CompletionProvider> provider_;
  TemplateSet templates_;
  std::unique_ptr<httplib::Server> http_;
  std::mutex locks_guard_;
  std::map<std::string, std::shared_ptr<std::mutex>> project_locks_;
};

/// HTTP status for an Error code.
int http_status_for(const std::string& code);

}  // namespace grim
