#include <gtest/gtest.h>
#include <httplib.h>

#include <atomic>
#include <condition_variable>
#include <future>
#include <nlohmann/json.hpp>
#include <thread>

#include "grim/graph_builder.hpp"
#include "grim/json_codec.hpp"
#include "grim/project_store.hpp"
#include "grim/server.hpp"
#include "test_support.hpp"

using namespace grim;
using nlohmann::json;

namespace {

std::shared_ptr<CompletionProvider> replay_provider() {
  ProviderConfig c;
  c.mode = GatewayMode::kReplay;
  c.fixture_dir = fx::replay_dir();
  return std::make_shared<LlmGateway>(c);
}

/// Blocks every completion until released; then answers like the replay gateway.
class GateProvider : public CompletionProvider {
 public:
  Completion complete(const PromptText& prompt) override {
    {
      std::unique_lock lock(mutex_);
      ++waiting_;
      changed_.notify_all();
      changed_.wait(lock, [&] { return open_; });
    }
    return replay_provider()->complete(prompt);
  }
  void wait_for_caller() {
    std::unique_lock lock(mutex_);
    changed_.wait(lock, [&] { return waiting_ > 0; });
  }
  void release() {
    std::lock_guard lock(mutex_);
    open_ = true;
    changed_.notify_all();
  }

 private:
  std::mutex mutex_;
  std::condition_variable changed_;
  int waiting_ = 0;
  bool open_ = false;
};

/// Always answers with the same fixed document.
class FixedProvider : public CompletionProvider {
 public:
  explicit FixedProvider(std::string answer) : answer_(std::move(answer)) {}
  Completion complete(const PromptText& prompt) override {
    ++calls;
    Transcript t;
    t.prompt_digest = prompt_digest(prompt.text);
    t.prompt_text = prompt.text;
    t.response_text = answer_;
    return {answer_, t};
  }
  std::atomic<int> calls{0};

 private:
  std::string answer_;
};

class RunningServer {
 public:
  explicit RunningServer(std::shared_ptr<CompletionProvider> provider, ServerConfig config = {}) {
    config.port = 0;
    config.project_dir = dir_.path();
    server_ = std::make_unique<GrimServer>(config, std::move(provider), fx::templates());
    port_ = server_->bind();
    thread_ = std::thread([this] { server_->listen(); });
    server_->wait_until_ready();
    client_ = std::make_unique<httplib::Client>("127.0.0.1", port_);
    client_->set_read_timeout(std::chrono::seconds(30));
  }
  ~RunningServer() {
    server_->stop();
    thread_.join();
  }

  httplib::Client& client() { return *client_; }
  const fx::TempDir& dir() const { return dir_; }

  httplib::Result post(const std::string& path, const json& body) {
    return client_->Post(path, body.dump(), "application/json");
  }

  std::string create_frankenstein() {
    auto res = post("/projects", {{"spec", fx::frankenstein_spec()}});
    EXPECT_EQ(res->status, 201) << res->body;
    return json::parse(res->body).at("project_id");
  }

 private:
  fx::TempDir dir_;
  std::unique_ptr<GrimServer> server_;
  std::unique_ptr<httplib::Client> client_;
  std::thread thread_;
  int port_ = 0;
};

json frankenstein_spec_json() {
  return {{"story", "Frankenstein"}, {"setting", "21st century"}, {"n_starts", 1}, {"n_endings", 2}, {"n_storylines", 4}};
}

json designer_edit() { return json::parse(fx::slurp(fx::fixture("frankenstein_edit.json"))); }

}  // namespace

TEST(Server, StatusMapping) {
  EXPECT_EQ(http_status_for("BAD-REQUEST"), 400);
  EXPECT_EQ(http_status_for("EDIT-REF-UNKNOWN"), 400);
  EXPECT_EQ(http_status_for("PROJECT-UNKNOWN"), 404);
  EXPECT_EQ(http_status_for("BUSY"), 409);
  EXPECT_EQ(http_status_for("EDIT-EXHAUSTED"), 422);
  EXPECT_EQ(http_status_for("FIXTURE-MISS"), 502);
  EXPECT_EQ(http_status_for("RATE-LIMITED"), 502);
  EXPECT_EQ(http_status_for("IO"), 500);
}

TEST(Server, HealthAndUnknownRoute) {
  RunningServer s(replay_provider());
  auto ok = s.client().Get("/healthz");
  ASSERT_TRUE(ok);
  EXPECT_EQ(ok->status, 200);
  auto missing = s.client().Get("/nope");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);
  EXPECT_EQ(json::parse(missing->body).at("code"), "NOT-FOUND");
}

TEST(Server, GenerateEditAndRead) {
  RunningServer s(replay_provider());
  std::string id = s.create_frankenstein();
  EXPECT_TRUE(std::filesystem::exists(project_path(s.dir().path(), id)));

  auto gen = s.post("/projects/" + id + "/generate", json::object());
  ASSERT_EQ(gen->status, 200) << gen->body;
  json g = json::parse(gen->body);
  EXPECT_EQ(g.at("version"), 1);
  EXPECT_TRUE(g.at("validation").at("ok").get<bool>());

  auto edit = s.post("/projects/" + id + "/edits", designer_edit());
  ASSERT_EQ(edit->status, 200) << edit->body;
  json e = json::parse(edit->body);
  EXPECT_EQ(e.at("new_version"), 2);
  EXPECT_EQ(e.at("attempts"), 1);
  EXPECT_TRUE(e.at("edit_report").at("passed").get<bool>());
  EXPECT_NE(std::find(e.at("diff").at("edges_added").begin(), e.at("diff").at("edges_added").end(),
                      json::array({2, 18})),
            e.at("diff").at("edges_added").end());
  EXPECT_EQ(e.at("diff").at("storylines_added"), json::array({5}));

  auto versions = s.client().Get("/projects/" + id + "/versions");
  ASSERT_EQ(versions->status, 200);
  json v = json::parse(versions->body);
  ASSERT_EQ(v.size(), 2u);
  EXPECT_EQ(v[0].at("provenance"), "generated");
  EXPECT_EQ(v[1].at("provenance"), "edited");
  EXPECT_EQ(v[1].at("storylines"), 5);
  EXPECT_EQ(v[1].at("nodes"), 26);

  auto graph = s.client().Get("/projects/" + id + "/versions/1/graph");
  ASSERT_EQ(graph->status, 200);
  EXPECT_EQ(graph->get_header_value("Content-Type"), "application/json");
  EXPECT_EQ(graph->body, serialize_render_payload(build_render_payload(fx::frankenstein())));

  auto lines = s.client().Get("/projects/" + id + "/versions/2/storylines");
  ASSERT_EQ(lines->status, 200);
  json l = json::parse(lines->body);
  EXPECT_EQ(l.at("version"), 2);
  EXPECT_EQ(l.at("storylines").size(), 5u);
  EXPECT_EQ(l.at("storylines").at(4).at("beats"), json::array({1, 2, 18, 19, 20, 3, 4, 21, 22, 23}));
  EXPECT_EQ(l.at("computed_common_beats"), json::array({1, 2, 3}));
}

TEST(Server, BareSpecBodyAccepted) {
  RunningServer s(replay_provider());
  auto res = s.post("/projects", frankenstein_spec_json());
  EXPECT_EQ(res->status, 201);
}

TEST(Server, ClientErrors) {
  RunningServer s(replay_provider());
  auto bad_json = s.client().Post("/projects", "{oops", "application/json");
  EXPECT_EQ(bad_json->status, 400);
  EXPECT_EQ(json::parse(bad_json->body).at("code"), "BAD-REQUEST");

  json bad_spec = frankenstein_spec_json();
  bad_spec["n_starts"] = 0;
  EXPECT_EQ(s.post("/projects", bad_spec)->status, 400);
  EXPECT_EQ(s.post("/projects", json{{"story", "x"}})->status, 400);

  EXPECT_EQ(s.post("/projects/nope/generate", json::object())->status, 404);
  EXPECT_EQ(s.client().Get("/projects/..%2Fetc/versions")->status, 404);

  std::string id = s.create_frankenstein();
  EXPECT_EQ(s.client().Get("/projects/" + id + "/versions/1/graph")->status, 404);
  ASSERT_EQ(s.post("/projects/" + id + "/generate", json::object())->status, 200);
  EXPECT_EQ(s.client().Get("/projects/" + id + "/versions/9/storylines")->status, 404);
  EXPECT_EQ(s.client().Get("/projects/" + id + "/versions/x/graph")->status, 404);

  auto empty_edit = s.post("/projects/" + id + "/edits", json::object());
  EXPECT_EQ(empty_edit->status, 400);
  EXPECT_EQ(json::parse(empty_edit->body).at("code"), "EDIT-EMPTY");
  auto unknown = s.post("/projects/" + id + "/edits", json{{"nodes_deleted", {99}}});
  EXPECT_EQ(unknown->status, 400);
  EXPECT_EQ(json::parse(unknown->body).at("code"), "EDIT-REF-UNKNOWN");
  EXPECT_EQ(s.post("/projects/" + id + "/edits", json{{"nodes_added", "x"}})->status, 400);
}

TEST(Server, GatewayMissIs502) {
  RunningServer s(replay_provider());
  auto res = s.post("/projects", {{"spec", {{"story", "Dracula"},
                                            {"setting", "Ancient Rome"},
                                            {"n_starts", 1},
                                            {"n_endings", 2},
                                            {"n_storylines", 4}}}});
  std::string id = json::parse(res->body).at("project_id");
  auto gen = s.post("/projects/" + id + "/generate", json::object());
  EXPECT_EQ(gen->status, 502);
  json body = json::parse(gen->body);
  EXPECT_EQ(body.at("code"), "FIXTURE-MISS");
  EXPECT_EQ(body.at("details").at("digest").get<std::string>().size(), 64u);
}

TEST(Server, RejectedEditIs422WithReports) {
  auto fixed = std::make_shared<FixedProvider>(fx::slurp(fx::fixture("frankenstein_21st_century.txt")));
  ServerConfig config;
  config.edit_options.max_attempts = 2;
  RunningServer s(fixed, config);
  std::string id = s.create_frankenstein();
  ASSERT_EQ(s.post("/projects/" + id + "/generate", json::object())->status, 200);
  auto res = s.post("/projects/" + id + "/edits", designer_edit());
  EXPECT_EQ(res->status, 422);
  json body = json::parse(res->body);
  EXPECT_EQ(body.at("code"), "EDIT-EXHAUSTED");
  EXPECT_EQ(body.at("details").at("attempts"), 2);
  EXPECT_FALSE(body.at("details").at("edit_report").at("passed").get<bool>());
  EXPECT_EQ(fixed->calls, 3);

  auto versions = json::parse(s.client().Get("/projects/" + id + "/versions")->body);
  EXPECT_EQ(versions.size(), 1u);
}

TEST(Server, UnparseableGenerationIs422) {
  RunningServer s(std::make_shared<FixedProvider>("no storylines here"));
  std::string id = s.create_frankenstein();
  auto res = s.post("/projects/" + id + "/generate", json::object());
  EXPECT_EQ(res->status, 422);
  EXPECT_EQ(json::parse(res->body).at("code"), "PARSE-FAILED");
}

TEST(Server, ConcurrentMutationIs409) {
  auto gate = std::make_shared<GateProvider>();
  RunningServer s(gate);
  std::string id = s.create_frankenstein();

  auto first = std::async(std::launch::async, [&] {
    httplib::Client c2(s.client().host(), s.client().port());
    c2.set_read_timeout(std::chrono::seconds(30));
    auto r = c2.Post("/projects/" + id + "/generate", "{}", "application/json");
    return r ? r->status : -1;
  });
  gate->wait_for_caller();
  auto second = s.post("/projects/" + id + "/generate", json::object());
  EXPECT_EQ(second->status, 409);
  EXPECT_EQ(json::parse(second->body).at("code"), "BUSY");
  EXPECT_EQ(s.client().Get("/projects/" + id + "/versions")->status, 200);
  gate->release();
  EXPECT_EQ(first.get(), 200);
}

TEST(Server, CorsForLocalOrigins) {
  RunningServer s(replay_provider());
  auto local = s.client().Get("/healthz", {{"Origin", "http://localhost:5173"}});
  EXPECT_EQ(local->get_header_value("Access-Control-Allow-Origin"), "http://localhost:5173");
  auto remote = s.client().Get("/healthz", {{"Origin", "https://example.com"}});
  EXPECT_FALSE(remote->has_header("Access-Control-Allow-Origin"));
  auto preflight = s.client().Options("/projects", {{"Origin", "http://127.0.0.1:3000"}});
  EXPECT_EQ(preflight->status, 204);
  EXPECT_NE(preflight->get_header_value("Access-Control-Allow-Methods").find("POST"), std::string::npos);
}

TEST(Server, StaticFilesWhenConfigured) {
  fx::TempDir web;
  write_file_atomic(web / "index.html", "<html>grim</html>");
  ServerConfig config;
  config.static_dir = web.path();
  RunningServer s(replay_provider(), config);
  auto res = s.client().Get("/index.html");
  ASSERT_EQ(res->status, 200);
  EXPECT_EQ(res->body, "<html>grim</html>");
  EXPECT_EQ(s.client().Get("/healthz")->status, 200);
}
