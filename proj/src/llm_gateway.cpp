#include "grim/llm_gateway.hpp"

#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/text.hpp"

namespace grim {

std::string_view to_string(GatewayMode mode) {
  switch (mode) {
    case GatewayMode::kLive:
      return "live";
    case GatewayMode::kRecord:
      return "record";
    case GatewayMode::kReplay:
      return "replay";
  }
  return "live";
}

GatewayMode parse_gateway_mode(std::string_view name) {
  if (name == "live") return GatewayMode::kLive;
  if (name == "record") return GatewayMode::kRecord;
  if (name == "replay") return GatewayMode::kReplay;
  throw Error("CONFIG-INVALID", "unknown mode '" + std::string(name) + "' (live|record|replay)");
}

ProviderConfig ProviderConfig::with_environment() const {
  ProviderConfig out = *this;
  if (const char* v = std::getenv("GRIM_ENDPOINT"); v && *v) out.endpoint = v;
  if (const char* v = std::getenv("GRIM_MODEL"); v && *v) out.model_name = v;
  return out;
}

void ProviderConfig::check() const {
  if (temperature < 0.0 || temperature > 2.0) throw Error("CONFIG-INVALID", "temperature must lie in [0, 2]");
  if (max_output_tokens <= 0) throw Error("CONFIG-INVALID", "max_output_tokens must be positive");
  if (timeout.count() <= 0) throw Error("CONFIG-INVALID", "timeout must be positive");
  if (max_retries < 0 || max_retries > 10) throw Error("CONFIG-INVALID", "max_retries must lie in [0, 10]");
  if (mode != GatewayMode::kLive && fixture_dir.empty())
    throw Error("CONFIG-INVALID", std::string(to_string(mode)) + " mode needs a fixture directory");
  if (mode == GatewayMode::kReplay && !std::filesystem::is_directory(fixture_dir))
    throw Error("CONFIG-INVALID", "fixture directory " + fixture_dir.string() + " does not exist");
}

std::string normalize_prompt(std::string_view prompt_text) {
  std::vector<std::string> lines = text::split_lines(prompt_text);
  for (auto& line : lines) {
    while (!line.empty() && std::isspace(static_cast<unsigned char>(line.back()))) line.pop_back();
  }
  while (!lines.empty() && lines.back().empty()) lines.pop_back();
  return text::join(lines, "\n");
}

std::string prompt_digest(std::string_view prompt_text) { return text::sha256_hex(normalize_prompt(prompt_text)); }

std::filesystem::path fixture_path(const std::filesystem::path& dir, std::string_view digest) {
  return dir / (std::string(digest) + ".json");
}

namespace {

std::mutex& fixture_lock(const std::string& digest) {
  static std::mutex guard;
  static std::map<std::string, std::unique_ptr<std::mutex>> locks;
  std::lock_guard lock(guard);
  auto& slot = locks[digest];
  if (!slot) slot = std::make_unique<std::mutex>();
  return *slot;
}

struct Endpoint {
  std::string origin;  // scheme://host[:port]
  std::string path;
};

Endpoint split_endpoint(const std::string& url) {
  size_t scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw Error("CONFIG-INVALID", "endpoint must be an absolute URL: " + url);
  size_t path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

}  // namespace

void write_fixture(const std::filesystem::path& dir, const Transcript& transcript) {
  std::filesystem::create_directories(dir);
  auto target = fixture_path(dir, transcript.prompt_digest);
  std::lock_guard lock(fixture_lock(transcript.prompt_digest));
  std::mt19937_64 rng(std::random_device{}());
  auto tmp = target;
  tmp += ".tmp" + std::to_string(rng());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IO", "cannot write fixture " + tmp.string());
    out << json(transcript).dump(2) << "\n";
  }
  std::filesystem::rename(tmp, target);
}

Transcript read_fixture(const std::filesystem::path& dir, std::string_view digest) {
  auto path = fixture_path(dir, digest);
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error("FIXTURE-MISS", "no replay fixture for prompt digest " + std::string(digest),
                {{"digest", digest}, {"path", path.string()}});
  try {
    Transcript t = json::parse(in).get<Transcript>();
    return t;
  } catch (const nlohmann::json::exception& e) {
    throw Error("FIXTURE-CORRUPT", "fixture " + path.string() + " is unreadable: " + e.what());
  }
}

LlmGateway::LlmGateway(ProviderConfig config) : config_(std::move(config)) { config_.check(); }

Completion LlmGateway::complete(const PromptText& prompt) {
  Transcript t;
  t.prompt_digest = prompt_digest(prompt.text);
  t.prompt_text = prompt.text;
  t.model_name = config_.model_name;
  t.template_version = prompt.template_version;

  if (config_.mode == GatewayMode::kReplay) {
    Transcript stored = read_fixture(config_.fixture_dir, t.prompt_digest);
    stored.latency_ms = 0;
    if (stored.response_text.empty())
      throw Error("EMPTY-RESPONSE", "fixture " + t.prompt_digest + " holds an empty response");
    return {stored.response_text, stored};
  }

  auto started = std::chrono::steady_clock::now();
  t.response_text = call_provider(prompt.text);
  t.latency_ms =
      std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
  t.timestamp = text::utc_timestamp();
  if (config_.mode == GatewayMode::kRecord) write_fixture(config_.fixture_dir, t);
  return {t.response_text, t};
}

std::string LlmGateway::call_provider(const std::string& prompt_text) {
  const char* key = std::getenv("GRIM_API_KEY");
  bool have_key = key && *key;
  if (!have_key && config_.mode == GatewayMode::kLive)
    throw Error("CREDENTIAL-MISSING", "GRIM_API_KEY is not set");

  Endpoint ep = split_endpoint(config_.endpoint);
  httplib::Client client(ep.origin);
  client.set_connection_timeout(config_.timeout);
  client.set_read_timeout(config_.timeout);
  client.set_write_timeout(config_.timeout);
  httplib::Headers headers;
  if (have_key) headers.emplace("Authorization", std::string("Bearer ") + key);

  nlohmann::json body = {{"model", config_.model_name},
                         {"messages", {{{"role", "user"}, {"content", prompt_text}}}},
                         {"temperature", config_.temperature},
                         {"max_tokens", config_.max_output_tokens}};
  std::string payload = body.dump();

  std::string last_code = "NETWORK";
  std::string last_message;
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    if (attempt > 0) std::this_thread::sleep_for(config_.backoff_base * (1 << (attempt - 1)));
    auto res = client.Post(ep.path, headers, payload, "application/json");
    if (!res) {
      last_code = "NETWORK";
      last_message = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status == 429) {
      last_code = "RATE-LIMITED";
      last_message = "provider rate limit (HTTP 429)";
      continue;
    }
    if (res->status >= 500) {
      last_code = "NETWORK";
      last_message = "provider error HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200)
      throw Error("NETWORK", "provider rejected request with HTTP " + std::to_string(res->status),
                  {{"status", res->status}, {"body", res->body.substr(0, 2000)}});
    std::string content;
    try {
      auto j = nlohmann::json::parse(res->body);
      const auto& choice = j.at("choices").at(0);
      if (choice.contains("message") && choice["message"].contains("content") &&
          choice["message"]["content"].is_string()) {
        content = choice["message"]["content"].get<std::string>();
      } else if (choice.contains("text") && choice["text"].is_string()) {
        content = choice["text"].get<std::string>();
      }
    } catch (const nlohmann::json::exception&) {
      throw Error("EMPTY-RESPONSE", "provider response has no first choice");
    }
    if (text::trim(content).empty()) throw Error("EMPTY-RESPONSE", "provider returned an empty completion");
    return content;
  }
  throw Error(last_code, last_message + " after " + std::to_string(config_.max_retries + 1) + " attempts",
              {{"attempts", config_.max_retries + 1}});
}

Completion complete(const PromptText& prompt, const ProviderConfig& config) {
  return LlmGateway(config).complete(prompt);
}

}  // namespace grim
