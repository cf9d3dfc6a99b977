#pragma once

#include <chrono>
#include <filesystem>
#include <string>
#include <string_view>

#include "grim/prompt_forge.hpp"

namespace grim {

enum class GatewayMode { kLive, kRecord, kReplay };

std::string_view to_string(GatewayMode mode);
/// "live" | "record" | "replay"; throws Error("CONFIG-INVALID").
GatewayMode parse_gateway_mode(std::string_view name);

struct ProviderConfig {
  std::string endpoint = "https://api.openai.com/v1/chat/completions";
  std::string model_name = "gpt-4";
  double temperature = 0.0;
  int max_output_tokens = 4096;
  std::chrono::seconds timeout{120};
  int max_retries = 3;
  std::chrono::milliseconds backoff_base{500};
  GatewayMode mode = GatewayMode::kLive;
  std::filesystem::path fixture_dir;

  /// Applies GRIM_ENDPOINT / GRIM_MODEL overrides.
  ProviderConfig with_environment() const;
  /// Throws Error("CONFIG-INVALID").
  void check() const;
};

struct Transcript {
  std::string prompt_digest;
  std::string prompt_text;
  std::string response_text;
  std::string model_name;
  std::string template_version;
  std::string timestamp;  // ISO-8601 UTC
  long long latency_ms = 0;

  friend bool operator==(const Transcript&, const Transcript&) = default;
};

struct Completion {
  std::string text;
  Transcript transcript;
};

/// Trailing whitespace stripped per line, CRLF folded, trailing blank lines
/// dropped.
std::string normalize_prompt(std::string_view prompt_text);
std::string prompt_digest(std::string_view prompt_text);

std::filesystem::path fixture_path(const std::filesystem::path& dir, std::string_view digest);
/// Atomic write of <dir>/<digest>.json (last writer wins).
void write_fixture(const std::filesystem::path& dir, const Transcript& transcript);
/// Throws Error("FIXTURE-MISS") naming the digest.
Transcript read_fixture(const std::filesystem::path& dir, std::string_view digest);

/// Anything that turns a prompt into model text. The edit engine, CLI and
/// server depend on this, so tests can script responses.
class CompletionProvider {
 public:
  virtual ~CompletionProvider() = default;
  virtual Completion complete(const PromptText& prompt) = 0;
};

/// Chat-completion client with live, record and replay modes.
///
/// live   - one user message per call; transient failures (transport errors,
///          HTTP 429 and 5xx) retried with exponential backoff up to
///          max_retries. Errors: NETWORK, RATE-LIMITED, EMPTY-RESPONSE,
///          CREDENTIAL-MISSING.
/// record - live call, then the transcript is stored as a fixture.
/// replay - fixture keyed by prompt digest, no network; FIXTURE-MISS when
///          absent. Latency is reported as 0.
///
/// The credential comes from GRIM_API_KEY. Live mode requires it; record mode
/// forwards it when present; replay never reads it.
class LlmGateway : public CompletionProvider {
 public:
  explicit LlmGateway(ProviderConfig config);

  Completion complete(const PromptText& prompt) override;
  const ProviderConfig& config() const { return config_; }

 private:
  std::string call_provider(const std::string& prompt_text);

  ProviderConfig config_;
};

/// One-shot convenience over LlmGateway.
Completion complete(const PromptText& prompt, const ProviderConfig& config);

}  // namespace grim
