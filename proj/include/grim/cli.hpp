#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <string_view>

#include "grim/llm_gateway.hpp"
#include "grim/model.hpp"

namespace grim::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitRuntime = 3;

using ProviderFactory = std::function<std::shared_ptr<CompletionProvider>(const ProviderConfig&)>;

/// Runs one grim command. Machine output (JSON) goes to `out`, messages to
/// `err`. `factory` defaults to constructing an LlmGateway.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err, ProviderFactory factory = {});

/// Spec fields read from a storyline document's header lines ("Story:",
/// "Setting:", "Starts:", "Endings:", "Storylines:"); missing counts
/// default to 1.
GenerationSpec spec_from_header(std::string_view document);

}  // namespace grim::cli
