#pragma once

#include <stdexcept>
#include <string>
#include <utility>

#include <nlohmann/json.hpp>

namespace grim {

// Every failure that crosses a module boundary carries a short machine code
// (e.g. "FIXTURE-MISS", "EDIT-REF-UNKNOWN") plus free-form details.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, nlohmann::json details = nullptr)
      : std::runtime_error(message), code_(std::move(code)), details_(std::move(details)) {}

  const std::string& code() const noexcept { return code_; }
  const nlohmann::json& details() const noexcept { return details_; }

 private:
  std::string code_;
  nlohmann::json details_;
};

}  // namespace grim
