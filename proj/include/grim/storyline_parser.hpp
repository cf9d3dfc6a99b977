#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "grim/model.hpp"

namespace grim {

enum class Severity { kError, kWarning };

std::string_view to_string(Severity severity);

struct ParseDiagnostic {
  Severity severity = Severity::kError;
  std::string code;
  int line = 0;
  std::string message;

  friend bool operator==(const ParseDiagnostic&, const ParseDiagnostic&) = default;
};

struct ParseOptions {
  // Promote detailed-vs-master description drift from warning to error.
  bool strict_descriptions = false;
};

struct ParseResult {
  std::optional<StoryBundle> bundle;
  std::vector<ParseDiagnostic> diagnostics;

  bool ok() const { return bundle.has_value(); }
  std::vector<ParseDiagnostic> errors() const;
  std::vector<ParseDiagnostic> warnings() const;
};

/// Parses a generated storyline document into a StoryBundle.
///
/// Recognised shape (headers case-insensitive, "Beat 7" and "Beat_7" both
/// accepted, optional "- " / "* " bullets and "**" emphasis ignored):
///
///   Story: ... / Starts: N / Endings: N / Storylines: N / Setting: ...
///   Storylines (...):            detailed section, optional
///   Storyline k:                 followed by "Beat n: description" lines
///   START_k: Points to Beat n    optional pointer lines
///   END_k: Points from Beat n
///   Beats:                       master list, required
///   Beat n: description
///   Common intermediate Beats: Beat a, Beat b
///   Storylines (...)             numeric section, required
///   Storyline k: START_a, n1, n2, ..., END_b
///
/// Never throws; failures come back as error diagnostics and no bundle.
ParseResult parse_storyline_document(std::string_view text, const GenerationSpec& spec,
                                     const ParseOptions& options = {});

/// Inverse of parse_storyline_document. Deterministic; detailed storylines
/// use the master description for every beat.
std::string serialize_story_bundle(const StoryBundle& bundle);

}  // namespace grim
