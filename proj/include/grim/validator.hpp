#pragma once

#include <map>
#include <set>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "grim/model.hpp"
#include "grim/storyline_parser.hpp"

namespace grim {

// Violation codes.
inline constexpr const char* kCountStorylines = "V-COUNT-STORYLINES";
inline constexpr const char* kStarts = "V-STARTS";
inline constexpr const char* kEnds = "V-ENDS";
inline constexpr const char* kBeatBudget = "V-BEAT-BUDGET";
inline constexpr const char* kRunLength = "V-RUN-LENGTH";
inline constexpr const char* kCommonCount = "V-COMMON-COUNT";
inline constexpr const char* kCommonConsecutive = "V-COMMON-CONSECUTIVE";
inline constexpr const char* kCommonDeclaredMismatch = "V-COMMON-DECLARED-MISMATCH";
inline constexpr const char* kSimplePath = "V-SIMPLE-PATH";
inline constexpr const char* kDuplicateStoryline = "V-DUPLICATE-STORYLINE";
inline constexpr const char* kCycle = "V-CYCLE";

struct Violation {
  std::string code;
  Severity severity = Severity::kError;
  std::vector<int> storylines;  // implicated storyline indices, ascending
  std::vector<BeatId> beats;    // implicated beat ids
  std::string detail;

  friend bool operator==(const Violation&, const Violation&) = default;
  friend auto operator<=>(const Violation& a, const Violation& b) {
    return std::tie(a.code, a.storylines, a.beats, a.severity, a.detail) <=>
           std::tie(b.code, b.storylines, b.beats, b.severity, b.detail);
  }
};

struct ValidationStats {
  int unique_beats = 0;
  int max_pairwise_run = 0;
  std::set<BeatId> computed_common_beats;

  friend bool operator==(const ValidationStats&, const ValidationStats&) = default;
};

struct ValidationReport {
  std::vector<Violation> violations;
  ValidationStats stats;

  bool has_errors() const;
  std::vector<Violation> errors() const;
  std::vector<Violation> warnings() const;
  std::vector<Violation> with_code(const std::string& code) const;

  friend bool operator==(const ValidationReport&, const ValidationReport&) = default;
};

struct ValidatorOptions {
  enum class StorylineCount { kExact, kAtLeast };

  StorylineCount storyline_count = StorylineCount::kExact;
  int max_common_run = 3;
  int min_common_beats = 2;
  int max_common_beats = 3;
  int beat_budget_factor = 2;
  // Overrides of the default severity per code.
  std::map<std::string, Severity> severity;
};

struct CommonRun {
  int length = 0;
  int position_a = 0;
  int position_b = 0;

  friend bool operator==(const CommonRun&, const CommonRun&) = default;
};

/// Longest contiguous run shared by two beat sequences. Ties go to the
/// earliest position in `a`, then in `b`. Length 0 (positions 0) when the
/// sequences share no beat.
CommonRun longest_common_run(std::span<const BeatId> a, std::span<const BeatId> b);

/// Intersection of the beat sets of all storylines (empty for no storylines).
std::set<BeatId> computed_common_beats(const StoryBundle& bundle);

/// Strongly connected components with a cycle (size >= 2, or a self loop)
/// among beat nodes, each sorted ascending.
std::vector<std::vector<BeatId>> beat_cycles(const NarrativeGraph& graph);

Severity default_severity(const std::string& code);

ValidationReport validate(const StoryBundle& bundle, const ValidatorOptions& options = {});

}  // namespace grim
