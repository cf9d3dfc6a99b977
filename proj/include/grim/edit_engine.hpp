#pragma once

#include <map>
#include <set>
#include <string>
#include <vector>

#include "grim/error.hpp"
#include "grim/llm_gateway.hpp"
#include "grim/model.hpp"
#include "grim/prompt_forge.hpp"
#include "grim/storyline_parser.hpp"
#include "grim/validator.hpp"

namespace grim {

// Edit post-condition codes.
inline constexpr const char* kEditAddedBeats = "E1-ADDED-BEATS";
inline constexpr const char* kEditDeletedBeats = "E2-DELETED-BEATS";
inline constexpr const char* kEditAddedEdges = "E3-ADDED-EDGES";
inline constexpr const char* kEditDeletedEdges = "E4-DELETED-EDGES";
inline constexpr const char* kEditUntouchedBeats = "E5-UNTOUCHED-BEATS";

struct EditCheck {
  std::string code;
  Severity severity = Severity::kError;
  bool passed = true;
  std::vector<std::string> failures;

  friend bool operator==(const EditCheck&, const EditCheck&) = default;
};

struct EditReport {
  std::vector<EditCheck> checks;  // E1..E5 in order
  // Requested id -> id the added beat carries in the new bundle.
  std::map<BeatId, BeatId> matched_ids;

  /// True when every error-severity check passed.
  bool passed() const;
  const EditCheck* find(const std::string& code) const;
  /// One line per failure of an error-severity check.
  std::vector<std::string> error_messages() const;

  friend bool operator==(const EditReport&, const EditReport&) = default;
};

/// Post-conditions of a regenerated bundle. `edits` may carry unassigned ids;
/// they are numbered as the edit prompt numbered them.
///
/// E1 finds each added beat by normalized description anywhere in `updated`,
/// otherwise by its requested id when that id is new to `updated`. E5 is a
/// warning and skips deleted beats and endpoints of edited edges.
EditReport verify_edit(const StoryBundle& old_bundle, const StoryBundle& updated, const EditSet& edits);

/// Applies an id permutation built from `mapping` (from -> to); an occupied
/// target swaps places with the source. Storylines, pointers and declared
/// common beats follow. raw_text is left alone.
StoryBundle renumber_beats(const StoryBundle& bundle, const std::map<BeatId, BeatId>& mapping);

struct BundleDiff {
  std::set<BeatId> beats_added;
  std::set<BeatId> beats_removed;
  std::set<int> storylines_added;
  std::set<int> storylines_removed;
  std::set<int> storylines_changed;
  EdgeSet edges_added;
  EdgeSet edges_removed;

  bool empty() const;
  friend bool operator==(const BundleDiff&, const BundleDiff&) = default;
};

/// Storylines are compared by index; edges over the merged graphs.
BundleDiff diff_bundles(const StoryBundle& old_bundle, const StoryBundle& updated);

struct EditOptions {
  int max_attempts = 3;
  ParseOptions parse;
  /// Applied to the regenerated bundle; the storyline count is always
  /// checked as "at least the original".
  ValidatorOptions validation;
};

struct EditOutcome {
  StoryBundle new_bundle;
  EditSet edits;  // with assigned ids
  EditReport edit_report;
  ValidationReport validation;
  std::vector<ParseDiagnostic> diagnostics;
  int attempts = 0;
  std::vector<Transcript> transcripts;
};

/// Thrown when every attempt was rejected. Carries the last attempt's
/// reports and all transcripts.
class EditExhausted : public Error {
 public:
  EditExhausted(const std::string& message, EditOutcome last)
      : Error("EDIT-EXHAUSTED", message), last_(std::move(last)) {}
  const EditOutcome& last() const { return last_; }

 private:
  EditOutcome last_;
};

/// Regenerate-and-verify loop: prompt, complete, parse, verify_edit and
/// validate; on an error-severity failure re-prompt with the failures
/// appended, at most options.max_attempts times. Warnings never block.
///
/// Edit-set errors are raised before any completion is requested; gateway
/// errors propagate unchanged.
EditOutcome apply_edit(const StoryBundle& current, const EditSet& edits, CompletionProvider& provider,
                       const TemplateSet& templates, const EditOptions& options = {});

}  // namespace grim
