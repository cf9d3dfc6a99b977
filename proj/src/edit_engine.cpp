#include "grim/edit_engine.hpp"

#include <algorithm>
#include <iterator>

#include "grim/text.hpp"

namespace grim {

bool EditReport::passed() const {
  return std::all_of(checks.begin(), checks.end(),
                     [](const EditCheck& c) { return c.passed || c.severity != Severity::kError; });
}

const EditCheck* EditReport::find(const std::string& code) const {
  for (const auto& c : checks)
    if (c.code == code) return &c;
  return nullptr;
}

std::vector<std::string> EditReport::error_messages() const {
  std::vector<std::string> out;
  for (const auto& c : checks)
    if (c.severity == Severity::kError)
      for (const auto& f : c.failures) out.push_back(c.code + ": " + f);
  return out;
}

namespace {

std::string list_ints(const std::vector<int>& xs) {
  std::vector<std::string> parts;
  for (int x : xs) parts.push_back(std::to_string(x));
  return text::join(parts, ", ");
}

// Storyline indices in which `a` is immediately followed by `b`.
std::vector<int> storylines_with_transition(const StoryBundle& bundle, BeatId a, BeatId b) {
  std::vector<int> out;
  for (const auto& s : bundle.storylines)
    for (size_t i = 0; i + 1 < s.beat_ids.size(); ++i)
      if (s.beat_ids[i] == a && s.beat_ids[i + 1] == b) {
        out.push_back(s.index);
        break;
      }
  return out;
}

EditCheck make_check(const char* code, Severity severity = Severity::kError) {
  EditCheck c;
  c.code = code;
  c.severity = severity;
  return c;
}

void fail(EditCheck& check, std::string message) {
  check.passed = false;
  check.failures.push_back(std::move(message));
}

}  // namespace

EditReport verify_edit(const StoryBundle& old_bundle, const StoryBundle& updated, const EditSet& raw_edits) {
  EditSet edits = assign_provisional_ids(old_bundle, raw_edits);
  EditReport report;

  std::map<std::string, BeatId> by_description;
  for (const auto& [id, beat] : updated.beats)
    by_description.emplace(text::normalize_description(beat.description), id);

  EditCheck e1 = make_check(kEditAddedBeats);
  for (const auto& n : edits.nodes_added) {
    std::string key = text::normalize_description(n.description);
    auto same_id = updated.beats.find(n.id);
    if (same_id != updated.beats.end() && text::normalize_description(same_id->second.description) == key) {
      report.matched_ids[n.id] = n.id;
    } else if (auto it = by_description.find(key); it != by_description.end()) {
      report.matched_ids[n.id] = it->second;
    } else if (same_id != updated.beats.end() && !old_bundle.beats.contains(n.id)) {
      report.matched_ids[n.id] = n.id;
    } else {
      fail(e1, "added beat " + std::to_string(n.id) + " (\"" + n.description + "\") is missing");
    }
  }
  report.checks.push_back(std::move(e1));

  EditCheck e2 = make_check(kEditDeletedBeats);
  for (BeatId id : edits.nodes_deleted) {
    std::vector<int> where;
    for (const auto& s : updated.storylines)
      if (std::find(s.beat_ids.begin(), s.beat_ids.end(), id) != s.beat_ids.end()) where.push_back(s.index);
    if (!where.empty())
      fail(e2, "deleted beat " + std::to_string(id) + " still appears in storyline(s) " + list_ints(where));
  }
  report.checks.push_back(std::move(e2));

  auto actual = [&](BeatId id) {
    auto it = report.matched_ids.find(id);
    return it == report.matched_ids.end() ? id : it->second;
  };

  EditCheck e3 = make_check(kEditAddedEdges);
  for (const auto& [a, b] : edits.edges_added)
    if (storylines_with_transition(updated, actual(a), actual(b)).empty())
      fail(e3, "no storyline moves from Beat " + std::to_string(a) + " to Beat " + std::to_string(b));
  report.checks.push_back(std::move(e3));

  EditCheck e4 = make_check(kEditDeletedEdges);
  for (const auto& [a, b] : edits.edges_deleted) {
    auto where = storylines_with_transition(updated, a, b);
    if (!where.empty())
      fail(e4, "deleted transition Beat " + std::to_string(a) + " -> Beat " + std::to_string(b) +
                   " still used by storyline(s) " + list_ints(where));
  }
  report.checks.push_back(std::move(e4));

  EditCheck e5 = make_check(kEditUntouchedBeats, Severity::kWarning);
  std::set<BeatId> touched(edits.nodes_deleted.begin(), edits.nodes_deleted.end());
  for (const auto& edge_set : {edits.edges_added, edits.edges_deleted})
    for (const auto& [a, b] : edge_set) touched.insert({a, b});
  for (const auto& [id, beat] : old_bundle.beats) {
    if (touched.contains(id)) continue;
    auto it = updated.beats.find(id);
    if (it == updated.beats.end()) continue;
    if (text::normalize_description(it->second.description) != text::normalize_description(beat.description))
      fail(e5, "beat " + std::to_string(id) + " changed description");
  }
  report.checks.push_back(std::move(e5));
  return report;
}

namespace {

void swap_ids(StoryBundle& bundle, BeatId x, BeatId y) {
  if (x == y) return;
  auto f = [&](BeatId id) { return id == x ? y : id == y ? x : id; };
  std::map<BeatId, Beat> beats;
  for (auto& [id, beat] : bundle.beats) {
    Beat moved = beat;
    moved.id = f(id);
    beats.emplace(moved.id, std::move(moved));
  }
  bundle.beats = std::move(beats);
  for (auto& s : bundle.storylines)
    for (auto& id : s.beat_ids) id = f(id);
  for (auto& [_, id] : bundle.starts) id = f(id);
  for (auto& [_, id] : bundle.ends) id = f(id);
  std::set<BeatId> common;
  for (BeatId id : bundle.declared_common_beats) common.insert(f(id));
  bundle.declared_common_beats = std::move(common);
}

}  // namespace

StoryBundle renumber_beats(const StoryBundle& bundle, const std::map<BeatId, BeatId>& mapping) {
  StoryBundle out = bundle;
  // position[original id] = id it carries now
  std::map<BeatId, BeatId> position;
  auto where = [&](BeatId id) {
    auto it = position.find(id);
    return it == position.end() ? id : it->second;
  };
  for (const auto& [from, to] : mapping) {
    BeatId current = where(from);
    if (current == to) continue;
    // whichever original id currently sits at `to` moves to `current`
    BeatId displaced = to;
    for (const auto& [orig, pos] : position)
      if (pos == to) displaced = orig;
    swap_ids(out, current, to);
    position[from] = to;
    position[displaced] = current;
  }
  return out;
}

bool BundleDiff::empty() const {
  return beats_added.empty() && beats_removed.empty() && storylines_added.empty() && storylines_removed.empty() &&
         storylines_changed.empty() && edges_added.empty() && edges_removed.empty();
}

BundleDiff diff_bundles(const StoryBundle& old_bundle, const StoryBundle& updated) {
  BundleDiff d;
  for (const auto& [id, _] : updated.beats)
    if (!old_bundle.beats.contains(id)) d.beats_added.insert(id);
  for (const auto& [id, _] : old_bundle.beats)
    if (!updated.beats.contains(id)) d.beats_removed.insert(id);
  for (const auto& s : updated.storylines) {
    const Storyline* before = old_bundle.find_storyline(s.index);
    if (!before)
      d.storylines_added.insert(s.index);
    else if (!(*before == s))
      d.storylines_changed.insert(s.index);
  }
  for (const auto& s : old_bundle.storylines)
    if (!updated.find_storyline(s.index)) d.storylines_removed.insert(s.index);

  EdgeSet before = merge_transitions(old_bundle).edges;
  EdgeSet after = merge_transitions(updated).edges;
  std::set_difference(after.begin(), after.end(), before.begin(), before.end(),
                      std::inserter(d.edges_added, d.edges_added.end()));
  std::set_difference(before.begin(), before.end(), after.begin(), after.end(),
                      std::inserter(d.edges_removed, d.edges_removed.end()));
  return d;
}

EditOutcome apply_edit(const StoryBundle& current, const EditSet& edits, CompletionProvider& provider,
                       const TemplateSet& templates, const EditOptions& options) {
  if (options.max_attempts < 1) throw Error("CONFIG-INVALID", "edit needs at least one attempt");
  EditSet resolved = resolve_edit_set(current, edits);

  ValidatorOptions vopts = options.validation;
  vopts.storyline_count = ValidatorOptions::StorylineCount::kAtLeast;

  EditOutcome outcome;
  outcome.edits = resolved;
  std::vector<std::string> corrections;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    PromptText prompt = build_edit_prompt(templates, current, resolved, corrections);
    Completion completion = provider.complete(prompt);
    outcome.attempts = attempt;
    outcome.transcripts.push_back(completion.transcript);
    corrections.clear();

    ParseResult parsed = parse_storyline_document(completion.text, current.spec, options.parse);
    outcome.diagnostics = parsed.diagnostics;
    if (!parsed.ok()) {
      outcome.edit_report = {};
      outcome.validation = {};
      for (const auto& d : parsed.errors())
        corrections.push_back("line " + std::to_string(d.line) + ": " + d.code + ": " + d.message);
      continue;
    }

    StoryBundle candidate = std::move(*parsed.bundle);
    EditReport report = verify_edit(current, candidate, resolved);
    std::map<BeatId, BeatId> back;
    for (const auto& [requested, found] : report.matched_ids)
      if (requested != found) back[found] = requested;
    if (!back.empty()) {
      candidate = renumber_beats(candidate, back);
      candidate.raw_text = serialize_story_bundle(candidate);
      report = verify_edit(current, candidate, resolved);
    }

    outcome.new_bundle = candidate;
    outcome.edit_report = report;
    outcome.validation = validate(candidate, vopts);
    if (report.passed() && !outcome.validation.has_errors()) return outcome;

    corrections = report.error_messages();
    for (const auto& v : outcome.validation.errors()) corrections.push_back(v.code + ": " + v.detail);
  }
  throw EditExhausted("edit rejected after " + std::to_string(outcome.attempts) + " attempt(s)", outcome);
}

}  // namespace grim
