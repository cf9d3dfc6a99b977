#include "grim/validator.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <sstream>

namespace grim {

namespace {

std::string join_ids(const std::vector<int>& ids, std::string_view sep = ",") {
  std::ostringstream out;
  for (size_t i = 0; i < ids.size(); ++i) out << (i ? sep : "") << ids[i];
  return out.str();
}

std::vector<int> sorted_vector(const std::set<int>& s) { return {s.begin(), s.end()}; }

// Shortest cycle through `root` restricted to `members` (BFS back to root).
std::vector<BeatId> witness_cycle(BeatId root, const std::set<BeatId>& members,
                                  const std::map<BeatId, std::set<BeatId>>& adj) {
  std::map<BeatId, BeatId> parent;
  std::deque<BeatId> queue{root};
  while (!queue.empty()) {
    BeatId at = queue.front();
    queue.pop_front();
    auto it = adj.find(at);
    if (it == adj.end()) continue;
    for (BeatId next : it->second) {
      if (!members.contains(next)) continue;
      if (next == root) {
        std::vector<BeatId> path{root};
        for (BeatId p = at; p != root; p = parent.at(p)) path.insert(path.begin() + 1, p);
        path.push_back(root);
        return path;
      }
      if (parent.emplace(next, at).second) queue.push_back(next);
    }
  }
  return {root, root};
}

}  // namespace

bool ValidationReport::has_errors() const {
  return std::any_of(violations.begin(), violations.end(),
                     [](const Violation& v) { return v.severity == Severity::kError; });
}

std::vector<Violation> ValidationReport::errors() const {
  std::vector<Violation> out;
  std::copy_if(violations.begin(), violations.end(), std::back_inserter(out),
               [](const Violation& v) { return v.severity == Severity::kError; });
  return out;
}

std::vector<Violation> ValidationReport::warnings() const {
  std::vector<Violation> out;
  std::copy_if(violations.begin(), violations.end(), std::back_inserter(out),
               [](const Violation& v) { return v.severity == Severity::kWarning; });
  return out;
}

std::vector<Violation> ValidationReport::with_code(const std::string& code) const {
  std::vector<Violation> out;
  std::copy_if(violations.begin(), violations.end(), std::back_inserter(out),
               [&](const Violation& v) { return v.code == code; });
  return out;
}

CommonRun longest_common_run(std::span<const BeatId> a, std::span<const BeatId> b) {
  CommonRun best;
  // run[j+1] = length of the common suffix of a[..i] and b[..j].
  std::vector<int> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (size_t i = 0; i < a.size(); ++i) {
    for (size_t j = 0; j < b.size(); ++j) {
      cur[j + 1] = a[i] == b[j] ? prev[j] + 1 : 0;
      int len = cur[j + 1];
      if (len == 0) continue;
      int pa = static_cast<int>(i) - len + 1;
      int pb = static_cast<int>(j) - len + 1;
      if (len > best.length || (len == best.length && (pa < best.position_a ||
                                                       (pa == best.position_a && pb < best.position_b)))) {
        best = {len, pa, pb};
      }
    }
    std::swap(prev, cur);
  }
  return best;
}

std::set<BeatId> computed_common_beats(const StoryBundle& bundle) {
  if (bundle.storylines.empty()) return {};
  std::set<BeatId> common(bundle.storylines.front().beat_ids.begin(),
                          bundle.storylines.front().beat_ids.end());
  for (const auto& s : bundle.storylines) {
    std::set<BeatId> here(s.beat_ids.begin(), s.beat_ids.end());
    std::erase_if(common, [&](BeatId id) { return !here.contains(id); });
  }
  return common;
}

std::vector<std::vector<BeatId>> beat_cycles(const NarrativeGraph& graph) {
  auto adj = beat_adjacency(graph);
  // Iterative Tarjan.
  std::map<BeatId, int> index, low;
  std::set<BeatId> on_stack;
  std::vector<BeatId> stack;
  std::vector<std::vector<BeatId>> out;
  int counter = 0;

  for (const auto& [root, _] : adj) {
    if (index.contains(root)) continue;
    struct Frame {
      BeatId node;
      std::set<BeatId>::const_iterator next;
    };
    std::vector<Frame> frames;
    auto enter = [&](BeatId v) {
      index[v] = low[v] = counter++;
      stack.push_back(v);
      on_stack.insert(v);
      frames.push_back({v, adj.at(v).begin()});
    };
    enter(root);
    while (!frames.empty()) {
      Frame& f = frames.back();
      const auto& succ = adj.at(f.node);
      if (f.next != succ.end()) {
        BeatId w = *f.next++;
        if (!index.contains(w)) {
          enter(w);
        } else if (on_stack.contains(w)) {
          low[f.node] = std::min(low[f.node], index[w]);
        }
        continue;
      }
      BeatId v = f.node;
      frames.pop_back();
      if (!frames.empty()) low[frames.back().node] = std::min(low[frames.back().node], low[v]);
      if (low[v] != index[v]) continue;
      std::vector<BeatId> component;
      BeatId w;
      do {
        w = stack.back();
        stack.pop_back();
        on_stack.erase(w);
        component.push_back(w);
      } while (w != v);
      std::sort(component.begin(), component.end());
      if (component.size() > 1 || adj.at(v).contains(v)) out.push_back(std::move(component));
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

Severity default_severity(const std::string& code) {
  if (code == kCommonCount || code == kCommonConsecutive || code == kCommonDeclaredMismatch ||
      code == kCycle)
    return Severity::kWarning;
  return Severity::kError;
}

ValidationReport validate(const StoryBundle& bundle, const ValidatorOptions& options) {
  ValidationReport report;
  auto add = [&](const char* code, std::vector<int> storylines, std::vector<BeatId> beats,
                 std::string detail) {
    auto override_it = options.severity.find(code);
    Severity severity =
        override_it != options.severity.end() ? override_it->second : default_severity(code);
    report.violations.push_back(
        {code, severity, std::move(storylines), std::move(beats), std::move(detail)});
  };
  const auto& spec = bundle.spec;
  const auto& storylines = bundle.storylines;

  // Storyline count.
  int n = static_cast<int>(storylines.size());
  bool count_ok = options.storyline_count == ValidatorOptions::StorylineCount::kExact
                      ? n == spec.n_storylines
                      : n >= spec.n_storylines;
  if (!count_ok)
    add(kCountStorylines, {}, {},
        std::to_string(n) + " storylines, expected " +
            (options.storyline_count == ValidatorOptions::StorylineCount::kExact ? "" : "at least ") +
            std::to_string(spec.n_storylines));

  // Starts and ends: label counts, and no beat shared between two labels.
  auto check_dummies = [&](const char* code, bool starts, int expected) {
    std::map<int, std::set<BeatId>> targets;
    for (const auto& s : storylines) {
      if (s.beat_ids.empty()) continue;
      targets[starts ? s.start : s.end].insert(starts ? s.beat_ids.front() : s.beat_ids.back());
    }
    const char* word = starts ? "START" : "END";
    if (static_cast<int>(targets.size()) != expected)
      add(code, {}, {},
          std::to_string(targets.size()) + " distinct " + word + " labels, expected " +
              std::to_string(expected));
    std::map<BeatId, std::set<int>> labels_of;
    for (const auto& [label, beats] : targets)
      for (BeatId b : beats) labels_of[b].insert(label);
    for (const auto& [beat, labels] : labels_of) {
      if (labels.size() < 2) continue;
      std::vector<int> involved;
      for (const auto& s : storylines)
        if (labels.contains(starts ? s.start : s.end) &&
            (starts ? s.beat_ids.front() : s.beat_ids.back()) == beat)
          involved.push_back(s.index);
      std::sort(involved.begin(), involved.end());
      add(code, involved, {beat},
          std::string("beat ") + std::to_string(beat) + " is shared by " + word + " labels " +
              join_ids(sorted_vector(labels)));
    }
  };
  check_dummies(kStarts, true, spec.n_starts);
  check_dummies(kEnds, false, spec.n_endings);

  // Beat budget.
  std::set<BeatId> unique;
  for (const auto& s : storylines) unique.insert(s.beat_ids.begin(), s.beat_ids.end());
  report.stats.unique_beats = static_cast<int>(unique.size());
  int budget = options.beat_budget_factor * spec.n_storylines;
  if (report.stats.unique_beats < budget)
    add(kBeatBudget, {}, {},
        std::to_string(report.stats.unique_beats) + " unique beats < " + std::to_string(budget));

  // Pairwise checks, lower storyline index first.
  std::vector<const Storyline*> ordered;
  for (const auto& s : storylines) ordered.push_back(&s);
  std::sort(ordered.begin(), ordered.end(),
            [](const Storyline* a, const Storyline* b) { return a->index < b->index; });
  for (size_t i = 0; i < ordered.size(); ++i) {
    for (size_t j = i + 1; j < ordered.size(); ++j) {
      const Storyline& a = *ordered[i];
      const Storyline& b = *ordered[j];
      if (a.beat_ids == b.beat_ids)
        add(kDuplicateStoryline, {a.index, b.index}, {}, "identical beat sequences");
      CommonRun run = longest_common_run(a.beat_ids, b.beat_ids);
      report.stats.max_pairwise_run = std::max(report.stats.max_pairwise_run, run.length);
      if (run.length > options.max_common_run) {
        std::vector<BeatId> beats(a.beat_ids.begin() + run.position_a,
                                  a.beat_ids.begin() + run.position_a + run.length);
        add(kRunLength, {a.index, b.index}, beats,
            "storylines " + std::to_string(a.index) + " and " + std::to_string(b.index) +
                " share a run of " + std::to_string(run.length) + " beats (" + join_ids(beats) + ")");
      }
    }
  }

  // Simple paths.
  for (const Storyline* s : ordered) {
    std::set<BeatId> seen, repeated;
    for (BeatId id : s->beat_ids)
      if (!seen.insert(id).second) repeated.insert(id);
    if (!repeated.empty())
      add(kSimplePath, {s->index}, sorted_vector(repeated),
          "storyline " + std::to_string(s->index) + " repeats beats " + join_ids(sorted_vector(repeated)));
  }

  // Common beats.
  report.stats.computed_common_beats = computed_common_beats(bundle);
  const auto& common = report.stats.computed_common_beats;
  int common_count = static_cast<int>(common.size());
  if (common_count < options.min_common_beats || common_count > options.max_common_beats)
    add(kCommonCount, {}, sorted_vector(common),
        std::to_string(common_count) + " beats common to all storylines, expected " +
            std::to_string(options.min_common_beats) + "-" + std::to_string(options.max_common_beats));
  for (const Storyline* s : ordered) {
    for (size_t k = 1; k < s->beat_ids.size(); ++k) {
      BeatId x = s->beat_ids[k - 1], y = s->beat_ids[k];
      if (common.contains(x) && common.contains(y))
        add(kCommonConsecutive, {s->index}, {x, y},
            "common beats " + std::to_string(x) + " and " + std::to_string(y) + " are adjacent in storyline " +
                std::to_string(s->index));
    }
  }
  if (bundle.declared_common_beats != common)
    add(kCommonDeclaredMismatch, {}, sorted_vector(bundle.declared_common_beats),
        "declared {" + join_ids(sorted_vector(bundle.declared_common_beats)) + "} but computed {" +
            join_ids(sorted_vector(common)) + "}");

  // Cycles among beat nodes.
  NarrativeGraph graph = merge_transitions(bundle);
  auto adj = beat_adjacency(graph);
  for (const auto& component : beat_cycles(graph)) {
    std::set<BeatId> members(component.begin(), component.end());
    auto cycle = witness_cycle(component.front(), members, adj);
    add(kCycle, {}, component,
        "beats {" + join_ids(component) + "} are strongly connected, e.g. " + join_ids(cycle, " -> "));
  }

  std::sort(report.violations.begin(), report.violations.end());
  return report;
}

}  // namespace grim
