#include "grim/model.hpp"

#include <algorithm>

#include "grim/error.hpp"
#include "grim/text.hpp"

namespace grim {

std::optional<NodeRef> NodeRef::parse(std::string_view raw) {
  std::string_view s = text::trim(raw);
  NodeRef::Kind kind = Kind::kBeat;
  if (text::istarts_with(s, "start")) {
    kind = Kind::kStart;
    s.remove_prefix(5);
  } else if (text::istarts_with(s, "end")) {
    kind = Kind::kEnd;
    s.remove_prefix(3);
  } else if (text::istarts_with(s, "beat")) {
    s.remove_prefix(4);
  }
  if (!s.empty() && (s.front() == '_' || s.front() == ' ' || s.front() == '-')) s.remove_prefix(1);
  auto n = text::parse_positive_int(s);
  if (!n) return std::nullopt;
  return NodeRef(kind, *n);
}

std::string NodeRef::label() const {
  switch (kind_) {
    case Kind::kStart:
      return "START_" + std::to_string(number_);
    case Kind::kEnd:
      return "END_" + std::to_string(number_);
    case Kind::kBeat:
      break;
  }
  return "Beat_" + std::to_string(number_);
}

void check_generation_spec(const GenerationSpec& spec) {
  if (spec.n_starts < 1 || spec.n_endings < 1 || spec.n_storylines < 1)
    throw Error("SPEC-INVALID", "starts, endings and storylines must be positive");
  if (spec.n_starts > spec.n_storylines)
    throw Error("SPEC-INVALID", "more starts than storylines");
  if (spec.n_endings > spec.n_storylines)
    throw Error("SPEC-INVALID", "more endings than storylines");
}

const Storyline* StoryBundle::find_storyline(int index) const {
  for (const auto& s : storylines)
    if (s.index == index) return &s;
  return nullptr;
}

BeatId StoryBundle::max_beat_id() const { return beats.empty() ? 0 : beats.rbegin()->first; }

bool same_structure(const StoryBundle& a, const StoryBundle& b) {
  return a.spec == b.spec && a.beats == b.beats && a.storylines == b.storylines &&
         a.starts == b.starts && a.ends == b.ends &&
         a.declared_common_beats == b.declared_common_beats;
}

void derive_dummy_pointers(StoryBundle& bundle) {
  bundle.starts.clear();
  bundle.ends.clear();
  for (const auto& s : bundle.storylines) {
    if (s.beat_ids.empty()) continue;
    bundle.starts.emplace(s.start, s.beat_ids.front());
    bundle.ends.emplace(s.end, s.beat_ids.back());
  }
}

std::set<NodeRef> NarrativeGraph::nodes() const {
  std::set<NodeRef> out;
  for (BeatId id : beat_nodes) out.insert(NodeRef::beat(id));
  for (int k : start_nodes) out.insert(NodeRef::start(k));
  for (int k : end_nodes) out.insert(NodeRef::end(k));
  return out;
}

std::vector<Edge> storyline_transitions(const Storyline& s) {
  std::vector<Edge> out;
  if (s.beat_ids.empty()) return out;
  out.reserve(s.beat_ids.size() + 1);
  out.emplace_back(NodeRef::start(s.start), NodeRef::beat(s.beat_ids.front()));
  for (size_t i = 1; i < s.beat_ids.size(); ++i)
    out.emplace_back(NodeRef::beat(s.beat_ids[i - 1]), NodeRef::beat(s.beat_ids[i]));
  out.emplace_back(NodeRef::beat(s.beat_ids.back()), NodeRef::end(s.end));
  return out;
}

NarrativeGraph merge_transitions(const StoryBundle& bundle) {
  NarrativeGraph graph;
  for (const auto& s : bundle.storylines) {
    for (BeatId id : s.beat_ids) {
      if (!bundle.beats.contains(id))
        throw Error("DANGLING-BEAT-REF",
                    "storyline " + std::to_string(s.index) + " cites unknown beat " +
                        std::to_string(id),
                    {{"storyline", s.index}, {"beat", id}});
      graph.beat_nodes.insert(id);
    }
    if (s.beat_ids.empty()) continue;
    graph.start_nodes.insert(s.start);
    graph.end_nodes.insert(s.end);
    for (auto& e : storyline_transitions(s)) graph.edges.insert(e);
  }
  return graph;
}

std::map<BeatId, std::set<BeatId>> beat_adjacency(const NarrativeGraph& graph) {
  std::map<BeatId, std::set<BeatId>> adj;
  for (BeatId id : graph.beat_nodes) adj[id];
  for (const auto& [from, to] : graph.edges)
    if (from.is_beat() && to.is_beat()) adj[from.number()].insert(to.number());
  return adj;
}

}  // namespace grim
