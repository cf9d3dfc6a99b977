#pragma once

// Domain types shared by every module: beats, storylines, bundles, edit sets
// and the merged narrative graph, plus pure structural helpers over them.

#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace grim {

using BeatId = int;

struct Beat {
  BeatId id = 0;
  std::string description;

  friend bool operator==(const Beat&, const Beat&) = default;
};

/// A node of the narrative graph: a beat, or a dummy START_k / END_k marker.
/// Ordering is the canonical payload order: beats ascending, then starts,
/// then ends.
class NodeRef {
 public:
  enum class Kind : std::uint8_t { kBeat = 0, kStart = 1, kEnd = 2 };

  constexpr NodeRef() = default;
  static constexpr NodeRef beat(BeatId id) { return NodeRef(Kind::kBeat, id); }
  static constexpr NodeRef start(int k) { return NodeRef(Kind::kStart, k); }
  static constexpr NodeRef end(int k) { return NodeRef(Kind::kEnd, k); }

  /// Parses "Beat_7", "Beat 7", "START_1", "Start 1", "end_2" (and bare
  /// integers as beats). Returns nullopt on anything else.
  static std::optional<NodeRef> parse(std::string_view text);

  constexpr Kind kind() const { return kind_; }
  constexpr int number() const { return number_; }
  constexpr bool is_beat() const { return kind_ == Kind::kBeat; }
  constexpr bool is_dummy() const { return kind_ != Kind::kBeat; }

  /// Canonical label: "Beat_<n>", "START_<k>" or "END_<k>".
  std::string label() const;

  friend constexpr auto operator<=>(const NodeRef&, const NodeRef&) = default;

 private:
  constexpr NodeRef(Kind kind, int number) : kind_(kind), number_(number) {}

  Kind kind_ = Kind::kBeat;
  int number_ = 0;
};

using Edge = std::pair<NodeRef, NodeRef>;
using EdgeSet = std::set<Edge>;

struct Storyline {
  int index = 0;
  int start = 0;  // k of START_k
  std::vector<BeatId> beat_ids;
  int end = 0;  // k of END_k

  friend bool operator==(const Storyline&, const Storyline&) = default;
};

struct GenerationSpec {
  std::string story;
  std::string setting;
  int n_starts = 1;
  int n_endings = 1;
  int n_storylines = 1;

  friend bool operator==(const GenerationSpec&, const GenerationSpec&) = default;
};

/// Throws Error("SPEC-INVALID") when counts are non-positive or starts/endings
/// exceed the storyline count.
void check_generation_spec(const GenerationSpec& spec);

struct StoryBundle {
  GenerationSpec spec;
  std::map<BeatId, Beat> beats;
  std::vector<Storyline> storylines;
  std::map<int, BeatId> starts;  // START_k -> first beat
  std::map<int, BeatId> ends;    // END_k -> final beat
  std::set<BeatId> declared_common_beats;
  std::string raw_text;

  friend bool operator==(const StoryBundle&, const StoryBundle&) = default;

  const Storyline* find_storyline(int index) const;
  BeatId max_beat_id() const;
};

/// Field-for-field equality ignoring raw_text (the parse/serialize round-trip
/// law compares structure, not the source document).
bool same_structure(const StoryBundle& a, const StoryBundle& b);

/// Recomputes starts/ends from the storylines (first storyline using a label
/// wins).
void derive_dummy_pointers(StoryBundle& bundle);

struct AddedNode {
  BeatId id = 0;  // 0 = not yet assigned
  std::string description;

  friend bool operator==(const AddedNode&, const AddedNode&) = default;
};

using BeatPair = std::pair<BeatId, BeatId>;

struct EditSet {
  std::vector<AddedNode> nodes_added;
  std::set<BeatId> nodes_deleted;
  std::set<BeatPair> edges_added;
  std::set<BeatPair> edges_deleted;

  bool empty() const {
    return nodes_added.empty() && nodes_deleted.empty() && edges_added.empty() &&
           edges_deleted.empty();
  }
  friend bool operator==(const EditSet&, const EditSet&) = default;
};

struct NarrativeGraph {
  std::set<BeatId> beat_nodes;
  std::set<int> start_nodes;
  std::set<int> end_nodes;
  EdgeSet edges;

  std::set<NodeRef> nodes() const;
  friend bool operator==(const NarrativeGraph&, const NarrativeGraph&) = default;
};

/// (START_k, first), every adjacent beat pair, (last, END_k).
std::vector<Edge> storyline_transitions(const Storyline& storyline);

/// Union of storyline_transitions over the bundle. Throws
/// Error("DANGLING-BEAT-REF") when a storyline cites a beat absent from
/// bundle.beats.
NarrativeGraph merge_transitions(const StoryBundle& bundle);

/// Beat-only adjacency of a merged graph.
std::map<BeatId, std::set<BeatId>> beat_adjacency(const NarrativeGraph& graph);

}  // namespace grim
