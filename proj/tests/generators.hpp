#pragma once

#include <algorithm>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "grim/model.hpp"

namespace grim::gen {

inline constexpr int kPropertyCases = 1000;

inline int uniform(std::mt19937& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline std::string sentence(std::mt19937& rng) {
  static const char* words[] = {"Red",    "wolf",  "grandmother", "basket", "forest", "hacker", "Adam",
                                "Eve",    "lab",   "escapes",     "finds",  "the",    "a",      "city",
                                "quietly", "smart", "Dr.",        "Frank's", "mob",   "potion", "road,"};
  int n = uniform(rng, 1, 12);
  std::string out;
  for (int i = 0; i < n; ++i) {
    if (i) out += ' ';
    out += words[uniform(rng, 0, static_cast<int>(std::size(words)) - 1)];
  }
  if (out.back() == ',') out.pop_back();
  if (uniform(rng, 0, 1)) out += '.';
  return out;
}

struct BundleShape {
  int max_beats = 30;
  int max_storylines = 8;
  int max_length = 8;
  int max_labels = 3;
};

/// A structurally valid bundle: every beat is used, pointers are derived,
/// beat ids may have gaps. Constraint checks may or may not pass.
inline StoryBundle random_bundle(std::mt19937& rng, const BundleShape& shape = {}) {
  StoryBundle b;
  int pool_size = uniform(rng, 1, shape.max_beats);
  std::vector<BeatId> pool(pool_size);
  BeatId next = 0;
  for (auto& id : pool) id = next += uniform(rng, 1, 3);

  int n_storylines = uniform(rng, 1, shape.max_storylines);
  int n_starts = uniform(rng, 1, std::min(shape.max_labels, n_storylines));
  int n_ends = uniform(rng, 1, std::min(shape.max_labels, n_storylines));
  for (int i = 1; i <= n_storylines; ++i) {
    Storyline s;
    s.index = i;
    s.start = uniform(rng, 1, n_starts);
    s.end = uniform(rng, 1, n_ends);
    std::vector<BeatId> shuffled = pool;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    int len = uniform(rng, 1, std::min(shape.max_length, pool_size));
    s.beat_ids.assign(shuffled.begin(), shuffled.begin() + len);
    b.storylines.push_back(std::move(s));
  }
  for (const auto& s : b.storylines)
    for (BeatId id : s.beat_ids)
      if (!b.beats.contains(id)) b.beats.emplace(id, Beat{id, sentence(rng)});
  for (const auto& [id, _] : b.beats)
    if (uniform(rng, 0, 3) == 0) b.declared_common_beats.insert(id);
  derive_dummy_pointers(b);
  b.spec = {"Story " + std::to_string(uniform(rng, 1, 99)), "Setting " + std::to_string(uniform(rng, 1, 99)),
            static_cast<int>(b.starts.size()), static_cast<int>(b.ends.size()), n_storylines};
  return b;
}

/// Short sequence over a small alphabet so that shared runs are common.
inline std::vector<BeatId> random_sequence(std::mt19937& rng, int max_len = 10, int alphabet = 6) {
  std::vector<BeatId> out(uniform(rng, 0, max_len));
  for (auto& x : out) x = uniform(rng, 1, alphabet);
  return out;
}

}  // namespace grim::gen
