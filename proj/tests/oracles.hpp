#pragma once

// Brute-force reference implementations. Deliberately naive: they share no
// code with the library beyond the plain data types.

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "grim/model.hpp"

namespace grim::oracle {

struct Run {
  int length = 0;
  int a = 0;
  int b = 0;
};

/// Every window of every length in `a` compared against every window in `b`.
inline Run longest_common_run(const std::vector<int>& a, const std::vector<int>& b) {
  Run best;
  for (int len = 1; len <= static_cast<int>(std::min(a.size(), b.size())); ++len) {
    bool found = false;
    for (int i = 0; i + len <= static_cast<int>(a.size()) && !found; ++i)
      for (int j = 0; j + len <= static_cast<int>(b.size()) && !found; ++j) {
        bool same = true;
        for (int k = 0; k < len && same; ++k) same = a[i + k] == b[j + k];
        if (same) {
          best = {len, i, j};
          found = true;
        }
      }
    if (!found) break;
  }
  return best;
}

inline std::set<int> common_beats(const StoryBundle& bundle) {
  std::map<int, int> seen_in;
  for (const auto& s : bundle.storylines) {
    std::set<int> distinct(s.beat_ids.begin(), s.beat_ids.end());
    for (int id : distinct) ++seen_in[id];
  }
  std::set<int> out;
  for (const auto& [id, count] : seen_in)
    if (count == static_cast<int>(bundle.storylines.size())) out.insert(id);
  return out;
}

/// Edge set as label pairs, from consecutive tokens of each full sequence.
inline std::set<std::pair<std::string, std::string>> edge_union(const StoryBundle& bundle) {
  std::set<std::pair<std::string, std::string>> out;
  for (const auto& s : bundle.storylines) {
    std::vector<std::string> tokens = {"START_" + std::to_string(s.start)};
    for (int id : s.beat_ids) tokens.push_back("Beat_" + std::to_string(id));
    tokens.push_back("END_" + std::to_string(s.end));
    for (size_t i = 0; i + 1 < tokens.size(); ++i) out.emplace(tokens[i], tokens[i + 1]);
  }
  return out;
}

inline std::set<std::string> node_labels(const StoryBundle& bundle) {
  std::set<std::string> out;
  for (const auto& s : bundle.storylines) {
    out.insert("START_" + std::to_string(s.start));
    out.insert("END_" + std::to_string(s.end));
    for (int id : s.beat_ids) out.insert("Beat_" + std::to_string(id));
  }
  return out;
}

/// Beat groups lying on a directed cycle, via transitive closure.
inline std::vector<std::vector<int>> cyclic_groups(const StoryBundle& bundle) {
  std::vector<int> ids;
  for (const auto& s : bundle.storylines) ids.insert(ids.end(), s.beat_ids.begin(), s.beat_ids.end());
  std::sort(ids.begin(), ids.end());
  ids.erase(std::unique(ids.begin(), ids.end()), ids.end());
  size_t n = ids.size();
  auto index = [&](int id) { return std::lower_bound(ids.begin(), ids.end(), id) - ids.begin(); };
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (const auto& s : bundle.storylines)
    for (size_t i = 0; i + 1 < s.beat_ids.size(); ++i) reach[index(s.beat_ids[i])][index(s.beat_ids[i + 1])] = true;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      for (size_t j = 0; j < n; ++j)
        if (reach[i][k] && reach[k][j]) reach[i][j] = true;
  std::vector<std::vector<int>> groups;
  std::vector<bool> placed(n, false);
  for (size_t i = 0; i < n; ++i) {
    if (placed[i] || !reach[i][i]) continue;
    std::vector<int> group;
    for (size_t j = 0; j < n; ++j)
      if (reach[i][j] && reach[j][i]) {
        group.push_back(ids[j]);
        placed[j] = true;
      }
    groups.push_back(group);
  }
  return groups;
}

}  // namespace grim::oracle
