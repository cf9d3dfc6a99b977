#include "grim/graph_builder.hpp"

#include <algorithm>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grim/text.hpp"

namespace grim {

using ordered_json = nlohmann::ordered_json;

const RenderNode* RenderPayload::find_node(std::string_view id) const {
  for (const auto& [key, node] : nodes)
    if (key == id) return &node;
  return nullptr;
}

const NodeEdges* RenderPayload::find_edges(std::string_view id) const {
  for (const auto& [key, e] : edges)
    if (key == id) return &e;
  return nullptr;
}

std::set<EdgePair> RenderPayload::edge_set() const {
  std::set<EdgePair> out;
  for (const auto& [_, e] : edges) {
    out.insert(e.incoming.begin(), e.incoming.end());
    out.insert(e.outgoing.begin(), e.outgoing.end());
  }
  return out;
}

RenderPayload build_render_payload(const StoryBundle& bundle) {
  NarrativeGraph graph = merge_transitions(bundle);

  std::map<BeatId, int> pathway;
  for (const auto& s : bundle.storylines)
    for (BeatId id : s.beat_ids) {
      auto [it, inserted] = pathway.emplace(id, s.index);
      if (!inserted) it->second = std::min(it->second, s.index);
    }

  std::map<NodeRef, std::vector<Edge>> incoming, outgoing;
  for (const auto& e : graph.edges) {
    outgoing[e.first].push_back(e);
    incoming[e.second].push_back(e);
  }
  // Incoming ordered by source, outgoing by target (edge set order already
  // sorts by source first).
  for (auto& [_, list] : incoming)
    std::sort(list.begin(), list.end(), [](const Edge& a, const Edge& b) { return a.first < b.first; });

  auto labels = [](const std::vector<Edge>& list) {
    std::vector<EdgePair> out;
    out.reserve(list.size());
    for (const auto& [a, b] : list) out.emplace_back(a.label(), b.label());
    return out;
  };

  RenderPayload payload;
  for (const NodeRef& ref : graph.nodes()) {
    RenderNode node;
    node.game_state = kDefaultGameState;
    if (ref.is_beat()) {
      node.nr_beat = ref.number();
      node.beat = bundle.beats.at(ref.number()).description;
      node.pathway = std::to_string(pathway.at(ref.number()));
    }
    payload.nodes.emplace_back(ref.label(), std::move(node));
    payload.edges.emplace_back(ref.label(), NodeEdges{kDefaultGameState, labels(incoming[ref]), labels(outgoing[ref])});
  }
  return payload;
}

namespace {

std::string quote(std::string_view s) {
  return nlohmann::json(std::string(s)).dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

template <typename T>
std::string quote_or_null(const std::optional<T>& v) {
  if (!v) return "null";
  if constexpr (std::is_same_v<T, int>) {
    return std::to_string(*v);
  } else {
    return quote(*v);
  }
}

std::string pair_list(const std::vector<EdgePair>& pairs) {
  std::string out = "[";
  for (size_t i = 0; i < pairs.size(); ++i) {
    if (i) out += ", ";
    out += "[" + quote(pairs[i].first) + ", " + quote(pairs[i].second) + "]";
  }
  return out + "]";
}

}  // namespace

std::string serialize_render_payload(const RenderPayload& payload) {
  std::ostringstream out;
  out << "{\n  \"NODES\": {\n";
  for (size_t i = 0; i < payload.nodes.size(); ++i) {
    const auto& [id, n] = payload.nodes[i];
    out << "    " << quote(id) << ": [[" << quote_or_null(n.game_state) << ", " << quote_or_null(n.nr_beat)
        << ", " << quote_or_null(n.beat) << ", " << quote_or_null(n.pathway) << "]]"
        << (i + 1 < payload.nodes.size() ? "," : "") << "\n";
  }
  out << "  },\n  \"EDGES\": {\n";
  for (size_t i = 0; i < payload.edges.size(); ++i) {
    const auto& [id, e] = payload.edges[i];
    out << "    " << quote(id) << ": {" << quote(e.game_state) << ": [" << pair_list(e.incoming) << ", "
        << pair_list(e.outgoing) << "]}" << (i + 1 < payload.edges.size() ? "," : "") << "\n";
  }
  out << "  }\n}\n";
  return out.str();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

int line_at(std::string_view text, size_t offset) {
  offset = std::min(offset, text.size());
  return 1 + static_cast<int>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(offset), '\n'));
}

// Copies the balanced {...} starting at `open`, dropping trailing commas
// before '}' / ']'. Returns nullopt when the braces never close.
std::optional<std::string> balanced_object(std::string_view text, size_t open) {
  std::string out;
  int depth = 0;
  bool in_string = false, escaped = false;
  for (size_t i = open; i < text.size(); ++i) {
    char c = text[i];
    if (in_string) {
      out.push_back(c);
      if (escaped) {
        escaped = false;
      } else if (c == '\\') {
        escaped = true;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{' || c == '[') {
      ++depth;
    } else if (c == '}' || c == ']') {
      --depth;
    } else if (c == ',') {
      size_t j = text.find_first_not_of(" \t\r\n", i + 1);
      if (j != std::string_view::npos && (text[j] == '}' || text[j] == ']')) continue;
    }
    out.push_back(c);
    if (depth == 0) return out;
  }
  return std::nullopt;
}

struct Sections {
  ordered_json nodes;
  ordered_json edges;
  size_t nodes_offset = 0;
  size_t edges_offset = 0;
};

class PayloadParser {
 public:
  explicit PayloadParser(std::string_view text) : text_(text) {}

  PayloadParseResult run() {
    PayloadParseResult result;
    auto sections = locate();
    if (sections) {
      RenderPayload payload;
      if (read_nodes(sections->nodes, sections->nodes_offset, payload) &&
          read_edges(sections->edges, sections->edges_offset, payload)) {
        check_keys(payload);
        check_symmetry(payload);
        if (!failed_) {
          order_dummies(payload);
          result.payload = std::move(payload);
        }
      }
    }
    result.diagnostics = std::move(diags_);
    return result;
  }

 private:
  void error(std::string code, size_t offset, std::string message) {
    failed_ = true;
    diags_.push_back({Severity::kError, std::move(code), line_at(text_, offset), std::move(message)});
  }

  size_t key_offset(const std::string& key, size_t from) const {
    size_t at = text_.find("\"" + key + "\"", from);
    return at == std::string_view::npos ? from : at;
  }

  std::optional<Sections> locate() {
    Sections s;
    try {
      auto whole = ordered_json::parse(text_);
      if (whole.is_object() && whole.contains("NODES") && whole.contains("EDGES")) {
        s.nodes = whole["NODES"];
        s.edges = whole["EDGES"];
        s.nodes_offset = key_offset("NODES", 0);
        s.edges_offset = key_offset("EDGES", 0);
        return s;
      }
    } catch (const nlohmann::json::exception&) {
    }
    auto grab = [&](const char* label, size_t from, ordered_json& out, size_t& offset) {
      size_t at = text_.find(label, from);
      if (at == std::string_view::npos) {
        error("PAYLOAD-MALFORMED", text_.size(), std::string("no ") + label + " object");
        return false;
      }
      size_t open = text_.find('{', at);
      std::optional<std::string> body;
      if (open != std::string_view::npos) body = balanced_object(text_, open);
      if (!body) {
        error("PAYLOAD-MALFORMED", at, std::string("unterminated ") + label + " object");
        return false;
      }
      try {
        out = ordered_json::parse(*body);
      } catch (const nlohmann::json::exception& e) {
        error("PAYLOAD-MALFORMED", open, std::string(label) + " is not valid JSON: " + e.what());
        return false;
      }
      offset = open;
      return true;
    };
    if (!grab("NODES", 0, s.nodes, s.nodes_offset)) return std::nullopt;
    if (!grab("EDGES", s.nodes_offset, s.edges, s.edges_offset)) return std::nullopt;
    return s;
  }

  bool read_nodes(const ordered_json& j, size_t offset, RenderPayload& payload) {
    if (!j.is_object()) {
      error("PAYLOAD-MALFORMED", offset, "NODES is not an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      const ordered_json* row = nullptr;
      if (value.is_array() && value.size() == 1 && value[0].is_array() && value[0].size() == 4) row = &value[0];
      if (!row) {
        error("PAYLOAD-MALFORMED", key_offset(key, offset),
              "NODES[\"" + key + "\"] is not [[game_state, nr_beat, beat, pathway]]");
        continue;
      }
      RenderNode node;
      const auto& r = *row;
      bool ok = true;
      if (r[0].is_string()) node.game_state = r[0].get<std::string>();
      else ok &= r[0].is_null();
      if (r[1].is_number_integer()) node.nr_beat = r[1].get<int>();
      else ok &= r[1].is_null();
      if (r[2].is_string()) node.beat = r[2].get<std::string>();
      else ok &= r[2].is_null();
      if (r[3].is_string()) node.pathway = r[3].get<std::string>();
      else if (r[3].is_number_integer()) node.pathway = std::to_string(r[3].get<long long>());
      else ok &= r[3].is_null();
      if (!ok) {
        error("PAYLOAD-MALFORMED", key_offset(key, offset), "NODES[\"" + key + "\"] has mistyped fields");
        continue;
      }
      payload.nodes.emplace_back(key, std::move(node));
    }
    return !failed_;
  }

  static bool read_pairs(const ordered_json& j, std::vector<EdgePair>& out) {
    if (!j.is_array()) return false;
    for (const auto& p : j) {
      if (!p.is_array() || p.size() != 2 || !p[0].is_string() || !p[1].is_string()) return false;
      out.emplace_back(p[0].get<std::string>(), p[1].get<std::string>());
    }
    return true;
  }

  bool read_edges(const ordered_json& j, size_t offset, RenderPayload& payload) {
    if (!j.is_object()) {
      error("PAYLOAD-MALFORMED", offset, "EDGES is not an object");
      return false;
    }
    for (const auto& [key, value] : j.items()) {
      NodeEdges e;
      bool ok = value.is_object() && value.size() == 1;
      if (ok) {
        auto it = value.begin();
        e.game_state = it.key();
        const auto& lists = it.value();
        ok = lists.is_array() && lists.size() == 2 && read_pairs(lists[0], e.incoming) &&
             read_pairs(lists[1], e.outgoing);
      }
      if (!ok) {
        error("PAYLOAD-MALFORMED", key_offset(key, offset),
              "EDGES[\"" + key + "\"] is not {state: [[incoming], [outgoing]]}");
        continue;
      }
      payload.edges.emplace_back(key, std::move(e));
    }
    return !failed_;
  }

  void check_keys(const RenderPayload& p) {
    std::set<std::string> node_keys, edge_keys;
    for (const auto& [k, _] : p.nodes) node_keys.insert(k);
    for (const auto& [k, _] : p.edges) edge_keys.insert(k);
    for (const auto& k : node_keys)
      if (!edge_keys.contains(k))
        error("PAYLOAD-KEYSET-MISMATCH", key_offset(k, 0), "node " + k + " is in NODES but not in EDGES");
    for (const auto& k : edge_keys)
      if (!node_keys.contains(k))
        error("PAYLOAD-KEYSET-MISMATCH", key_offset(k, 0), "node " + k + " is in EDGES but not in NODES");
  }

  void check_symmetry(const RenderPayload& p) {
    for (const auto& [id, e] : p.edges) {
      for (const auto& pair : e.outgoing) {
        const NodeEdges* other = p.find_edges(pair.second);
        if (pair.first != id) {
          error("PAYLOAD-ASYMMETRIC-EDGE", key_offset(id, 0),
                "outgoing list of " + id + " holds (" + pair.first + ", " + pair.second + ")");
        } else if (!other) {
          error("PAYLOAD-KEYSET-MISMATCH", key_offset(id, 0), "edge target " + pair.second + " is not a node");
        } else if (std::find(other->incoming.begin(), other->incoming.end(), pair) == other->incoming.end()) {
          error("PAYLOAD-ASYMMETRIC-EDGE", key_offset(id, 0),
                "(" + pair.first + ", " + pair.second + ") is outgoing from " + id + " but not incoming to " +
                    pair.second);
        }
      }
      for (const auto& pair : e.incoming) {
        const NodeEdges* other = p.find_edges(pair.first);
        if (pair.second != id) {
          error("PAYLOAD-ASYMMETRIC-EDGE", key_offset(id, 0),
                "incoming list of " + id + " holds (" + pair.first + ", " + pair.second + ")");
        } else if (!other) {
          error("PAYLOAD-KEYSET-MISMATCH", key_offset(id, 0), "edge source " + pair.first + " is not a node");
        } else if (std::find(other->outgoing.begin(), other->outgoing.end(), pair) == other->outgoing.end()) {
          error("PAYLOAD-ASYMMETRIC-EDGE", key_offset(id, 0),
                "(" + pair.first + ", " + pair.second + ") is incoming to " + id + " but not outgoing from " +
                    pair.first);
        }
      }
    }
  }

  template <typename Entry>
  bool move_dummies_last(std::vector<std::pair<std::string, Entry>>& list) {
    auto is_dummy = [](const auto& entry) {
      auto ref = NodeRef::parse(entry.first);
      return ref && ref->is_dummy();
    };
    bool misplaced = false;
    bool seen_dummy = false;
    for (const auto& entry : list) {
      if (is_dummy(entry)) seen_dummy = true;
      else if (seen_dummy) misplaced = true;
    }
    if (misplaced)
      std::stable_partition(list.begin(), list.end(), [&](const auto& entry) { return !is_dummy(entry); });
    return misplaced;
  }

  void order_dummies(RenderPayload& p) {
    bool nodes_moved = move_dummies_last(p.nodes);
    bool edges_moved = move_dummies_last(p.edges);
    if (nodes_moved || edges_moved)
      diags_.push_back({Severity::kWarning, "PAYLOAD-DUMMY-ORDER", 1,
                        "START_/END_ keys appeared before beat keys; moved to the end"});
  }

  std::string_view text_;
  bool failed_ = false;
  std::vector<ParseDiagnostic> diags_;
};

}  // namespace

PayloadParseResult parse_render_payload(std::string_view text) { return PayloadParser(text).run(); }

// ---------------------------------------------------------------------------
// Reconciliation
// ---------------------------------------------------------------------------

bool ReconcileReport::empty() const { return size() == 0; }

size_t ReconcileReport::size() const {
  return missing_edges.size() + extra_edges.size() + missing_nodes.size() + extra_nodes.size() +
         description_mismatches.size();
}

Reconciliation reconcile(const RenderPayload& candidate, const StoryBundle& bundle) {
  Reconciliation out;
  out.repaired = build_render_payload(bundle);
  const RenderPayload& oracle = out.repaired;
  auto& report = out.report;

  auto oracle_edges = oracle.edge_set();
  auto candidate_edges = candidate.edge_set();
  std::set_difference(oracle_edges.begin(), oracle_edges.end(), candidate_edges.begin(), candidate_edges.end(),
                      std::inserter(report.missing_edges, report.missing_edges.end()));
  std::set_difference(candidate_edges.begin(), candidate_edges.end(), oracle_edges.begin(), oracle_edges.end(),
                      std::inserter(report.extra_edges, report.extra_edges.end()));

  std::set<std::string> oracle_nodes, candidate_nodes;
  for (const auto& [k, _] : oracle.nodes) oracle_nodes.insert(k);
  for (const auto& [k, _] : candidate.nodes) candidate_nodes.insert(k);
  for (const auto& [k, _] : candidate.edges) candidate_nodes.insert(k);
  std::set_difference(oracle_nodes.begin(), oracle_nodes.end(), candidate_nodes.begin(), candidate_nodes.end(),
                      std::inserter(report.missing_nodes, report.missing_nodes.end()));
  std::set_difference(candidate_nodes.begin(), candidate_nodes.end(), oracle_nodes.begin(), oracle_nodes.end(),
                      std::inserter(report.extra_nodes, report.extra_nodes.end()));

  // Candidate beat nodes keyed by beat number.
  std::map<int, const RenderNode*> by_number;
  for (const auto& [k, node] : candidate.nodes) {
    if (node.nr_beat) {
      by_number.emplace(*node.nr_beat, &node);
    } else if (auto ref = NodeRef::parse(k); ref && ref->is_beat()) {
      by_number.emplace(ref->number(), &node);
    }
  }
  for (auto& [id, node] : out.repaired.nodes) {
    if (!node.nr_beat) {
      if (const RenderNode* c = candidate.find_node(id); c && c->game_state) node.game_state = c->game_state;
      continue;
    }
    auto it = by_number.find(*node.nr_beat);
    if (it == by_number.end()) continue;
    const RenderNode& c = *it->second;
    if (c.beat && node.beat && text::normalize_description(*c.beat) != text::normalize_description(*node.beat))
      report.description_mismatches.push_back({id, *node.beat, *c.beat});
    if (c.beat) node.beat = c.beat;
    if (c.game_state) node.game_state = c.game_state;
  }
  for (auto& [id, e] : out.repaired.edges) {
    if (const RenderNode* n = out.repaired.find_node(id); n && n->game_state) e.game_state = *n->game_state;
  }
  return out;
}

}  // namespace grim
