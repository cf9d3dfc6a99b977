#include "grim/json_codec.hpp"

#include "grim/error.hpp"
#include "grim/text.hpp"

namespace grim {

json node_ref_to_json(const NodeRef& node) {
  if (node.is_beat()) return node.number();
  return node.label();
}

NodeRef node_ref_from_json(const json& j) {
  if (j.is_number_integer()) return NodeRef::beat(j.get<int>());
  if (j.is_string())
    if (auto ref = NodeRef::parse(j.get<std::string>())) return *ref;
  throw Error("CORRUPT", "not a node reference: " + j.dump());
}

json edges_to_json(const EdgeSet& edges) {
  json out = json::array();
  for (const auto& [a, b] : edges) out.push_back({node_ref_to_json(a), node_ref_to_json(b)});
  return out;
}

void to_json(json& j, const GenerationSpec& spec) {
  j = {{"story", spec.story},
       {"setting", spec.setting},
       {"n_starts", spec.n_starts},
       {"n_endings", spec.n_endings},
       {"n_storylines", spec.n_storylines}};
}

void from_json(const json& j, GenerationSpec& spec) {
  spec.story = j.at("story").get<std::string>();
  spec.setting = j.at("setting").get<std::string>();
  spec.n_starts = j.at("n_starts").get<int>();
  spec.n_endings = j.at("n_endings").get<int>();
  spec.n_storylines = j.at("n_storylines").get<int>();
}

namespace {

json pairs_to_json(const std::set<BeatPair>& pairs) {
  json out = json::array();
  for (const auto& [a, b] : pairs) out.push_back({a, b});
  return out;
}

std::set<BeatPair> pairs_from_json(const json& j) {
  std::set<BeatPair> out;
  for (const auto& p : j) {
    if (!p.is_array() || p.size() != 2) throw json::other_error::create(501, "edge must be a [from, to] pair", &p);
    out.emplace(p.at(0).get<int>(), p.at(1).get<int>());
  }
  return out;
}

const json& list_or_empty(const json& j, const char* key) {
  static const json empty = json::array();
  auto it = j.find(key);
  return it == j.end() || it->is_null() ? empty : *it;
}

}  // namespace

void to_json(json& j, const EditSet& edits) {
  json added = json::array();
  for (const auto& n : edits.nodes_added) {
    json node = {{"description", n.description}};
    if (n.id != 0) node["id"] = n.id;
    added.push_back(std::move(node));
  }
  j = {{"nodes_added", added},
       {"nodes_deleted", edits.nodes_deleted},
       {"edges_added", pairs_to_json(edits.edges_added)},
       {"edges_deleted", pairs_to_json(edits.edges_deleted)}};
}

void from_json(const json& j, EditSet& edits) {
  if (!j.is_object()) throw json::type_error::create(302, "edit set must be an object", &j);
  for (const auto& [key, _] : j.items())
    if (key != "nodes_added" && key != "nodes_deleted" && key != "edges_added" && key != "edges_deleted")
      throw json::other_error::create(501, "unknown edit set field '" + key + "'", &j);
  edits = {};
  for (const auto& n : list_or_empty(j, "nodes_added")) {
    AddedNode node;
    node.description = n.at("description").get<std::string>();
    if (n.contains("id") && !n["id"].is_null()) node.id = n["id"].get<int>();
    edits.nodes_added.push_back(std::move(node));
  }
  for (const auto& id : list_or_empty(j, "nodes_deleted")) edits.nodes_deleted.insert(id.get<int>());
  edits.edges_added = pairs_from_json(list_or_empty(j, "edges_added"));
  edits.edges_deleted = pairs_from_json(list_or_empty(j, "edges_deleted"));
}

EditSet parse_edit_set(const json& j) {
  try {
    return j.get<EditSet>();
  } catch (const json::exception& e) {
    throw Error("EDIT-INVALID", std::string("malformed edit set: ") + e.what());
  }
}

void to_json(json& j, const StoryBundle& bundle) {
  json beats = json::array();
  for (const auto& [id, beat] : bundle.beats) beats.push_back({{"id", id}, {"description", beat.description}});
  json storylines = json::array();
  for (const auto& s : bundle.storylines)
    storylines.push_back({{"index", s.index}, {"start", s.start}, {"beats", s.beat_ids}, {"end", s.end}});
  json starts = json::object();
  for (const auto& [k, id] : bundle.starts) starts[NodeRef::start(k).label()] = id;
  json ends = json::object();
  for (const auto& [k, id] : bundle.ends) ends[NodeRef::end(k).label()] = id;
  j = {{"spec", bundle.spec},
       {"beats", beats},
       {"storylines", storylines},
       {"starts", starts},
       {"ends", ends},
       {"declared_common_beats", bundle.declared_common_beats},
       {"raw_text", bundle.raw_text},
       {"raw_sha256", text::sha256_hex(bundle.raw_text)}};
}

void from_json(const json& j, StoryBundle& bundle) {
  bundle = {};
  bundle.spec = j.at("spec").get<GenerationSpec>();
  for (const auto& b : j.at("beats")) {
    Beat beat{b.at("id").get<int>(), b.at("description").get<std::string>()};
    bundle.beats.emplace(beat.id, std::move(beat));
  }
  for (const auto& s : j.at("storylines"))
    bundle.storylines.push_back({s.at("index").get<int>(), s.at("start").get<int>(),
                                 s.at("beats").get<std::vector<BeatId>>(), s.at("end").get<int>()});
  for (const auto& [label, id] : j.at("starts").items()) {
    auto ref = NodeRef::parse(label);
    if (!ref || ref->kind() != NodeRef::Kind::kStart) throw Error("CORRUPT", "bad start label " + label);
    bundle.starts[ref->number()] = id.get<int>();
  }
  for (const auto& [label, id] : j.at("ends").items()) {
    auto ref = NodeRef::parse(label);
    if (!ref || ref->kind() != NodeRef::Kind::kEnd) throw Error("CORRUPT", "bad end label " + label);
    bundle.ends[ref->number()] = id.get<int>();
  }
  bundle.declared_common_beats = j.at("declared_common_beats").get<std::set<BeatId>>();
  bundle.raw_text = j.at("raw_text").get<std::string>();
  if (j.at("raw_sha256").get<std::string>() != text::sha256_hex(bundle.raw_text))
    throw Error("CORRUPT", "bundle raw_text does not match its recorded hash");
}

void to_json(json& j, const Transcript& t) {
  j = {{"prompt_digest", t.prompt_digest}, {"prompt_text", t.prompt_text},
       {"response_text", t.response_text}, {"model_name", t.model_name},
       {"template_version", t.template_version}, {"timestamp", t.timestamp},
       {"latency_ms", t.latency_ms}};
}

void from_json(const json& j, Transcript& t) {
  t.prompt_digest = j.at("prompt_digest").get<std::string>();
  t.prompt_text = j.value("prompt_text", "");
  t.response_text = j.at("response_text").get<std::string>();
  t.model_name = j.value("model_name", "");
  t.template_version = j.value("template_version", "");
  t.timestamp = j.value("timestamp", "");
  t.latency_ms = j.value("latency_ms", 0LL);
}

void to_json(json& j, const ParseDiagnostic& d) {
  j = {{"severity", to_string(d.severity)}, {"code", d.code}, {"line", d.line}, {"message", d.message}};
}

void to_json(json& j, const Violation& v) {
  j = {{"code", v.code},
       {"severity", to_string(v.severity)},
       {"storylines", v.storylines},
       {"beats", v.beats},
       {"detail", v.detail}};
}

void to_json(json& j, const ValidationReport& report) {
  j = {{"ok", !report.has_errors()},
       {"violations", report.violations},
       {"stats",
        {{"unique_beats", report.stats.unique_beats},
         {"max_pairwise_run", report.stats.max_pairwise_run},
         {"computed_common_beats", report.stats.computed_common_beats}}}};
}

void to_json(json& j, const EditCheck& check) {
  j = {{"code", check.code},
       {"severity", to_string(check.severity)},
       {"passed", check.passed},
       {"failures", check.failures}};
}

void to_json(json& j, const EditReport& report) {
  json matched = json::object();
  for (const auto& [requested, found] : report.matched_ids) matched[std::to_string(requested)] = found;
  j = {{"passed", report.passed()}, {"checks", report.checks}, {"matched_ids", matched}};
}

void to_json(json& j, const BundleDiff& diff) {
  j = {{"beats_added", diff.beats_added},
       {"beats_removed", diff.beats_removed},
       {"storylines_added", diff.storylines_added},
       {"storylines_removed", diff.storylines_removed},
       {"storylines_changed", diff.storylines_changed},
       {"edges_added", edges_to_json(diff.edges_added)},
       {"edges_removed", edges_to_json(diff.edges_removed)}};
}

nlohmann::ordered_json payload_to_json(const RenderPayload& payload) {
  return nlohmann::ordered_json::parse(serialize_render_payload(payload));
}

RenderPayload payload_from_json(const nlohmann::ordered_json& j, const std::string& code) {
  PayloadParseResult parsed = parse_render_payload(j.dump());
  if (!parsed.ok()) {
    json details = json::array();
    for (const auto& d : parsed.diagnostics) details.push_back(d);
    throw Error(code, "render payload does not parse", details);
  }
  return std::move(*parsed.payload);
}

}  // namespace grim
