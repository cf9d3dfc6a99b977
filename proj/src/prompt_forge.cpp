#include "grim/prompt_forge.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "grim/error.hpp"
#include "grim/storyline_parser.hpp"
#include "grim/text.hpp"

#ifndef GRIM_TEMPLATE_DIR
#define GRIM_TEMPLATE_DIR "templates"
#endif

namespace grim {

std::string_view to_string(PromptKind kind) {
  switch (kind) {
    case PromptKind::kGenerate:
      return "generate";
    case PromptKind::kGraphify:
      return "graphify";
    case PromptKind::kEdit:
      return "edit";
  }
  return "unknown";
}

PromptTemplate PromptTemplate::from_text(std::string_view source) {
  PromptTemplate t;
  constexpr std::string_view kHeader = "## template:";
  std::string_view body = source;
  if (source.substr(0, kHeader.size()) == kHeader) {
    size_t nl = source.find('\n');
    std::string_view header = text::trim(source.substr(kHeader.size(), nl - kHeader.size()));
    body = nl == std::string_view::npos ? std::string_view() : source.substr(nl + 1);
    if (size_t paren = header.find('('); paren != std::string_view::npos) header = text::trim(header.substr(0, paren));
    auto words = text::split(header, ' ');
    std::vector<std::string> kept;
    for (auto w : words)
      if (!w.empty()) kept.emplace_back(w);
    t.version_ = text::join(kept, "/");
  }
  if (t.version_.empty()) t.version_ = "unversioned";
  t.body_ = std::string(body);
  return t;
}

std::set<std::string> PromptTemplate::placeholders() const {
  std::set<std::string> out;
  for (size_t at = body_.find("{{"); at != std::string::npos; at = body_.find("{{", at + 2)) {
    size_t close = body_.find("}}", at);
    if (close == std::string::npos) break;
    out.insert(body_.substr(at + 2, close - at - 2));
  }
  return out;
}

std::string PromptTemplate::render(const std::map<std::string, std::string>& values) const {
  for (const auto& [key, _] : values)
    if (!placeholders().contains(key))
      throw Error("TEMPLATE-PLACEHOLDER", "template " + version_ + " has no {{" + key + "}} marker");
  std::string out;
  out.reserve(body_.size());
  size_t pos = 0;
  while (true) {
    size_t at = body_.find("{{", pos);
    size_t close = at == std::string::npos ? std::string::npos : body_.find("}}", at);
    if (close == std::string::npos) {
      out.append(body_, pos, std::string::npos);
      return out;
    }
    out.append(body_, pos, at - pos);
    std::string key = body_.substr(at + 2, close - at - 2);
    auto it = values.find(key);
    if (it == values.end())
      throw Error("TEMPLATE-PLACEHOLDER", "no value for {{" + key + "}} in template " + version_);
    out += it->second;
    pos = close + 2;
  }
}

TemplateSet TemplateSet::load(const std::filesystem::path& dir) {
  TemplateSet set;
  for (PromptKind kind : {PromptKind::kGenerate, PromptKind::kGraphify, PromptKind::kEdit}) {
    auto path = dir / (std::string(to_string(kind)) + ".tmpl");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("TEMPLATE-MISSING", "cannot read template " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    set.templates_.emplace(kind, PromptTemplate::from_text(buf.str()));
  }
  return set;
}

std::filesystem::path TemplateSet::default_dir() {
  if (const char* env = std::getenv("GRIM_TEMPLATE_DIR"); env && *env) return env;
  return GRIM_TEMPLATE_DIR;
}

TemplateSet TemplateSet::load_default() { return load(default_dir()); }

const PromptTemplate& TemplateSet::get(PromptKind kind) const { return templates_.at(kind); }

namespace {

PromptText make_prompt(const TemplateSet& templates, PromptKind kind,
                       const std::map<std::string, std::string>& values, const nlohmann::json& inputs) {
  const auto& tmpl = templates.get(kind);
  PromptText prompt;
  prompt.kind = kind;
  prompt.template_version = tmpl.version();
  prompt.text = tmpl.render(values);
  nlohmann::json keyed = {{"kind", to_string(kind)}, {"template", tmpl.version()}, {"inputs", inputs}};
  prompt.input_digest = text::sha256_hex(keyed.dump());
  return prompt;
}

std::string beat_ref(BeatId id) { return "Beat " + std::to_string(id); }

}  // namespace

PromptText build_generation_prompt(const TemplateSet& templates, const GenerationSpec& spec) {
  check_generation_spec(spec);
  std::map<std::string, std::string> values = {
      {"story", text::single_line(spec.story)},
      {"setting", text::single_line(spec.setting)},
      {"n_starts", std::to_string(spec.n_starts)},
      {"n_endings", std::to_string(spec.n_endings)},
      {"n_storylines", std::to_string(spec.n_storylines)},
  };
  nlohmann::json inputs = {{"story", spec.story},
                           {"setting", spec.setting},
                           {"n_starts", spec.n_starts},
                           {"n_endings", spec.n_endings},
                           {"n_storylines", spec.n_storylines}};
  return make_prompt(templates, PromptKind::kGenerate, values, inputs);
}

PromptText build_graphify_prompt(const TemplateSet& templates, std::string_view bundle_text) {
  std::string draft(text::trim(bundle_text));
  if (draft.empty()) throw Error("PRECONDITION", "graph prompt needs a non-empty storyline draft");
  return make_prompt(templates, PromptKind::kGraphify, {{"draft", draft}}, {{"draft", draft}});
}

EditSet assign_provisional_ids(const StoryBundle& bundle, EditSet edits) {
  BeatId next = bundle.max_beat_id();
  for (const auto& n : edits.nodes_added) next = std::max(next, n.id);
  for (auto& n : edits.nodes_added)
    if (n.id == 0) n.id = ++next;
  return edits;
}

EditSet resolve_edit_set(const StoryBundle& bundle, EditSet edits) {
  if (edits.empty()) throw Error("EDIT-EMPTY", "edit set is empty; nothing to regenerate");

  for (BeatId id : edits.nodes_deleted)
    if (!bundle.beats.contains(id))
      throw Error("EDIT-REF-UNKNOWN", "cannot delete unknown beat " + std::to_string(id), {{"beat", id}});

  std::set<BeatId> requested;
  for (const auto& n : edits.nodes_added)
    if (n.id != 0) {
      if (n.id < 0 || bundle.beats.contains(n.id) || requested.contains(n.id))
        throw Error("EDIT-ID-CLASH", "added beat id " + std::to_string(n.id) + " collides with an existing beat",
                    {{"beat", n.id}});
      requested.insert(n.id);
    }
  edits = assign_provisional_ids(bundle, std::move(edits));
  std::set<BeatId> added;
  for (auto& n : edits.nodes_added) {
    n.description = text::single_line(n.description);
    if (n.description.empty()) throw Error("EDIT-INVALID", "added beat has a blank description");
    if (added.contains(n.id)) {
      throw Error("EDIT-ID-CLASH", "added beat id " + std::to_string(n.id) + " collides with an existing beat",
                  {{"beat", n.id}});
    }
    added.insert(n.id);
  }

  auto known = [&](BeatId id) { return bundle.beats.contains(id) || added.contains(id); };
  for (const auto& [a, b] : edits.edges_added) {
    for (BeatId id : {a, b}) {
      if (!known(id))
        throw Error("EDIT-REF-UNKNOWN", "added edge cites unknown beat " + std::to_string(id), {{"beat", id}});
      if (edits.nodes_deleted.contains(id))
        throw Error("EDIT-INVALID", "added edge " + std::to_string(a) + "->" + std::to_string(b) +
                                        " touches deleted beat " + std::to_string(id));
    }
  }
  for (const auto& [a, b] : edits.edges_deleted)
    for (BeatId id : {a, b})
      if (!bundle.beats.contains(id))
        throw Error("EDIT-REF-UNKNOWN", "deleted edge cites unknown beat " + std::to_string(id), {{"beat", id}});
  return edits;
}

PromptText build_edit_prompt(const TemplateSet& templates, const StoryBundle& bundle, const EditSet& raw_edits,
                             const std::vector<std::string>& corrections) {
  EditSet edits = resolve_edit_set(bundle, raw_edits);

  auto lines_or_none = [](const std::vector<std::string>& lines) {
    return lines.empty() ? std::string("(none)") : text::join(lines, "\n");
  };
  std::vector<std::string> added, deleted, edges_added, edges_deleted;
  for (const auto& n : edits.nodes_added) added.push_back(beat_ref(n.id) + ": " + n.description);
  for (BeatId id : edits.nodes_deleted) deleted.push_back(beat_ref(id));
  for (const auto& [a, b] : edits.edges_added) edges_added.push_back(beat_ref(a) + " -> " + beat_ref(b));
  for (const auto& [a, b] : edits.edges_deleted) edges_deleted.push_back(beat_ref(a) + " -> " + beat_ref(b));

  std::string original = serialize_story_bundle(bundle);
  while (!original.empty() && original.back() == '\n') original.pop_back();

  std::map<std::string, std::string> values = {
      {"original_storylines", original},
      {"added_beats", lines_or_none(added)},
      {"deleted_beats", lines_or_none(deleted)},
      {"added_edges", lines_or_none(edges_added)},
      {"deleted_edges", lines_or_none(edges_deleted)},
  };

  nlohmann::json edit_json = {{"original", original},
                              {"added", added},
                              {"deleted", deleted},
                              {"edges_added", edges_added},
                              {"edges_deleted", edges_deleted},
                              {"corrections", corrections}};
  PromptText prompt = make_prompt(templates, PromptKind::kEdit, values, edit_json);
  if (!corrections.empty()) {
    if (!prompt.text.empty() && prompt.text.back() != '\n') prompt.text += '\n';
    prompt.text += "\nYOUR PREVIOUS ANSWER WAS REJECTED. Fix these problems and output the complete updated document again:\n";
    for (const auto& c : corrections) prompt.text += "- " + c + "\n";
  }
  return prompt;
}

}  // namespace grim
