#include "grim/storyline_parser.hpp"

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>

#include "grim/text.hpp"

namespace grim {

std::string_view to_string(Severity severity) {
  return severity == Severity::kError ? "error" : "warning";
}

std::vector<ParseDiagnostic> ParseResult::errors() const {
  std::vector<ParseDiagnostic> out;
  for (const auto& d : diagnostics)
    if (d.severity == Severity::kError) out.push_back(d);
  return out;
}

std::vector<ParseDiagnostic> ParseResult::warnings() const {
  std::vector<ParseDiagnostic> out;
  for (const auto& d : diagnostics)
    if (d.severity == Severity::kWarning) out.push_back(d);
  return out;
}

namespace {

struct Occurrence {
  std::string description;
  int line = 0;
};

struct SequenceLine {
  Storyline storyline;
  int line = 0;
};

struct DetailedStoryline {
  int index = 0;
  int line = 0;
  std::vector<BeatId> beat_ids;
};

struct Pointer {
  NodeRef label;
  BeatId beat = 0;
  int line = 0;
};

enum class Context { kNone, kDetailed, kMaster, kUnknownSection };

std::string strip_markup(std::string_view raw) {
  std::string line(raw);
  for (size_t at = line.find("\\_"); at != std::string::npos; at = line.find("\\_", at))
    line.erase(at, 1);
  std::string_view v = text::trim(line);
  for (std::string_view bullet : {"- ", "* ", "\xE2\x80\xA2 "}) {
    if (v.substr(0, bullet.size()) == bullet) {
      v.remove_prefix(bullet.size());
      break;
    }
  }
  if (v.substr(0, 2) == "**") v.remove_prefix(2);
  return std::string(text::trim(v));
}

// "Storylines", "Storylines (8)", "Storylines (with only beat numbers)".
bool is_counted_header(std::string_view head, std::string_view word) {
  std::string lower = text::to_lower(text::trim(head));
  if (lower == word) return true;
  if (lower.rfind(word, 0) != 0) return false;
  std::string_view rest = text::trim(std::string_view(lower).substr(word.size()));
  return !rest.empty() && rest.front() == '(';
}

std::optional<int> storyline_heading_index(std::string_view head) {
  std::string_view h = text::trim(head);
  if (!text::istarts_with(h, "storyline")) return std::nullopt;
  h.remove_prefix(9);
  h = text::trim(h);
  if (!h.empty() && h.front() == '_') h.remove_prefix(1);
  return text::parse_positive_int(h);
}

// "beat 7x", "storyline 3b": a numbered token we failed to parse.
bool looks_numbered(std::string_view head, std::string_view word) {
  if (head.substr(0, word.size()) != word) return false;
  head.remove_prefix(word.size());
  while (!head.empty() && (head.front() == ' ' || head.front() == '_')) head.remove_prefix(1);
  return !head.empty() && std::isdigit(static_cast<unsigned char>(head.front()));
}

std::optional<BeatId> pointer_target(std::string_view rest, std::string_view verb) {
  std::string lower = text::to_lower(rest);
  size_t at = lower.find(verb);
  if (at == std::string::npos) return std::nullopt;
  std::string_view tail = text::trim(std::string_view(rest).substr(at + verb.size()));
  // Up to the first non-token character.
  size_t stop = tail.find_first_of(",.;)");
  if (stop != std::string_view::npos) tail = tail.substr(0, stop);
  auto ref = NodeRef::parse(tail);
  if (!ref || !ref->is_beat()) return std::nullopt;
  return ref->number();
}

class DocumentParser {
 public:
  DocumentParser(std::string_view text, const GenerationSpec& spec, const ParseOptions& options)
      : source_(text), spec_(spec), options_(options), lines_(text::split_lines(text)) {}

  ParseResult run() {
    for (size_t i = 0; i < lines_.size(); ++i) handle_line(strip_markup(lines_[i]), static_cast<int>(i) + 1);
    finish();
    ParseResult result;
    result.diagnostics = std::move(diags_);
    if (!has_error_) result.bundle = std::move(bundle_);
    return result;
  }

 private:
  int last_line() const { return std::max<int>(1, static_cast<int>(lines_.size())); }

  void error(std::string code, int line, std::string message) {
    has_error_ = true;
    diags_.push_back({Severity::kError, std::move(code), line, std::move(message)});
  }
  void warn(std::string code, int line, std::string message) {
    diags_.push_back({Severity::kWarning, std::move(code), line, std::move(message)});
  }

  void handle_line(const std::string& line, int lineno) {
    if (line.empty()) return;
    size_t colon = line.find(':');
    std::string head = colon == std::string::npos ? line : line.substr(0, colon);
    std::erase(head, '*');
    std::string rest =
        colon == std::string::npos ? std::string() : std::string(text::trim(line.substr(colon + 1)));
    if (rest.rfind("**", 0) == 0) rest = std::string(text::trim(rest.substr(2)));
    std::string lower_head = text::to_lower(text::trim(head));

    if (colon != std::string::npos &&
        (lower_head == "story" || lower_head == "setting" || lower_head == "starts" ||
         lower_head == "endings" ||
         (lower_head == "storylines" && !rest.empty() &&
          std::isdigit(static_cast<unsigned char>(rest.front()))))) {
      header_field(lower_head, rest, lineno);
      return;
    }
    if (is_counted_header(head, "storylines")) {
      context_ = Context::kNone;
      return;
    }
    if (is_counted_header(head, "beats")) {
      context_ = Context::kMaster;
      saw_master_header_ = true;
      return;
    }
    if (text::istarts_with(lower_head, "common intermediate beats") ||
        text::istarts_with(lower_head, "common beats")) {
      common_line(rest, lineno);
      context_ = Context::kNone;
      return;
    }
    if (auto index = storyline_heading_index(head)) {
      if (rest.empty()) {
        detailed_heading(*index, lineno);
      } else {
        sequence_line(*index, rest, lineno);
        context_ = Context::kNone;
      }
      return;
    }
    if (auto ref = NodeRef::parse(head); ref && colon != std::string::npos) {
      if (ref->is_beat()) {
        beat_line(ref->number(), rest, lineno);
      } else {
        pointer_line(*ref, rest, lineno);
        context_ = Context::kNone;
      }
      return;
    }
    if (looks_numbered(lower_head, "beat") || looks_numbered(lower_head, "storyline")) {
      error("MALFORMED-LINE", lineno, "cannot parse line: " + line);
      return;
    }
    if (colon != std::string::npos && rest.empty()) {
      warn("UNKNOWN-SECTION", lineno, "ignoring unknown section '" + head + "'");
      context_ = Context::kUnknownSection;
      return;
    }
    if (context_ == Context::kUnknownSection) return;
    warn("UNKNOWN-LINE", lineno, "ignoring line: " + line);
  }

  void header_field(const std::string& key, std::string rest, int lineno) {
    while (!rest.empty() && (rest.back() == ',' || rest.back() == '.')) rest.pop_back();
    rest = text::single_line(rest);
    auto mismatch = [&](const std::string& expected) {
      warn("HEADER-MISMATCH", lineno,
           "document header " + key + " '" + rest + "' differs from requested '" + expected + "'");
    };
    if (key == "story") {
      if (!text::iequals(rest, text::single_line(spec_.story))) mismatch(spec_.story);
    } else if (key == "setting") {
      if (!text::iequals(rest, text::single_line(spec_.setting))) mismatch(spec_.setting);
    } else {
      int expected = key == "starts" ? spec_.n_starts
                     : key == "endings" ? spec_.n_endings
                                        : spec_.n_storylines;
      auto n = text::parse_positive_int(rest);
      if (!n) {
        error("MALFORMED-LINE", lineno, "header " + key + " is not a positive integer");
      } else if (*n != expected) {
        mismatch(std::to_string(expected));
      }
    }
  }

  void common_line(const std::string& rest, int lineno) {
    if (saw_common_) warn("DUPLICATE-SECTION", lineno, "second common-beats line; merging");
    saw_common_ = true;
    std::string_view r = text::trim(rest);
    if (r.empty() || text::iequals(r, "none") || text::iequals(r, "none.")) return;
    for (auto token : text::split(r, ',')) {
      token = text::trim(token);
      while (!token.empty() && token.back() == '.') token.remove_suffix(1);
      if (token.empty()) continue;
      auto ref = NodeRef::parse(token);
      if (!ref || !ref->is_beat()) {
        error("MALFORMED-LINE", lineno, "bad common beat token '" + std::string(token) + "'");
        continue;
      }
      bundle_.declared_common_beats.insert(ref->number());
      common_refs_.emplace_back(ref->number(), lineno);
    }
  }

  void detailed_heading(int index, int lineno) {
    for (const auto& d : detailed_) {
      if (d.index == index) {
        error("MALFORMED-LINE", lineno,
              "storyline " + std::to_string(index) + " described twice in detailed section");
        break;
      }
    }
    detailed_.push_back({index, lineno, {}});
    context_ = Context::kDetailed;
  }

  void sequence_line(int index, const std::string& rest, int lineno) {
    std::string body = rest;
    for (std::string arrow : {"->", "\xE2\x86\x92"}) {
      for (size_t at = body.find(arrow); at != std::string::npos; at = body.find(arrow, at))
        body.replace(at, arrow.size(), ",");
    }
    std::vector<NodeRef> tokens;
    for (auto token : text::split(body, ',')) {
      token = text::trim(token);
      while (!token.empty() && token.back() == '.') token.remove_suffix(1);
      if (token.empty()) continue;
      auto ref = NodeRef::parse(token);
      if (!ref) {
        error("MALFORMED-LINE", lineno,
              "storyline " + std::to_string(index) + ": bad token '" + std::string(token) + "'");
        return;
      }
      tokens.push_back(*ref);
    }
    if (tokens.size() < 3 || tokens.front().kind() != NodeRef::Kind::kStart ||
        tokens.back().kind() != NodeRef::Kind::kEnd) {
      error("MALFORMED-LINE", lineno,
            "storyline " + std::to_string(index) +
                " must read START_k, beat, ..., beat, END_k");
      return;
    }
    Storyline s;
    s.index = index;
    s.start = tokens.front().number();
    s.end = tokens.back().number();
    for (size_t i = 1; i + 1 < tokens.size(); ++i) {
      if (!tokens[i].is_beat()) {
        error("MALFORMED-LINE", lineno,
              "storyline " + std::to_string(index) + ": dummy node '" + tokens[i].label() +
                  "' inside the beat sequence");
        return;
      }
      s.beat_ids.push_back(tokens[i].number());
    }
    for (const auto& seq : sequences_) {
      if (seq.storyline.index == index) {
        error("MALFORMED-LINE", lineno,
              "storyline " + std::to_string(index) + " listed twice in numeric section");
        return;
      }
    }
    sequences_.push_back({std::move(s), lineno});
  }

  void beat_line(BeatId id, const std::string& rest, int lineno) {
    std::string description = text::single_line(rest);
    if (description.empty()) {
      error("MALFORMED-LINE", lineno, "beat " + std::to_string(id) + " has no description");
      return;
    }
    switch (context_) {
      case Context::kDetailed:
        detailed_.back().beat_ids.push_back(id);
        occurrences_[id].push_back({std::move(description), lineno});
        break;
      case Context::kMaster: {
        auto [it, inserted] = master_.try_emplace(id, Occurrence{description, lineno});
        if (!inserted) {
          if (text::normalize_description(it->second.description) ==
              text::normalize_description(description)) {
            warn("DUPLICATE-BEAT", lineno, "beat " + std::to_string(id) + " listed twice");
          } else {
            error("DESC-CONFLICT", lineno,
                  "beat " + std::to_string(id) + " has two different descriptions in the master list (first at line " +
                      std::to_string(it->second.line) + ")");
          }
        }
        break;
      }
      default:
        warn("ORPHAN-BEAT", lineno,
             "beat " + std::to_string(id) + " outside any storyline or the Beats: list; ignored");
    }
  }

  void pointer_line(NodeRef label, const std::string& rest, int lineno) {
    bool is_start = label.kind() == NodeRef::Kind::kStart;
    auto target = pointer_target(rest, is_start ? "points to" : "points from");
    if (target) pointers_.push_back({label, *target, lineno});
  }

  void finish() {
    if (!saw_master_header_ || master_.empty())
      error("MISSING-SECTION", last_line(), "no \"Beats:\" master list");
    if (sequences_.empty())
      error("MISSING-SECTION", last_line(), "no numeric storylines (\"Storyline k: START_a, ..., END_b\")");
    if (!saw_common_)
      warn("MISSING-SECTION", last_line(), "no \"Common intermediate Beats:\" line");

    check_references();
    check_descriptions();
    check_sequences();
    if (has_error_) return;

    bundle_.spec = spec_;
    bundle_.raw_text = std::string(source_);
    for (auto& seq : sequences_) bundle_.storylines.push_back(seq.storyline);

    std::set<BeatId> used;
    for (const auto& s : bundle_.storylines) used.insert(s.beat_ids.begin(), s.beat_ids.end());
    for (const auto& [id, occ] : master_) {
      if (used.contains(id)) {
        bundle_.beats.emplace(id, Beat{id, occ.description});
      } else {
        warn("UNUSED-BEAT", occ.line, "beat " + std::to_string(id) + " is not used by any storyline; dropped");
        bundle_.declared_common_beats.erase(id);
      }
    }
    derive_dummy_pointers(bundle_);
    check_pointers();
  }

  void check_references() {
    auto missing = [&](BeatId id) { return !master_.empty() && !master_.contains(id); };
    if (master_.empty()) return;
    for (const auto& seq : sequences_)
      for (BeatId id : seq.storyline.beat_ids)
        if (missing(id))
          error("DANGLING-REF", seq.line,
                "storyline " + std::to_string(seq.storyline.index) + " cites beat " + std::to_string(id) +
                    " absent from the Beats: list");
    for (const auto& [id, occs] : occurrences_)
      if (missing(id))
        error("DANGLING-REF", occs.front().line,
              "beat " + std::to_string(id) + " appears in a storyline but not in the Beats: list");
    for (const auto& p : pointers_)
      if (missing(p.beat))
        error("DANGLING-REF", p.line,
              p.label.label() + " points at beat " + std::to_string(p.beat) + " absent from the Beats: list");
    for (const auto& [id, line] : common_refs_)
      if (missing(id))
        error("DANGLING-REF", line, "common beat " + std::to_string(id) + " absent from the Beats: list");
  }

  void check_descriptions() {
    Severity severity = options_.strict_descriptions ? Severity::kError : Severity::kWarning;
    for (const auto& [id, occs] : occurrences_) {
      auto m = master_.find(id);
      if (m == master_.end()) continue;
      std::string canonical = text::normalize_description(m->second.description);
      std::set<std::string> reported;
      for (const auto& occ : occs) {
        std::string norm = text::normalize_description(occ.description);
        if (norm == canonical || !reported.insert(norm).second) continue;
        if (severity == Severity::kError) has_error_ = true;
        diags_.push_back({severity, "DESC-CONFLICT", occ.line,
                          "beat " + std::to_string(id) + " described differently than in the Beats: list (line " +
                              std::to_string(m->second.line) + ")"});
      }
    }
  }

  void check_sequences() {
    if (detailed_.empty()) return;
    for (const auto& seq : sequences_) {
      auto it = std::find_if(detailed_.begin(), detailed_.end(),
                             [&](const DetailedStoryline& d) { return d.index == seq.storyline.index; });
      if (it == detailed_.end()) {
        error("SEQ-MISMATCH", seq.line,
              "storyline " + std::to_string(seq.storyline.index) + " has no detailed description");
      } else if (it->beat_ids != seq.storyline.beat_ids) {
        error("SEQ-MISMATCH", seq.line,
              "storyline " + std::to_string(seq.storyline.index) +
                  ": numeric sequence differs from its detailed beats (line " + std::to_string(it->line) + ")");
      }
    }
    for (const auto& d : detailed_) {
      bool listed = std::any_of(sequences_.begin(), sequences_.end(),
                                [&](const SequenceLine& s) { return s.storyline.index == d.index; });
      if (!listed)
        error("SEQ-MISMATCH", d.line,
              "storyline " + std::to_string(d.index) + " missing from the numeric storylines");
    }
  }

  void check_pointers() {
    for (const auto& p : pointers_) {
      bool is_start = p.label.kind() == NodeRef::Kind::kStart;
      std::set<BeatId> reached;
      for (const auto& s : bundle_.storylines) {
        if ((is_start ? s.start : s.end) == p.label.number())
          reached.insert(is_start ? s.beat_ids.front() : s.beat_ids.back());
      }
      if (reached.empty()) {
        warn("POINTER-UNUSED", p.line, p.label.label() + " is not used by any storyline");
      } else if (!reached.contains(p.beat)) {
        warn("POINTER-MISMATCH", p.line,
             p.label.label() + " declares beat " + std::to_string(p.beat) + " but storylines disagree");
      }
    }
  }

  std::string_view source_;
  const GenerationSpec& spec_;
  const ParseOptions& options_;
  std::vector<std::string> lines_;

  Context context_ = Context::kNone;
  bool has_error_ = false;
  bool saw_master_header_ = false;
  bool saw_common_ = false;
  std::vector<ParseDiagnostic> diags_;
  std::map<BeatId, Occurrence> master_;
  std::map<BeatId, std::vector<Occurrence>> occurrences_;
  std::vector<DetailedStoryline> detailed_;
  std::vector<SequenceLine> sequences_;
  std::vector<Pointer> pointers_;
  std::vector<std::pair<BeatId, int>> common_refs_;
  StoryBundle bundle_;
};

}  // namespace

ParseResult parse_storyline_document(std::string_view text, const GenerationSpec& spec,
                                     const ParseOptions& options) {
  return DocumentParser(text, spec, options).run();
}

std::string serialize_story_bundle(const StoryBundle& bundle) {
  std::ostringstream out;
  const auto& spec = bundle.spec;
  out << "Story: " << text::single_line(spec.story) << "\n"
      << "Starts: " << spec.n_starts << "\n"
      << "Endings: " << spec.n_endings << "\n"
      << "Storylines: " << spec.n_storylines << "\n"
      << "Setting: " << text::single_line(spec.setting) << "\n\n";

  auto description = [&](BeatId id) -> std::string {
    auto it = bundle.beats.find(id);
    return it == bundle.beats.end() ? std::string() : text::single_line(it->second.description);
  };

  out << "Storylines (detailed with beat descriptions):\n";
  for (const auto& s : bundle.storylines) {
    out << "Storyline " << s.index << ":\n";
    for (BeatId id : s.beat_ids) out << "Beat " << id << ": " << description(id) << "\n";
  }
  out << "\n";
  for (const auto& [k, id] : bundle.starts) out << "START_" << k << ": Points to Beat " << id << "\n";
  for (const auto& [k, id] : bundle.ends) out << "END_" << k << ": Points from Beat " << id << "\n";
  out << "\nBeats:\n";
  for (const auto& [id, beat] : bundle.beats) out << "Beat " << id << ": " << description(id) << "\n";

  out << "\nCommon intermediate Beats: ";
  if (bundle.declared_common_beats.empty()) {
    out << "none";
  } else {
    bool first = true;
    for (BeatId id : bundle.declared_common_beats) {
      out << (first ? "" : ", ") << "Beat " << id;
      first = false;
    }
  }
  out << "\n\nStorylines (with only beat numbers):\n";
  for (const auto& s : bundle.storylines) {
    out << "Storyline " << s.index << ": START_" << s.start;
    for (BeatId id : s.beat_ids) out << ", " << id;
    out << ", END_" << s.end << "\n";
  }
  return out.str();
}

}  // namespace grim
