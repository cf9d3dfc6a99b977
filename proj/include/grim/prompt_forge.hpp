#pragma once

#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "grim/model.hpp"

namespace grim {

enum class PromptKind { kGenerate, kGraphify, kEdit };

std::string_view to_string(PromptKind kind);

struct PromptText {
  PromptKind kind = PromptKind::kGenerate;
  std::string text;
  std::string input_digest;
  std::string template_version;
};

/// A prompt template file. The first line is a header comment
/// "## template: <name> <version> [(notes)]" and is not rendered; the body
/// uses {{placeholder}} markers.
class PromptTemplate {
 public:
  static PromptTemplate from_text(std::string_view source);

  const std::string& version() const { return version_; }
  const std::string& body() const { return body_; }
  std::set<std::string> placeholders() const;

  /// Throws Error("TEMPLATE-PLACEHOLDER") if a marker has no value or a
  /// value has no marker.
  std::string render(const std::map<std::string, std::string>& values) const;

 private:
  std::string version_;
  std::string body_;
};

class TemplateSet {
 public:
  /// Loads generate.tmpl, graphify.tmpl and edit.tmpl from `dir`.
  /// Throws Error("TEMPLATE-MISSING").
  static TemplateSet load(const std::filesystem::path& dir);

  /// $GRIM_TEMPLATE_DIR if set, otherwise the directory configured at build
  /// time.
  static TemplateSet load_default();
  static std::filesystem::path default_dir();

  const PromptTemplate& get(PromptKind kind) const;

 private:
  std::map<PromptKind, PromptTemplate> templates_;
};

PromptText build_generation_prompt(const TemplateSet& templates, const GenerationSpec& spec);

/// Throws Error("PRECONDITION") on an empty draft.
PromptText build_graphify_prompt(const TemplateSet& templates, std::string_view bundle_text);

/// Gives every added node without an id the next free number after the
/// larger of the bundle's highest beat and any explicitly requested id.
EditSet assign_provisional_ids(const StoryBundle& bundle, EditSet edits);

/// Checks an edit set against its bundle and assigns provisional ids
/// (max existing id + 1, ascending) to added nodes without one.
///
/// Throws Error with code EDIT-EMPTY, EDIT-REF-UNKNOWN, EDIT-ID-CLASH or
/// EDIT-INVALID (blank description, added edge touching a deleted beat).
EditSet resolve_edit_set(const StoryBundle& bundle, EditSet edits);

/// `corrections` lists the checks the previous attempt failed; when non-empty
/// they are appended as corrective instructions.
PromptText build_edit_prompt(const TemplateSet& templates, const StoryBundle& bundle, const EditSet& edits,
                             const std::vector<std::string>& corrections = {});

}  // namespace grim
