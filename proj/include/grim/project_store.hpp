#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "grim/graph_builder.hpp"
#include "grim/llm_gateway.hpp"
#include "grim/model.hpp"

namespace grim {

inline constexpr int kProjectSchemaVersion = 1;

struct Provenance {
  enum class Kind { kGenerated, kEdited };

  Kind kind = Kind::kGenerated;
  EditSet edits;  // kEdited only

  friend bool operator==(const Provenance&, const Provenance&) = default;
};

struct ProjectVersion {
  int version = 0;
  Provenance provenance;
  StoryBundle bundle;
  RenderPayload payload;
  std::vector<Transcript> transcripts;

  friend bool operator==(const ProjectVersion&, const ProjectVersion&) = default;
};

struct Project {
  std::string id;
  GenerationSpec spec;
  std::string created;
  std::string updated;
  std::vector<ProjectVersion> versions;

  /// Throws Error("VERSION-UNKNOWN").
  const ProjectVersion& version(int number) const;
  const ProjectVersion& latest() const;

  /// Appends version N+1 with the deterministic payload of `bundle`.
  const ProjectVersion& append_version(StoryBundle bundle, Provenance provenance,
                                       std::vector<Transcript> transcripts);

  friend bool operator==(const Project&, const Project&) = default;
};

/// Fresh project with a random 16-hex-digit id and no versions.
/// Throws Error("SPEC-INVALID").
Project new_project(const GenerationSpec& spec);

std::filesystem::path project_path(const std::filesystem::path& dir, const std::string& id);

/// Writes the project atomically under an exclusive advisory lock on
/// "<path>.lock". Throws Error("IO").
void save_project(const Project& project, const std::filesystem::path& path);

/// Reads under a shared lock. Throws Error with code IO,
/// SCHEMA-VERSION-UNSUPPORTED (other schema_version or unknown fields) or
/// CORRUPT.
Project load_project(const std::filesystem::path& path);

/// Writes the canonical payload file of one version. Throws VERSION-UNKNOWN
/// or IO.
void export_render_payload(const Project& project, int version, const std::filesystem::path& path);

/// Atomic file replace via a sibling temp file. Throws Error("IO").
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);
/// Throws Error("IO").
std::string read_file(const std::filesystem::path& path);

}  // namespace grim
