#include "grim/project_store.hpp"

#include <fcntl.h>
#include <sys/file.h>
#include <unistd.h>

#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <random>
#include <sstream>

#include "grim/error.hpp"
#include "grim/json_codec.hpp"
#include "grim/text.hpp"

namespace grim {

namespace fs = std::filesystem;

const ProjectVersion& Project::version(int number) const {
  if (number < 1 || number > static_cast<int>(versions.size()))
    throw Error("VERSION-UNKNOWN", "project " + id + " has no version " + std::to_string(number),
                {{"version", number}, {"available", versions.size()}});
  return versions[number - 1];
}

const ProjectVersion& Project::latest() const {
  if (versions.empty()) throw Error("VERSION-UNKNOWN", "project " + id + " has no versions yet");
  return versions.back();
}

const ProjectVersion& Project::append_version(StoryBundle bundle, Provenance provenance,
                                              std::vector<Transcript> transcripts) {
  ProjectVersion v;
  v.version = static_cast<int>(versions.size()) + 1;
  v.provenance = std::move(provenance);
  v.payload = build_render_payload(bundle);
  v.bundle = std::move(bundle);
  v.transcripts = std::move(transcripts);
  versions.push_back(std::move(v));
  updated = text::utc_timestamp();
  return versions.back();
}

Project new_project(const GenerationSpec& spec) {
  check_generation_spec(spec);
  std::mt19937_64 rng(std::random_device{}());
  char id[17];
  std::snprintf(id, sizeof id, "%016llx", static_cast<unsigned long long>(rng()));
  Project p;
  p.id = id;
  p.spec = spec;
  p.created = p.updated = text::utc_timestamp();
  return p;
}

fs::path project_path(const fs::path& dir, const std::string& id) { return dir / (id + ".grim.json"); }

namespace {

class FileLock {
 public:
  FileLock(const fs::path& project_file, bool exclusive) {
    fs::path lock_path = project_file;
    lock_path += ".lock";
    fd_ = ::open(lock_path.c_str(), O_RDWR | O_CREAT | O_CLOEXEC, 0644);
    if (fd_ < 0) throw Error("IO", "cannot open lock file " + lock_path.string());
    if (::flock(fd_, exclusive ? LOCK_EX : LOCK_SH) != 0) {
      ::close(fd_);
      throw Error("IO", "cannot lock " + lock_path.string());
    }
  }
  ~FileLock() {
    ::flock(fd_, LOCK_UN);
    ::close(fd_);
  }
  FileLock(const FileLock&) = delete;
  FileLock& operator=(const FileLock&) = delete;

 private:
  int fd_ = -1;
};

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw Error("CORRUPT", where + " must be an object");
  for (const auto& [key, _] : j.items()) {
    bool known = false;
    for (const char* a : allowed) known = known || key == a;
    if (!known)
      throw Error("SCHEMA-VERSION-UNSUPPORTED",
                  "unknown field '" + key + "' in " + where + "; written by a newer schema?", {{"field", key}});
  }
}

json provenance_json(const Provenance& p) {
  if (p.kind == Provenance::Kind::kGenerated) return {{"kind", "generated"}};
  return {{"kind", "edited"}, {"edits", p.edits}};
}

Provenance provenance_from(const json& j) {
  check_keys(j, {"kind", "edits"}, "provenance");
  Provenance p;
  std::string kind = j.at("kind").get<std::string>();
  if (kind == "generated") {
    p.kind = Provenance::Kind::kGenerated;
  } else if (kind == "edited") {
    p.kind = Provenance::Kind::kEdited;
    p.edits = j.at("edits").get<EditSet>();
  } else {
    throw Error("CORRUPT", "unknown provenance kind '" + kind + "'");
  }
  return p;
}

nlohmann::ordered_json project_json(const Project& p) {
  nlohmann::ordered_json versions = nlohmann::ordered_json::array();
  for (const auto& v : p.versions) {
    nlohmann::ordered_json entry;
    entry["version"] = v.version;
    entry["provenance"] = provenance_json(v.provenance);
    entry["bundle"] = json(v.bundle);
    entry["payload"] = payload_to_json(v.payload);
    entry["transcripts"] = json(v.transcripts);
    versions.push_back(std::move(entry));
  }
  nlohmann::ordered_json out;
  out["schema_version"] = kProjectSchemaVersion;
  out["id"] = p.id;
  out["spec"] = json(p.spec);
  out["created"] = p.created;
  out["updated"] = p.updated;
  out["versions"] = std::move(versions);
  return out;
}

Project project_from(const nlohmann::ordered_json& oj) {
  if (!oj.is_object()) throw Error("CORRUPT", "project file must hold a JSON object");
  auto schema = oj.find("schema_version");
  if (schema == oj.end() || !schema->is_number_integer())
    throw Error("CORRUPT", "project file has no integer schema_version");
  if (schema->get<int>() != kProjectSchemaVersion)
    throw Error("SCHEMA-VERSION-UNSUPPORTED",
                "schema_version " + std::to_string(schema->get<int>()) + " is not supported (expected " +
                    std::to_string(kProjectSchemaVersion) + ")",
                {{"schema_version", schema->get<int>()}});

  json j = json::parse(oj.dump());
  check_keys(j, {"schema_version", "id", "spec", "created", "updated", "versions"}, "project");
  check_keys(j.at("spec"), {"story", "setting", "n_starts", "n_endings", "n_storylines"}, "spec");

  Project p;
  p.id = j.at("id").get<std::string>();
  p.spec = j.at("spec").get<GenerationSpec>();
  p.created = j.at("created").get<std::string>();
  p.updated = j.at("updated").get<std::string>();
  const auto& raw_versions = oj.at("versions");
  for (size_t i = 0; i < raw_versions.size(); ++i) {
    const auto& ov = raw_versions[i];
    const json& v = j.at("versions")[i];
    std::string where = "version " + std::to_string(i + 1);
    check_keys(v, {"version", "provenance", "bundle", "payload", "transcripts"}, where);
    check_keys(v.at("bundle"),
               {"spec", "beats", "storylines", "starts", "ends", "declared_common_beats", "raw_text", "raw_sha256"},
               where + " bundle");
    ProjectVersion pv;
    pv.version = v.at("version").get<int>();
    if (pv.version != static_cast<int>(i) + 1)
      throw Error("CORRUPT", "version numbers are not contiguous from 1 (found " + std::to_string(pv.version) +
                                 " at position " + std::to_string(i + 1) + ")");
    pv.provenance = provenance_from(v.at("provenance"));
    pv.bundle = v.at("bundle").get<StoryBundle>();
    pv.payload = payload_from_json(ov.at("payload"));
    for (const auto& t : v.at("transcripts")) {
      check_keys(t,
                 {"prompt_digest", "prompt_text", "response_text", "model_name", "template_version", "timestamp",
                  "latency_ms"},
                 where + " transcript");
      pv.transcripts.push_back(t.get<Transcript>());
    }
    p.versions.push_back(std::move(pv));
  }
  return p;
}

}  // namespace

void write_file_atomic(const fs::path& path, const std::string& contents) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::mt19937_64 rng(std::random_device{}());
  fs::path tmp = path;
  tmp += ".tmp" + std::to_string(rng() % 1000000007ULL);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("IO", "cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw Error("IO", "write to " + tmp.string() + " failed");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw Error("IO", "cannot replace " + path.string());
  }
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("IO", "cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void save_project(const Project& project, const fs::path& path) {
  std::string contents = project_json(project).dump(2) + "\n";
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  FileLock lock(path, true);
  write_file_atomic(path, contents);
}

Project load_project(const fs::path& path) {
  std::string contents;
  {
    if (!fs::exists(path)) throw Error("IO", "no project file at " + path.string());
    FileLock lock(path, false);
    contents = read_file(path);
  }
  try {
    return project_from(nlohmann::ordered_json::parse(contents));
  } catch (const json::exception& e) {
    throw Error("CORRUPT", "project file " + path.string() + " is malformed: " + e.what());
  }
}

void export_render_payload(const Project& project, int version, const fs::path& path) {
  write_file_atomic(path, serialize_render_payload(project.version(version).payload));
}

}  // namespace grim
