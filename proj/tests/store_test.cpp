#include <gtest/gtest.h>

#include <functional>
#include <thread>

#include "generators.hpp"
#include "grim/json_codec.hpp"
#include "grim/pipeline.hpp"
#include "grim/project_store.hpp"
#include "grim/validator.hpp"
#include "test_support.hpp"

using namespace grim;

namespace {

std::string code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

Project two_version_project() {
  Project p = new_project(fx::frankenstein_spec());
  Transcript t;
  t.prompt_digest = prompt_digest("p");
  t.prompt_text = "p";
  t.response_text = "r";
  t.model_name = "gpt-4";
  t.template_version = "generate/v1";
  t.timestamp = "2024-01-01T00:00:00Z";
  p.append_version(fx::frankenstein(), {}, {t});
  EditSet e;
  e.nodes_added.push_back({18, "Adam decides to help Dr. Frank on his next project"});
  e.edges_added = {{2, 18}};
  GenerationSpec five = fx::frankenstein_spec();
  five.n_storylines = 5;
  p.append_version(fx::parse_fixture("frankenstein_edit_response.txt", five), {Provenance::Kind::kEdited, e}, {});
  return p;
}

void rewrite(const std::filesystem::path& path, const std::function<void(nlohmann::json&)>& change) {
  auto j = nlohmann::json::parse(read_file(path));
  change(j);
  write_file_atomic(path, j.dump(2));
}

}  // namespace

TEST(ProjectStore, NewProjectIds) {
  Project a = new_project(fx::frankenstein_spec());
  Project b = new_project(fx::frankenstein_spec());
  EXPECT_EQ(a.id.size(), 16u);
  EXPECT_EQ(a.id.find_first_not_of("0123456789abcdef"), std::string::npos);
  EXPECT_NE(a.id, b.id);
  EXPECT_TRUE(a.versions.empty());
  GenerationSpec bad = fx::frankenstein_spec();
  bad.n_endings = 9;
  EXPECT_EQ(code_of([&] { new_project(bad); }), "SPEC-INVALID");
}

TEST(ProjectStore, TwoVersionsRoundTrip) {
  fx::TempDir dir;
  Project p = two_version_project();
  auto path = project_path(dir.path(), p.id);
  EXPECT_EQ(path.filename().string(), p.id + ".grim.json");
  save_project(p, path);
  Project back = load_project(path);
  EXPECT_EQ(back, p);
  ASSERT_EQ(back.versions.size(), 2u);
  EXPECT_EQ(back.version(2).provenance.kind, Provenance::Kind::kEdited);
  EXPECT_EQ(back.latest().version, 2);
  EXPECT_EQ(back.version(1).payload, build_render_payload(fx::frankenstein()));
  EXPECT_EQ(back.version(1).bundle.raw_text, fx::slurp(fx::fixture("frankenstein_21st_century.txt")));

  auto j = nlohmann::json::parse(read_file(path));
  EXPECT_EQ(j.at("schema_version"), 1);
  EXPECT_EQ(j.at("versions").at(1).at("provenance").at("kind"), "edited");
}

TEST(ProjectStore, SavedBytesAreStable) {
  fx::TempDir dir;
  Project p = two_version_project();
  save_project(p, dir / "a.grim.json");
  save_project(load_project(dir / "a.grim.json"), dir / "b.grim.json");
  EXPECT_EQ(read_file(dir / "a.grim.json"), read_file(dir / "b.grim.json"));
}

TEST(ProjectStore, RejectsOtherSchemaVersions) {
  fx::TempDir dir;
  auto path = dir / "p.grim.json";
  save_project(two_version_project(), path);
  rewrite(path, [](nlohmann::json& j) { j["schema_version"] = 99; });
  EXPECT_EQ(code_of([&] { load_project(path); }), "SCHEMA-VERSION-UNSUPPORTED");
}

TEST(ProjectStore, RejectsUnknownFields) {
  fx::TempDir dir;
  auto path = dir / "p.grim.json";
  save_project(two_version_project(), path);
  rewrite(path, [](nlohmann::json& j) { j["versions"][0]["colour"] = "red"; });
  EXPECT_EQ(code_of([&] { load_project(path); }), "SCHEMA-VERSION-UNSUPPORTED");
}

TEST(ProjectStore, DetectsCorruption) {
  fx::TempDir dir;
  auto path = dir / "p.grim.json";
  save_project(two_version_project(), path);
  rewrite(path, [](nlohmann::json& j) { j["versions"][0]["bundle"]["raw_text"] = "tampered"; });
  EXPECT_EQ(code_of([&] { load_project(path); }), "CORRUPT");

  save_project(two_version_project(), path);
  rewrite(path, [](nlohmann::json& j) { j["versions"][1]["version"] = 5; });
  EXPECT_EQ(code_of([&] { load_project(path); }), "CORRUPT");

  write_file_atomic(path, "{\"schema_version\": 1, ");
  EXPECT_EQ(code_of([&] { load_project(path); }), "CORRUPT");

  EXPECT_EQ(code_of([&] { load_project(dir / "absent.grim.json"); }), "IO");
}

TEST(ProjectStore, ExportWritesCanonicalPayload) {
  fx::TempDir dir;
  Project p = two_version_project();
  export_render_payload(p, 2, dir / "v2.json");
  auto parsed = parse_render_payload(read_file(dir / "v2.json"));
  ASSERT_TRUE(parsed.ok());
  EXPECT_EQ(*parsed.payload, p.version(2).payload);
  EXPECT_EQ(parsed.payload->nodes.size(), 26u);
  EXPECT_EQ(code_of([&] { export_render_payload(p, 3, dir / "v3.json"); }), "VERSION-UNKNOWN");
  EXPECT_EQ(code_of([&] { p.version(0); }), "VERSION-UNKNOWN");
}

TEST(ProjectStore, ModernRedRidingHoodProject) {
  fx::TempDir dir;
  Project p = new_project(fx::lrrh_modern_spec());
  p.append_version(fx::lrrh_modern(), {}, {});
  save_project(p, project_path(dir.path(), p.id));
  Project back = load_project(project_path(dir.path(), p.id));
  EXPECT_EQ(back.latest().bundle.beats.size(), 35u);
  EXPECT_EQ(validate(back.latest().bundle).stats.unique_beats, 35);
  EXPECT_EQ(back.latest().payload.nodes.size(), 35u + 2 + 4);
}

TEST(ProjectStore, ConcurrentSavesNeverTear) {
  fx::TempDir dir;
  auto path = dir / "p.grim.json";
  Project small = new_project(fx::frankenstein_spec());
  small.append_version(fx::frankenstein(), {}, {});
  Project big = two_version_project();
  auto writer = [&](const Project& p) {
    for (int i = 0; i < 25; ++i) save_project(p, path);
  };
  std::thread a(writer, std::cref(small)), b(writer, std::cref(big));
  for (int i = 0; i < 25; ++i) {
    if (!std::filesystem::exists(path)) continue;
    Project seen = load_project(path);
    EXPECT_TRUE(seen == small || seen == big);
  }
  a.join();
  b.join();
  Project last = load_project(path);
  EXPECT_TRUE(last == small || last == big);
}

TEST(EditSetWire, ParsesDesignerJson) {
  EditSet e = parse_edit_set(nlohmann::json::parse(fx::slurp(fx::fixture("frankenstein_edit.json"))));
  ASSERT_EQ(e.nodes_added.size(), 1u);
  EXPECT_EQ(e.nodes_added[0].id, 18);
  EXPECT_EQ(e.edges_added, (std::set<BeatPair>{{2, 18}}));
  EXPECT_EQ(code_of([] { parse_edit_set(nlohmann::json{{"nodes_added", 3}}); }), "EDIT-INVALID");
  EXPECT_EQ(code_of([] { parse_edit_set(nlohmann::json{{"surprise", nlohmann::json::array()}}); }), "EDIT-INVALID");
  EXPECT_TRUE(parse_edit_set(nlohmann::json::object()).empty());
}

TEST(ProjectStoreProperty, RandomProjectsRoundTrip) {
  std::mt19937 rng(31337);
  fx::TempDir dir;
  for (int i = 0; i < gen::kPropertyCases; ++i) {
    StoryBundle first = gen::random_bundle(rng);
    first.raw_text = serialize_story_bundle(first);
    Project p = new_project(first.spec);
    p.append_version(first, {}, {});
    if (gen::uniform(rng, 0, 1)) {
      StoryBundle second = gen::random_bundle(rng);
      second.spec = first.spec;
      EditSet e;
      e.nodes_added.push_back({gen::uniform(rng, 1, 50), gen::sentence(rng)});
      e.nodes_deleted = {gen::uniform(rng, 1, 9)};
      e.edges_added = {{gen::uniform(rng, 1, 9), gen::uniform(rng, 1, 9)}};
      p.append_version(second, {Provenance::Kind::kEdited, e}, {});
    }
    auto path = dir / ("case-" + std::to_string(i % 7) + ".grim.json");
    save_project(p, path);
    ASSERT_EQ(load_project(path), p) << i;
  }
}
