#include <gtest/gtest.h>

#include <cstdlib>
#include <fstream>

#include "generators.hpp"
#include "grim/graph_builder.hpp"
#include "oracles.hpp"
#include "test_support.hpp"

using namespace grim;

namespace {

std::string golden(const std::string& name, const std::string& actual) {
  auto path = fx::data_dir() / "golden" / name;
  if (std::getenv("GRIM_UPDATE_GOLDEN")) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream(path, std::ios::binary) << actual;
  }
  return fx::slurp(path);
}

std::vector<std::string> keys_of(const RenderPayload& p) {
  std::vector<std::string> out;
  for (const auto& [k, _] : p.nodes) out.push_back(k);
  return out;
}

}  // namespace

TEST(GraphBuilder, MinecraftNodesAndEdges) {
  StoryBundle b = fx::lrrh_minecraft();
  RenderPayload p = build_render_payload(b);
  EXPECT_EQ(keys_of(p), (std::vector<std::string>{"Beat_1", "Beat_2", "Beat_3", "Beat_4", "Beat_5", "Beat_6",
                                                  "Beat_7", "Beat_8", "START_1", "END_1"}));
  EXPECT_EQ(p.edge_set(), oracle::edge_union(b));
  EXPECT_EQ(p.edge_set().size(), 19u);

  const RenderNode* n6 = p.find_node("Beat_6");
  ASSERT_NE(n6, nullptr);
  EXPECT_EQ(n6->nr_beat, 6);
  EXPECT_EQ(n6->pathway, "3");
  EXPECT_EQ(n6->game_state, "None");
  const RenderNode* start = p.find_node("START_1");
  ASSERT_NE(start, nullptr);
  EXPECT_FALSE(start->nr_beat);
  EXPECT_FALSE(start->beat);

  const NodeEdges* e3 = p.find_edges("Beat_3");
  ASSERT_NE(e3, nullptr);
  EXPECT_EQ(e3->incoming, (std::vector<EdgePair>{{"Beat_1", "Beat_3"}, {"Beat_2", "Beat_3"}, {"Beat_4", "Beat_3"}}));
}

TEST(GraphBuilder, CanonicalFormIsGoldenAndRoundTrips) {
  RenderPayload p = build_render_payload(fx::lrrh_minecraft());
  std::string text = serialize_render_payload(p);
  EXPECT_EQ(text, golden("lrrh_minecraft_payload.json", text));
  PayloadParseResult back = parse_render_payload(text);
  ASSERT_TRUE(back.ok());
  EXPECT_TRUE(back.diagnostics.empty());
  EXPECT_EQ(*back.payload, p);
}

TEST(GraphBuilder, HandWrittenPayloadMissesSixEdges) {
  StoryBundle b = fx::lrrh_minecraft();
  PayloadParseResult parsed = parse_render_payload(fx::slurp(fx::fixture("lrrh_minecraft_payload.txt")));
  ASSERT_TRUE(parsed.ok()) << parsed.diagnostics.front().message;

  auto truth = oracle::edge_union(b);
  std::set<EdgePair> want_missing;
  for (const auto& e : truth)
    if (!parsed.payload->edge_set().contains(e)) want_missing.insert(e);
  EXPECT_EQ(want_missing, (std::set<EdgePair>{{"Beat_2", "Beat_5"},
                                              {"Beat_3", "Beat_2"},
                                              {"Beat_4", "Beat_3"},
                                              {"Beat_4", "Beat_7"},
                                              {"Beat_5", "Beat_2"},
                                              {"Beat_5", "Beat_8"}}));

  Reconciliation rec = reconcile(*parsed.payload, b);
  EXPECT_EQ(rec.report.missing_edges, want_missing);
  EXPECT_TRUE(rec.report.extra_edges.empty());
  EXPECT_TRUE(rec.report.missing_nodes.empty());
  EXPECT_TRUE(rec.report.extra_nodes.empty());
  EXPECT_TRUE(rec.report.description_mismatches.empty());
  EXPECT_EQ(rec.report.size(), 6u);
  EXPECT_EQ(rec.repaired, build_render_payload(b));
}

TEST(GraphBuilder, ReconcileKeepsCandidateTextAndReportsExtras) {
  StoryBundle b = fx::lrrh_minecraft();
  RenderPayload candidate = build_render_payload(b);
  candidate.nodes[0].second.beat = "Red sets off.";
  candidate.nodes[0].second.game_state = "Overworld";
  candidate.nodes.emplace_back("Beat_99", RenderNode{"None", 99, "Ghost.", "1"});
  Reconciliation rec = reconcile(candidate, b);
  EXPECT_EQ(rec.report.extra_nodes, (std::set<std::string>{"Beat_99"}));
  ASSERT_EQ(rec.report.description_mismatches.size(), 1u);
  EXPECT_EQ(rec.report.description_mismatches[0].node_id, "Beat_1");
  EXPECT_EQ(rec.repaired.find_node("Beat_1")->beat, "Red sets off.");
  EXPECT_EQ(rec.repaired.find_node("Beat_1")->game_state, "Overworld");
  EXPECT_EQ(rec.repaired.find_node("Beat_99"), nullptr);
  EXPECT_EQ(rec.repaired.edge_set(), oracle::edge_union(b));
}

TEST(GraphBuilder, ParserRejectsBrokenPayloads) {
  auto code_of = [](const std::string& text) {
    PayloadParseResult r = parse_render_payload(text);
    EXPECT_FALSE(r.ok());
    return r.diagnostics.empty() ? std::string() : r.diagnostics.front().code;
  };
  EXPECT_EQ(code_of("nothing here"), "PAYLOAD-MALFORMED");
  EXPECT_EQ(code_of("NODES: {\"Beat_1\": [[\"None\", 1, \"a\", \"1\"]]}\nEDGES: {"), "PAYLOAD-MALFORMED");
  EXPECT_EQ(code_of("NODES: {\"Beat_1\": [[\"None\", 1, \"a\", \"1\"]], \"Beat_2\": [[\"None\", 2, \"b\", \"1\"]]}\n"
                    "EDGES: {\"Beat_1\": {\"None\": [[], [[\"Beat_1\", \"Beat_2\"]]]},"
                    " \"Beat_2\": {\"None\": [[], []]}}"),
            "PAYLOAD-ASYMMETRIC-EDGE");
  EXPECT_EQ(code_of("NODES: {\"Beat_1\": [[\"None\", 1, \"a\", \"1\"]]}\nEDGES: {}"), "PAYLOAD-KEYSET-MISMATCH");
}

TEST(GraphBuilder, DummyKeysFirstIsOnlyAWarning) {
  std::string text =
      "NODES: {\"START_1\": [[\"None\", null, null, null]], \"Beat_1\": [[\"None\", 1, \"a\", \"1\"]],"
      " \"END_1\": [[\"None\", null, null, null]]}\n"
      "EDGES: {\"START_1\": {\"None\": [[], [[\"START_1\", \"Beat_1\"]]]},"
      " \"Beat_1\": {\"None\": [[[\"START_1\", \"Beat_1\"]], [[\"Beat_1\", \"END_1\"]]]},"
      " \"END_1\": {\"None\": [[[\"Beat_1\", \"END_1\"]], []]}}";
  PayloadParseResult r = parse_render_payload(text);
  ASSERT_TRUE(r.ok());
  ASSERT_EQ(r.diagnostics.size(), 1u);
  EXPECT_EQ(r.diagnostics[0].code, "PAYLOAD-DUMMY-ORDER");
  EXPECT_EQ(keys_of(*r.payload), (std::vector<std::string>{"Beat_1", "START_1", "END_1"}));
}

TEST(GraphBuilderProperty, NodeCountAndEdgeUnion) {
  std::mt19937 rng(1234);
  for (int i = 0; i < gen::kPropertyCases; ++i) {
    StoryBundle b = gen::random_bundle(rng);
    RenderPayload p = build_render_payload(b);
    ASSERT_EQ(p.nodes.size(), b.beats.size() + b.starts.size() + b.ends.size()) << i;
    auto listed = keys_of(p);
    std::set<std::string> keys(listed.begin(), listed.end());
    ASSERT_EQ(keys, oracle::node_labels(b)) << i;
    ASSERT_EQ(p.edge_set(), oracle::edge_union(b)) << i;
    ASSERT_EQ(p.edges.size(), p.nodes.size());
  }
}

TEST(GraphBuilderProperty, EdgesAreListedAtBothEnds) {
  std::mt19937 rng(5678);
  for (int i = 0; i < gen::kPropertyCases; ++i) {
    RenderPayload p = build_render_payload(gen::random_bundle(rng));
    for (const auto& [id, e] : p.edges) {
      for (const auto& pair : e.outgoing) {
        ASSERT_EQ(pair.first, id);
        const NodeEdges* other = p.find_edges(pair.second);
        ASSERT_NE(other, nullptr);
        ASSERT_NE(std::find(other->incoming.begin(), other->incoming.end(), pair), other->incoming.end());
      }
      for (const auto& pair : e.incoming) {
        ASSERT_EQ(pair.second, id);
        const NodeEdges* other = p.find_edges(pair.first);
        ASSERT_NE(other, nullptr);
        ASSERT_NE(std::find(other->outgoing.begin(), other->outgoing.end(), pair), other->outgoing.end());
      }
    }
  }
}

TEST(GraphBuilderProperty, SerializeParseRoundTrip) {
  std::mt19937 rng(91);
  for (int i = 0; i < gen::kPropertyCases; ++i) {
    RenderPayload p = build_render_payload(gen::random_bundle(rng));
    PayloadParseResult back = parse_render_payload(serialize_render_payload(p));
    ASSERT_TRUE(back.ok()) << i;
    ASSERT_EQ(*back.payload, p) << i;
  }
}

TEST(GraphBuilderProperty, ReconcileFindsDroppedEdges) {
  std::mt19937 rng(31);
  for (int i = 0; i < gen::kPropertyCases; ++i) {
    StoryBundle b = gen::random_bundle(rng);
    RenderPayload p = build_render_payload(b);
    std::set<EdgePair> dropped;
    for (auto& [id, e] : p.edges) {
      std::erase_if(e.outgoing, [&](const EdgePair& pair) {
        if (gen::uniform(rng, 0, 3)) return false;
        dropped.insert(pair);
        return true;
      });
    }
    for (auto& [id, e] : p.edges)
      std::erase_if(e.incoming, [&](const EdgePair& pair) { return dropped.contains(pair); });
    Reconciliation rec = reconcile(p, b);
    ASSERT_EQ(rec.report.missing_edges, dropped) << i;
    ASSERT_TRUE(rec.report.extra_edges.empty());
    ASSERT_EQ(rec.repaired, build_render_payload(b)) << i;
  }
}
