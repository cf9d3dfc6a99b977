#include <gtest/gtest.h>

#include "grim/error.hpp"
#include "grim/model.hpp"
#include "grim/text.hpp"
#include "test_support.hpp"

using namespace grim;

TEST(Text, TrimAndCase) {
  EXPECT_EQ(text::trim("  a b \t"), "a b");
  EXPECT_EQ(text::trim(""), "");
  EXPECT_TRUE(text::iequals("Beats", "BEATS"));
  EXPECT_TRUE(text::istarts_with("Storyline 3", "story"));
  EXPECT_FALSE(text::istarts_with("St", "story"));
}

TEST(Text, SplitLinesDropsCarriageReturns) {
  auto lines = text::split_lines("a\r\nb\n\nc");
  ASSERT_EQ(lines.size(), 4u);
  EXPECT_EQ(lines[0], "a");
  EXPECT_EQ(lines[2], "");
  EXPECT_EQ(lines[3], "c");
}

TEST(Text, ParsePositiveIntIsStrict) {
  EXPECT_EQ(text::parse_positive_int("17"), 17);
  EXPECT_FALSE(text::parse_positive_int("0"));
  EXPECT_FALSE(text::parse_positive_int("-3"));
  EXPECT_FALSE(text::parse_positive_int("7x"));
  EXPECT_FALSE(text::parse_positive_int(""));
  EXPECT_FALSE(text::parse_positive_int("+4"));
}

TEST(Text, NormalizeDescription) {
  EXPECT_EQ(text::normalize_description("  Eve   escapes.. "), "Eve escapes");
  EXPECT_EQ(text::normalize_description("Eve escapes"), text::normalize_description("Eve  escapes."));
  EXPECT_NE(text::normalize_description("eve escapes"), text::normalize_description("Eve escapes"));
}

TEST(Text, Sha256KnownVector) {
  EXPECT_EQ(text::sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(text::sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(NodeRef, ParsesSpellings) {
  EXPECT_EQ(NodeRef::parse("Beat_7"), NodeRef::beat(7));
  EXPECT_EQ(NodeRef::parse("Beat 7"), NodeRef::beat(7));
  EXPECT_EQ(NodeRef::parse("7"), NodeRef::beat(7));
  EXPECT_EQ(NodeRef::parse("START_1"), NodeRef::start(1));
  EXPECT_EQ(NodeRef::parse("Start 2"), NodeRef::start(2));
  EXPECT_EQ(NodeRef::parse("end-3"), NodeRef::end(3));
  EXPECT_FALSE(NodeRef::parse("Beat"));
  EXPECT_FALSE(NodeRef::parse("Dragon_3"));
}

TEST(NodeRef, CanonicalOrderPutsDummiesLast) {
  EXPECT_LT(NodeRef::beat(100), NodeRef::start(1));
  EXPECT_LT(NodeRef::start(9), NodeRef::end(1));
  EXPECT_EQ(NodeRef::end(4).label(), "END_4");
  EXPECT_EQ(NodeRef::beat(12).label(), "Beat_12");
}

TEST(Model, GenerationSpecGuards) {
  EXPECT_NO_THROW(check_generation_spec({"s", "t", 1, 2, 4}));
  EXPECT_THROW(check_generation_spec({"s", "t", 0, 2, 4}), Error);
  EXPECT_THROW(check_generation_spec({"s", "t", 5, 2, 4}), Error);
  try {
    check_generation_spec({"s", "t", 1, 9, 4});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "SPEC-INVALID");
  }
}

TEST(Model, MergeTransitionsOnFrankenstein) {
  StoryBundle b = fx::frankenstein();
  NarrativeGraph g = merge_transitions(b);
  EXPECT_EQ(g.start_nodes, (std::set<int>{1}));
  EXPECT_EQ(g.end_nodes, (std::set<int>{1, 2}));
  EXPECT_EQ(g.beat_nodes.size(), 17u);
  EXPECT_TRUE(g.edges.contains({NodeRef::start(1), NodeRef::beat(1)}));
  EXPECT_TRUE(g.edges.contains({NodeRef::beat(7), NodeRef::end(1)}));
  EXPECT_EQ(g.nodes().size(), 20u);
}

TEST(Model, MergeTransitionsRejectsDanglingBeat) {
  StoryBundle b = fx::frankenstein();
  b.beats.erase(5);
  try {
    merge_transitions(b);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "DANGLING-BEAT-REF");
  }
}

TEST(Model, DummyPointersFollowFirstStoryline) {
  StoryBundle b;
  b.storylines = {{1, 1, {4, 5}, 2}, {2, 1, {6, 5}, 2}, {3, 2, {7}, 1}};
  derive_dummy_pointers(b);
  EXPECT_EQ(b.starts, (std::map<int, BeatId>{{1, 4}, {2, 7}}));
  EXPECT_EQ(b.ends, (std::map<int, BeatId>{{1, 7}, {2, 5}}));
}
