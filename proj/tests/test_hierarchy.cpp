#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "hli/error.hpp"
#include "hli/hierarchy.hpp"

namespace hli {
namespace {

constexpr const char* kSmall =
    "[layer verticals]\n"
    "A\n"
    "B\n"
    "[layer entities]\n"
    "a1\n"
    "a2\n"
    "a3\n"
    "[edges]\n"
    "a1: A\n"
    "a2: A,B\n"
    "a3: B\n";

LabelHierarchy parse(const std::string& text) {
  std::istringstream in(text);
  return parse_vocabulary(in, "test");
}

LabelHierarchy generated(std::size_t verticals, std::size_t entities, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<ConceptLayer> layers(2);
  layers[0].name = "verticals";
  layers[1].name = "entities";
  for (std::size_t v = 0; v < verticals; ++v) layers[0].labels.push_back("v" + std::to_string(v));
  for (std::size_t e = 0; e < entities; ++e) layers[1].labels.push_back("e" + std::to_string(e));
  std::vector<LabelSet> parents(entities);
  std::uniform_int_distribution<LabelIndex> pick(0, static_cast<LabelIndex>(verticals - 1));
  std::uniform_int_distribution<int> count(1, 3);
  for (auto& ps : parents) {
    const int k = count(rng);
    while (static_cast<int>(ps.size()) < k) {
      const auto p = pick(rng);
      if (std::find(ps.begin(), ps.end(), p) == ps.end()) ps.push_back(p);
    }
  }
  return LabelHierarchy(std::move(layers), std::move(parents));
}

TEST(HierarchyTest, ParsesSmallVocabulary) {
  const auto h = parse(kSmall);
  EXPECT_EQ(h.layer_count(), 2u);
  EXPECT_EQ(h.layer_sizes(), (std::vector<std::size_t>{2, 3}));
  EXPECT_EQ(h.parents_of(1), (LabelSet{0, 1}));
  EXPECT_EQ(h.parents_of(2), (LabelSet{1}));
  EXPECT_THROW(h.parents_of(99), std::out_of_range);
}

TEST(HierarchyTest, InducesVerticalLabels) {
  const auto h = parse(kSmall);
  EXPECT_EQ(h.induce_vertical_labels(LabelSet{0, 2}), (LabelSet{0, 1}));
  EXPECT_TRUE(h.induce_vertical_labels(LabelSet{}).empty());
  EXPECT_THROW(h.induce_vertical_labels(LabelSet{7}), std::out_of_range);
}

TEST(HierarchyTest, RejectsDuplicateParent) {
  const std::string text = "[layer v]\nA\nB\n[layer e]\na1\n[edges]\na1: A,A\n";
  try {
    parse(text);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("duplicate parent"), std::string::npos) << e.what();
    EXPECT_NE(std::string(e.what()).find("test:7"), std::string::npos) << e.what();
  }
}

TEST(HierarchyTest, RejectsInvalidFiles) {
  EXPECT_THROW(parse("[layer v]\nA\nA\n"), DataError);                                    // duplicate label
  EXPECT_THROW(parse("[layer v]\nA\n[layer e]\na\n[edges]\na: Z\n"), DataError);          // dangling
  EXPECT_THROW(parse("[layer v]\nA\n[layer e]\na\nb\n[edges]\na: A\n"), DataError);       // b has 0 parents
  EXPECT_THROW(parse("[layer v]\nA\nB\nC\nD\n[layer e]\na\n[edges]\na: A,B,C,D\n"), DataError);  // >3
  EXPECT_THROW(parse("A\n"), DataError);
  EXPECT_THROW(parse("[layer v]\nA\n[bogus]\n"), DataError);
  EXPECT_THROW(parse(""), DataError);
}

TEST(HierarchyTest, SingleLayerHasNoEdges) {
  const auto h = parse("[layer tags]\nx\ny\n");
  EXPECT_EQ(h.layer_count(), 1u);
  EXPECT_FALSE(h.has_edges());
  EXPECT_THROW(parse("[layer tags]\nx\n[edges]\nx: x\n"), DataError);
}

TEST(HierarchyTest, LargeVocabularyRoundTrips) {
  const auto h = generated(25, 4716, 7);
  const auto back = parse(vocabulary_text(h));
  EXPECT_EQ(back.layer_sizes(), (std::vector<std::size_t>{25, 4716}));
  EXPECT_EQ(back, h);
}

TEST(HierarchyTest, SaveAndReloadIsIdentity) {
  const auto h = parse(kSmall);
  const auto path = std::filesystem::temp_directory_path() / "hli_vocab_roundtrip.txt";
  save_vocabulary(path, h);
  EXPECT_EQ(load_vocabulary(path), h);
  std::filesystem::remove(path);
}

TEST(HierarchyTest, InductionMatchesBruteForceUnion) {
  const auto h = generated(40, 500, 11);
  std::mt19937_64 rng(3);
  std::uniform_int_distribution<LabelIndex> pick(0, 499);
  for (int trial = 0; trial < 20; ++trial) {
    LabelSet s;
    for (int i = 0; i < 50; ++i) s.push_back(pick(rng));
    std::vector<bool> expected(40, false);
    for (LabelIndex e : s)
      for (LabelIndex p : h.parents_of(e)) expected[p] = true;
    LabelSet want;
    for (LabelIndex v = 0; v < 40; ++v)
      if (expected[v]) want.push_back(v);
    EXPECT_EQ(h.induce_vertical_labels(s), want);
  }
}

TEST(HierarchyTest, InductionDistributesOverUnion) {
  const auto h = generated(30, 300, 5);
  std::mt19937_64 rng(9);
  std::uniform_int_distribution<LabelIndex> pick(0, 299);
  for (int trial = 0; trial < 50; ++trial) {
    LabelSet a, b;
    for (int i = 0; i < 10; ++i) a.push_back(pick(rng));
    for (int i = 0; i < 10; ++i) b.push_back(pick(rng));
    LabelSet ab = a;
    ab.insert(ab.end(), b.begin(), b.end());
    LabelSet lhs = h.induce_vertical_labels(ab);
    LabelSet ia = h.induce_vertical_labels(a), ib = h.induce_vertical_labels(b);
    LabelSet rhs;
    std::set_union(ia.begin(), ia.end(), ib.begin(), ib.end(), std::back_inserter(rhs));
    EXPECT_EQ(lhs, rhs);
  }
}

TEST(HierarchyTest, VerticalScoresTakeMaxOverChildren) {
  const auto h = parse(kSmall);
  const Vector scores{0.2, 0.9, 0.4};
  EXPECT_EQ(h.induce_vertical_scores(scores), (Vector{0.9, 0.9}));
  const Vector other{0.7, 0.1, 0.4};
  EXPECT_EQ(h.induce_vertical_scores(other), (Vector{0.7, 0.4}));
}

}  // namespace
}  // namespace hli
