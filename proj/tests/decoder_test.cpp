#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

#include "cirparse/decoder.hpp"
#include "support.hpp"

namespace cirparse {
namespace {

using testing::brute_force_best;
using testing::random_tensor;

TEST(ChuLiuEdmonds, TrivialSizes) {
  EXPECT_TRUE(chu_liu_edmonds(Tensor(1, 1)).empty());
  EXPECT_TRUE(chu_liu_edmonds(Tensor(0, 0)).empty());
  EXPECT_EQ(chu_liu_edmonds(Tensor(2, 2, 3.0)), std::vector<int>{0});
  EXPECT_THROW(chu_liu_edmonds(Tensor(2, 3)), ShapeError);
}

TEST(ChuLiuEdmonds, TwoTokenChain) {
  // The three arborescences on two tokens: {0->1, 1->2}, {0->2, 2->1}, {0->1, 0->2}.
  Tensor g(3, 3, 0.0);
  g(0, 1) = 5.0;
  g(1, 2) = 4.0;
  g(0, 2) = 1.0;
  g(2, 1) = 1.0;
  EXPECT_EQ(chu_liu_edmonds(g, false), (std::vector<int>{0, 1}));
  EXPECT_EQ(chu_liu_edmonds(g, true), (std::vector<int>{0, 1}));
}

TEST(ChuLiuEdmonds, ResolvesCycle) {
  // Greedy picks 1<->2 as a cycle; the best tree breaks it at the cheaper arc.
  Tensor g(4, 4, -10.0);
  g(1, 2) = 10.0;
  g(2, 1) = 9.0;
  g(0, 1) = 5.0;
  g(0, 2) = 1.0;
  g(2, 3) = 3.0;
  EXPECT_EQ(chu_liu_edmonds(g), (std::vector<int>{0, 1, 2}));
}

TEST(ChuLiuEdmonds, SingleRootEnforced) {
  Tensor g(4, 4, 0.0);
  for (std::size_t d = 1; d < 4; ++d) g(0, d) = 10.0;
  const auto multi = chu_liu_edmonds(g, false);
  EXPECT_EQ(multi, (std::vector<int>{0, 0, 0}));
  const auto single = chu_liu_edmonds(g, true);
  EXPECT_TRUE(is_arborescence(single, true));
}

TEST(ChuLiuEdmonds, TiesGoToLowestHead) {
  const auto heads = chu_liu_edmonds(Tensor(5, 5, 1.0), false);
  EXPECT_EQ(heads, (std::vector<int>{0, 0, 0, 0}));
}

TEST(ChuLiuEdmonds, MatchesBruteForce) {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 300; ++trial) {
    const std::size_t tokens = 1 + static_cast<std::size_t>(trial % 6);
    const Tensor g = random_tensor(tokens + 1, tokens + 1, rng, 5.0);
    for (bool single : {true, false}) {
      const auto heads = chu_liu_edmonds(g, single);
      ASSERT_TRUE(is_arborescence(heads, single));
      EXPECT_EQ(tree_score(g, heads), brute_force_best(g, single)) << "trial " << trial;
    }
  }
}

TEST(ChuLiuEdmonds, ConstantShiftKeepsTree) {
  std::mt19937_64 rng(22);
  std::uniform_int_distribution<int> eighths(-40, 40);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 3 + static_cast<std::size_t>(trial % 8);
    Tensor g(n, n);
    for (double& x : g.values()) x = eighths(rng) / 8.0;  // exact under the shift
    Tensor shifted = g;
    for (double& x : shifted.values()) x += 5.0;
    EXPECT_EQ(chu_liu_edmonds(g), chu_liu_edmonds(shifted));
  }
}

TEST(ChuLiuEdmonds, ForbiddenArcsRespected) {
  Tensor g(3, 3, 1.0);
  g(0, 2) = -std::numeric_limits<double>::infinity();
  g(1, 2) = -std::numeric_limits<double>::infinity();
  EXPECT_THROW(chu_liu_edmonds(g, false), DataError);
}

TEST(IsArborescence, Structure) {
  EXPECT_TRUE(is_arborescence(std::vector<int>{0, 1, 1}));
  EXPECT_FALSE(is_arborescence(std::vector<int>{2, 1}));     // cycle, no root
  EXPECT_FALSE(is_arborescence(std::vector<int>{0, 3, 2}));  // cycle below root
  EXPECT_FALSE(is_arborescence(std::vector<int>{0, 2}));     // self head
  EXPECT_FALSE(is_arborescence(std::vector<int>{0, 5}));     // out of range
  EXPECT_TRUE(is_arborescence(std::vector<int>{0, 0}));
  EXPECT_FALSE(is_arborescence(std::vector<int>{0, 0}, true));
  EXPECT_TRUE(is_arborescence(std::vector<int>{}));
}

ParseTree tree(std::vector<int> heads, std::vector<int> labels) { return {std::move(heads), std::move(labels)}; }

TEST(Evaluate, Examples) {
  const std::vector<ParseTree> gold{tree({2, 0, 2, 3}, {1, 0, 2, 1})};
  EXPECT_EQ(evaluate(gold, gold).uas, 100.0);
  EXPECT_EQ(evaluate(gold, gold).las, 100.0);

  const std::vector<ParseTree> wrong_labels{tree({2, 0, 2, 3}, {0, 1, 0, 0})};
  EXPECT_EQ(evaluate(wrong_labels, gold).uas, 100.0);
  EXPECT_EQ(evaluate(wrong_labels, gold).las, 0.0);

  const std::vector<ParseTree> one_wrong{tree({2, 0, 2, 2}, {1, 0, 2, 1})};
  const AttachmentScores s = evaluate(one_wrong, gold);
  EXPECT_EQ(s.uas, 75.0);
  EXPECT_EQ(s.las, 75.0);
  EXPECT_EQ(s.tokens, 4u);
}

TEST(Evaluate, MismatchIsDataError) {
  const std::vector<ParseTree> a{tree({0}, {0})};
  const std::vector<ParseTree> b{tree({0, 1}, {0, 0})};
  EXPECT_THROW(evaluate(a, b), DataError);
  EXPECT_THROW(evaluate(a, std::vector<ParseTree>{}), DataError);
  EXPECT_EQ(evaluate(std::vector<ParseTree>{}, std::vector<ParseTree>{}).uas, 0.0);
}

TEST(Evaluate, LasNeverExceedsUas) {
  std::mt19937_64 rng(23);
  std::uniform_int_distribution<int> label(0, 2);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + static_cast<std::size_t>(trial % 7);
    std::vector<ParseTree> p, g;
    for (int s = 0; s < 3; ++s) {
      const Tensor a = random_tensor(n + 1, n + 1, rng), b = random_tensor(n + 1, n + 1, rng);
      ParseTree pt{chu_liu_edmonds(a), {}}, gt{chu_liu_edmonds(b), {}};
      for (std::size_t k = 0; k < n; ++k) {
        pt.labels.push_back(label(rng));
        gt.labels.push_back(label(rng));
      }
      p.push_back(pt);
      g.push_back(gt);
    }
    const AttachmentScores s = evaluate(p, g);
    EXPECT_LE(s.las, s.uas);
  }
}

TEST(AssignLabels, ArgmaxAndTies) {
  std::mt19937_64 rng(24);
  LabelClassifier single(Variant::Symmetric, 3, 1, rng, 0.1);
  SentenceViews v{random_tensor(3, 4, rng), random_tensor(3, 4, rng), random_tensor(3, 3, rng),
                  random_tensor(3, 3, rng)};
  EXPECT_EQ(assign_labels(std::vector<int>{0, 1}, v, single).labels, (std::vector<int>{0, 0}));

  LabelClassifier tied(Variant::Dense, 3, 4, rng, 0.1);
  for (Parameter* p : tied.parameters()) p->value().fill(0.0);
  EXPECT_EQ(assign_labels(std::vector<int>{0, 1}, v, tied).labels, (std::vector<int>{0, 0}));

  // scalar biases decide when everything else is zero
  tied.parameters()[2]->value() = Tensor::row({0.0, 2.0, 2.0, 1.0});
  const ParseTree t = assign_labels(std::vector<int>{0, 1}, v, tied);
  EXPECT_EQ(t.labels, (std::vector<int>{1, 1}));
  EXPECT_EQ(t.heads, (std::vector<int>{0, 1}));
}

TEST(AssignLabels, UsesPredictedHeadView) {
  std::mt19937_64 rng(25);
  LabelClassifier lab(Variant::Symmetric, 2, 2, rng, 0.1);
  for (Parameter* p : lab.parameters()) p->value().fill(0.0);
  // label 0 likes head-view coordinate 0, label 1 coordinate 1
  lab.parameters()[1]->value() = Tensor::matrix({{1, 0, 0, 0}, {0, 1, 0, 0}});
  SentenceViews v{Tensor(3, 1), Tensor(3, 1), Tensor::matrix({{1, 0}, {0, 1}, {1, 0}}), Tensor(3, 2)};
  EXPECT_EQ(assign_labels(std::vector<int>{0, 1}, v, lab).labels, (std::vector<int>{0, 1}));
  EXPECT_EQ(assign_labels(std::vector<int>{2, 0}, v, lab).labels, (std::vector<int>{0, 0}));
}

}  // namespace
}  // namespace cirparse
