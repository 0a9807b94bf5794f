#include <gtest/gtest.h>

#include <map>
#include <random>

#include "cirparse/encoder.hpp"
#include "support.hpp"

namespace cirparse {
namespace {

EncoderConfig small_config() {
  EncoderConfig c;
  c.word_vocab = 20;
  c.pos_vocab = 6;
  c.word_dim = 5;
  c.pos_dim = 3;
  c.hidden_dim = 4;
  c.arc_dim = 6;
  c.label_dim = 3;
  return c;
}

TEST(Encoder, EmptySentenceGivesRootOnly) {
  std::mt19937_64 rng(1);
  const Encoder enc(small_config(), rng);
  const SentenceViews v = enc.encode_values({}, {});
  EXPECT_EQ(v.positions(), 1u);
  EXPECT_EQ(v.arc_head.shape(), (Shape{1, 6}));
}

TEST(Encoder, OutputDimensionsFollowConfig) {
  EncoderConfig c = small_config();
  c.arc_dim = 400;
  c.label_dim = 100;
  std::mt19937_64 rng(2);
  const Encoder enc(c, rng);
  const std::vector<int> words{3, 4, 5}, tags{3, 4, 3};
  const SentenceViews v = enc.encode_values(words, tags);
  EXPECT_EQ(v.positions(), 4u);
  const TokenViews t = v.token(2);
  EXPECT_EQ(t.arc_head.size(), 400u);
  EXPECT_EQ(t.arc_dep.size(), 400u);
  EXPECT_EQ(t.label_head.size(), 100u);
  EXPECT_EQ(t.label_dep.size(), 100u);
}

TEST(Encoder, ShapesForEveryLength) {
  std::mt19937_64 rng(3);
  Encoder enc(small_config(), rng);
  for (std::size_t len = 0; len <= 12; ++len) {
    std::vector<int> words(len, 7), tags(len, 4);
    const SentenceViews v = enc.encode_values(words, tags);
    EXPECT_EQ(v.arc_dep.shape(), (Shape{len + 1, 6}));
    EXPECT_EQ(v.label_dep.shape(), (Shape{len + 1, 3}));
    Tape t;
    std::mt19937_64 drop(1);
    const ViewNodes n = enc.encode(t, words, tags, Mode::Train, &drop);
    EXPECT_EQ(t.shape(n.label_head), (Shape{len + 1, 3}));
  }
}

TEST(Encoder, EvalIsDeterministicAndMatchesTapePath) {
  std::mt19937_64 rng(4);
  Encoder enc(small_config(), rng);
  const std::vector<int> words{3, 9, 1, 17}, tags{3, 5, 4, 3};
  const SentenceViews a = enc.encode_values(words, tags);
  const SentenceViews b = enc.encode_values(words, tags);
  EXPECT_EQ(a.arc_head, b.arc_head);
  EXPECT_EQ(a.label_dep, b.label_dep);
  Tape t;
  const ViewNodes n = enc.encode(t, words, tags, Mode::Eval, nullptr);
  EXPECT_EQ(t.value(n.arc_head), a.arc_head);
  EXPECT_EQ(t.value(n.label_dep), a.label_dep);
}

TEST(Encoder, SameSeedSameParameters) {
  std::mt19937_64 r1(5), r2(5);
  Encoder a(small_config(), r1), b(small_config(), r2);
  const auto pa = a.parameters(), pb = b.parameters();
  ASSERT_EQ(pa.size(), pb.size());
  for (std::size_t i = 0; i < pa.size(); ++i) EXPECT_EQ(pa[i]->value(), pb[i]->value());
}

TEST(Encoder, OutOfRangeIdIsDataError) {
  std::mt19937_64 rng(6);
  const Encoder enc(small_config(), rng);
  try {
    enc.encode_values(std::vector<int>{3, 20}, std::vector<int>{3, 3}, 17);
    FAIL() << "expected DataError";
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("sentence 17"), std::string::npos);
  }
  EXPECT_THROW(enc.encode_values(std::vector<int>{3}, std::vector<int>{-1}), DataError);
  EXPECT_THROW(enc.encode_values(std::vector<int>{3, 4}, std::vector<int>{3}), DataError);
}

TEST(Encoder, DropoutOnlyInTraining) {
  std::mt19937_64 rng(7);
  Encoder enc(small_config(), rng);
  const std::vector<int> words{3, 4, 5, 6, 7}, tags{3, 4, 5, 3, 4};
  const SentenceViews eval = enc.encode_values(words, tags);
  Tape t;
  std::mt19937_64 drop(3);
  const ViewNodes n = enc.encode(t, words, tags, Mode::Train, &drop);
  EXPECT_NE(t.value(n.arc_head), eval.arc_head);
}

TEST(Encoder, GradientReachesEverySubmodule) {
  std::mt19937_64 rng(8);
  Encoder enc(small_config(), rng);
  const std::vector<int> words{3, 4, 5, 6}, tags{3, 4, 5, 3};
  for (Parameter* p : enc.parameters()) p->zero_grad();
  Tape t;
  std::mt19937_64 drop(2);
  const ViewNodes n = enc.encode(t, words, tags, Mode::Train, &drop);
  const NodeId loss = ad::add(t, ad::add(t, ad::sum(t, n.arc_head), ad::sum(t, n.arc_dep)),
                              ad::add(t, ad::sum(t, n.label_head), ad::sum(t, n.label_dep)));
  t.backward(loss);
  // Submodule: "encoder.<part>", the first two components of the name.
  std::map<std::string, bool> touched;
  for (const Parameter* p : enc.parameters()) {
    const std::string& name = p->name();
    const std::string module = name.substr(0, name.find('.', name.find('.') + 1));
    bool nonzero = false;
    for (double g : p->grad().values()) nonzero = nonzero || g != 0.0;
    touched[module] = touched[module] || nonzero;
  }
  EXPECT_EQ(touched.size(), 8u);
  for (const auto& [module, ok] : touched) EXPECT_TRUE(ok) << module;
}

TEST(Encoder, GradientsMatchFiniteDifferences) {
  EncoderConfig c = small_config();
  c.word_vocab = 8;
  std::mt19937_64 rng(9);
  Encoder enc(c, rng);
  const std::vector<int> words{3, 4, 5}, tags{3, 4, 5};
  std::mt19937_64 wr(4);
  const Tensor wa = testing::random_tensor(4, 6, wr), wl = testing::random_tensor(4, 3, wr);
  const auto r = testing::check_gradients(enc.parameters(), [&](Tape& t) {
    const ViewNodes n = enc.encode(t, words, tags, Mode::Eval, nullptr);
    return ad::add(t, ad::sum(t, ad::mul(t, n.arc_dep, t.constant(wa))),
                   ad::sum(t, ad::mul(t, n.label_head, t.constant(wl))));
  });
  EXPECT_LT(r.max_relative_error, 1e-4) << r.worst;
}

}  // namespace
}  // namespace cirparse
