#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cirparse/autodiff.hpp"
#include "support.hpp"

namespace cirparse {
namespace {

using testing::check_gradients;
using testing::random_tensor;

constexpr double kGradTol = 1e-4;

TEST(Tape, AddRecordsSum) {
  Tape t;
  const NodeId out = ad::add(t, t.constant(Tensor::row({1, 2})), t.constant(Tensor::row({3, 4})));
  EXPECT_EQ(t.value(out), Tensor::row({4, 6}));
  EXPECT_EQ(t.op(out), "add");
}

TEST(Tape, MatvecWithIdentity) {
  Tape t;
  const NodeId v = t.constant(Tensor(2, 1, std::vector<double>{5, 7}));
  const NodeId out = ad::matmul(t, t.constant(Tensor::identity(2)), v);
  EXPECT_EQ(t.value(out), Tensor(2, 1, std::vector<double>{5, 7}));
}

TEST(Tape, Dot) {
  Tape t;
  const NodeId out = ad::dot(t, t.constant(Tensor::row({1, 2, 3})), t.constant(Tensor::row({4, 5, 6})));
  EXPECT_EQ(t.value(out)[0], 32.0);
}

TEST(Tape, ShapeErrorNamesOp) {
  Tape t;
  try {
    ad::add(t, t.constant(Tensor::row({1, 2})), t.constant(Tensor::row({1, 2, 3})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    EXPECT_EQ(e.op(), "add");
  }
  EXPECT_THROW(ad::matmul(t, t.constant(Tensor(2, 3)), t.constant(Tensor(2, 3))), ShapeError);
}

TEST(Tape, InputsPrecedeOutputs) {
  Tape t;
  const NodeId a = t.constant(Tensor::row({1}));
  const NodeId b = ad::scale(t, a, 2.0);
  const NodeId c = ad::add(t, a, b);
  for (std::size_t i = 0; i < t.size(); ++i) {
    for (NodeId in : t.inputs(NodeId{i})) EXPECT_LT(in.index, i);
  }
  EXPECT_EQ(c.index, 2u);
}

TEST(Backward, SquareGradient) {
  Parameter p("p", Tensor::row({3}));
  Tape t;
  const NodeId x = t.parameter(p);
  t.backward(ad::dot(t, x, x));
  EXPECT_EQ(p.grad()[0], 6.0);
}

TEST(Backward, SumGradient) {
  Parameter p("p", Tensor::row({1, 1, 1}));
  Tape t;
  const NodeId loss = ad::sum(t, t.parameter(p));
  t.backward(loss);
  EXPECT_EQ(p.grad(), Tensor::row({1, 1, 1}));
  EXPECT_EQ(t.grad(loss)[0], 1.0);
}

TEST(Backward, NonScalarLossRejected) {
  Parameter p("p", Tensor::row({1, 2}));
  Tape t;
  EXPECT_THROW(t.backward(t.parameter(p)), ShapeError);
}

TEST(Backward, GradientsAccumulateAcrossTapes) {
  Parameter p("p", Tensor::row({2}));
  for (int i = 0; i < 2; ++i) {
    Tape t;
    t.backward(ad::sum(t, t.parameter(p)));
  }
  EXPECT_EQ(p.grad()[0], 2.0);
}

// Reduces any node to a scalar with fixed random weights so every output
// entry contributes a distinct amount to the loss.
NodeId weighted_sum(Tape& t, NodeId x, std::uint64_t seed = 99) {
  std::mt19937_64 rng(seed);
  const Shape s = t.shape(x);
  return ad::sum(t, ad::mul(t, x, t.constant(random_tensor(s.rows, s.cols, rng))));
}

class PrimitiveGradients : public ::testing::Test {
 protected:
  std::mt19937_64 rng{7};
  Parameter a{"a", random_tensor(3, 4, rng)};
  Parameter b{"b", random_tensor(3, 4, rng)};
  Parameter m{"m", random_tensor(4, 2, rng)};
  Parameter row{"row", random_tensor(1, 4, rng)};
  Parameter col{"col", random_tensor(3, 1, rng)};

  void expect_ok(const std::vector<Parameter*>& params, const std::function<NodeId(Tape&)>& f) {
    const auto r = check_gradients(params, f);
    EXPECT_LT(r.max_relative_error, kGradTol) << "worst at " << r.worst;
    EXPECT_GT(r.checked, 0u);
  }
};

TEST_F(PrimitiveGradients, Elementwise) {
  expect_ok({&a, &b}, [&](Tape& t) { return weighted_sum(t, ad::add(t, t.parameter(a), t.parameter(b))); });
  expect_ok({&a, &b}, [&](Tape& t) { return weighted_sum(t, ad::sub(t, t.parameter(a), t.parameter(b))); });
  expect_ok({&a, &b}, [&](Tape& t) { return weighted_sum(t, ad::mul(t, t.parameter(a), t.parameter(b))); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::scale(t, t.parameter(a), -1.7)); });
}

TEST_F(PrimitiveGradients, Activations) {
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::sigmoid(t, t.parameter(a))); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::tanh(t, t.parameter(a))); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::relu(t, t.parameter(a))); });
}

TEST_F(PrimitiveGradients, MatmulAndTranspose) {
  expect_ok({&a, &m}, [&](Tape& t) { return weighted_sum(t, ad::matmul(t, t.parameter(a), t.parameter(m))); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::transpose(t, t.parameter(a))); });
}

TEST_F(PrimitiveGradients, Broadcasts) {
  expect_ok({&a, &row}, [&](Tape& t) { return weighted_sum(t, ad::add_row(t, t.parameter(a), t.parameter(row))); });
  expect_ok({&a, &col}, [&](Tape& t) { return weighted_sum(t, ad::add_col(t, t.parameter(a), t.parameter(col))); });
  expect_ok({&a, &row}, [&](Tape& t) { return weighted_sum(t, ad::mul_row(t, t.parameter(a), t.parameter(row))); });
}

TEST_F(PrimitiveGradients, Indexing) {
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::gather_rows(t, t.parameter(a), {2, 0, 2, 1})); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::lookup_rows(t, a, {1, 1, 0})); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::slice_rows(t, t.parameter(a), 1, 2)); });
  expect_ok({&a}, [&](Tape& t) { return weighted_sum(t, ad::slice_cols(t, t.parameter(a), 1, 3)); });
  expect_ok({&a, &b}, [&](Tape& t) {
    return weighted_sum(t, ad::concat_rows(t, {t.parameter(a), t.parameter(b)}));
  });
  expect_ok({&a, &b}, [&](Tape& t) {
    return weighted_sum(t, ad::concat_cols(t, {t.parameter(a), t.parameter(b)}));
  });
}

TEST_F(PrimitiveGradients, Reductions) {
  expect_ok({&a}, [&](Tape& t) { return ad::sum(t, t.parameter(a)); });
  expect_ok({&a, &b}, [&](Tape& t) { return ad::dot(t, t.parameter(a), t.parameter(b)); });
}

TEST_F(PrimitiveGradients, CrossEntropy) {
  Parameter sq{"sq", random_tensor(4, 4, rng, 2.0)};
  expect_ok({&sq}, [&](Tape& t) { return ad::cross_entropy_rows(t, t.parameter(sq), {-1, 0, 3, 1}, true); });
  expect_ok({&a}, [&](Tape& t) { return ad::cross_entropy_rows(t, t.parameter(a), {0, 3, 2}); });
}

TEST_F(PrimitiveGradients, BilinearRows) {
  Parameter x{"x", random_tensor(3, 2, rng)};
  Parameter y{"y", random_tensor(3, 2, rng)};
  Parameter u{"u", random_tensor(6, 2, rng)};  // three 2x2 blocks
  expect_ok({&x, &u, &y}, [&](Tape& t) {
    return weighted_sum(t, ad::bilinear_rows(t, t.parameter(x), t.parameter(u), t.parameter(y)));
  });
}

TEST_F(PrimitiveGradients, ComplexOps) {
  Parameter z{"z", random_tensor(2, 10, rng)};  // 2 rows of 5 complex values
  Parameter w{"w", random_tensor(1, 10, rng)};
  Parameter z2{"z2", random_tensor(2, 10, rng)};
  Parameter r{"r", random_tensor(2, 5, rng)};
  expect_ok({&r}, [&](Tape& t) { return weighted_sum(t, ad::to_complex(t, t.parameter(r))); });
  expect_ok({&z}, [&](Tape& t) { return weighted_sum(t, ad::real_part(t, t.parameter(z))); });
  expect_ok({&z}, [&](Tape& t) { return weighted_sum(t, ad::dft_rows(t, t.parameter(z))); });
  expect_ok({&z}, [&](Tape& t) { return weighted_sum(t, ad::idft_rows(t, t.parameter(z))); });
  expect_ok({&z, &w}, [&](Tape& t) {
    return weighted_sum(t, ad::complex_mul_row(t, t.parameter(z), t.parameter(w)));
  });
  expect_ok({&z, &z2}, [&](Tape& t) { return weighted_sum(t, ad::conj_mul(t, t.parameter(z), t.parameter(z2))); });
  for (bool conj_a : {false, true}) {
    expect_ok({&z, &z2}, [&](Tape& t) {
      return weighted_sum(t, ad::complex_matmul_nt_re(t, t.parameter(z), t.parameter(z2), conj_a));
    });
  }
}

TEST_F(PrimitiveGradients, DftPowerOfTwo) {
  Parameter z{"z", random_tensor(3, 16, rng)};
  expect_ok({&z}, [&](Tape& t) { return weighted_sum(t, ad::dft_rows(t, t.parameter(z))); });
  expect_ok({&z}, [&](Tape& t) { return weighted_sum(t, ad::idft_rows(t, t.parameter(z))); });
}

TEST_F(PrimitiveGradients, Composite) {
  expect_ok({&a, &m, &row}, [&](Tape& t) {
    const NodeId h = ad::tanh(t, ad::add_row(t, t.parameter(a), t.parameter(row)));
    const NodeId o = ad::sigmoid(t, ad::matmul(t, h, t.parameter(m)));
    return ad::add(t, weighted_sum(t, o), ad::dot(t, h, h));
  });
}

TEST(Tape, Deterministic) {
  auto run = [] {
    std::mt19937_64 rng(3);
    Parameter p("p", random_tensor(4, 4, rng));
    Tape t;
    const NodeId loss = ad::sum(t, ad::tanh(t, ad::matmul(t, t.parameter(p), t.parameter(p))));
    t.backward(loss);
    return std::make_pair(t.value(loss)[0], p.grad());
  };
  const auto first = run();
  const auto second = run();
  EXPECT_EQ(first.first, second.first);
  EXPECT_EQ(first.second, second.second);
}

}  // namespace
}  // namespace cirparse
