#pragma once

#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "cirparse/autodiff.hpp"
#include "cirparse/fft.hpp"
#include "cirparse/kernels.hpp"

namespace cirparse {

/// Arc scorer. Score grid entry [i][j] is the score of head i for
/// dependent j:
///   dense:      v_i^T W v_j + v_i^T b             (b in R^n, head only)
///   symmetric:  <v_i, w, v_j> + (v_i + v_j)^T b   (b in R^2n, concatenated)
///   circulant:  v_i^T C(w) v_j + (v_i + v_j)^T b  (FFT kernel)
/// where "+" on vectors above denotes concatenation.
class ArcClassifier {
 public:
  ArcClassifier(Variant variant, std::size_t dim, std::mt19937_64& rng, double init_range);

  Variant variant() const { return variant_; }
  std::size_t dim() const { return dim_; }

  /// heads, deps: T x n row-per-position views; returns the T x T grid.
  NodeId score(Tape& tape, NodeId heads, NodeId deps);
  /// Value path used at inference and in benchmarks.
  Tensor score_values(const Tensor& heads, const Tensor& deps) const;

  KernelWeights kernel() const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Variant variant_;
  std::size_t dim_;
  Parameter kernel_;  // dense n x n | symmetric 1 x n | circulant 1 x 2n (interleaved spectrum)
  Parameter bias_;    // dense 1 x n | otherwise 1 x 2n
  FftPlan plan_;
};

/// Per-label scorer sharing one implicit basis across all L kernels.
///   dense:      v_i^T U_l v_j + (v_i + v_j)^T b_l + c_l
///   symmetric:  <v_i, u_l, v_j> + (v_i + v_j)^T b_l
///   circulant:  v_i^T C(u_l) v_j + (v_i + v_j)^T b_l
class LabelClassifier {
 public:
  LabelClassifier(Variant variant, std::size_t dim, std::size_t labels, std::mt19937_64& rng,
                  double init_range);

  Variant variant() const { return variant_; }
  std::size_t dim() const { return dim_; }
  std::size_t labels() const { return labels_; }

  /// Row r of the result holds the L label scores for the pair
  /// (heads row r, deps row r). Both inputs are R x m.
  NodeId score(Tape& tape, NodeId heads, NodeId deps);
  std::vector<double> score_values(std::span<const double> head,
                                   std::span<const double> dep) const;

  KernelWeights kernel(std::size_t label) const;
  /// Scalar bias of a label (always 0 outside the dense variant).
  double scalar_bias(std::size_t label) const;
  std::vector<Parameter*> parameters();
  std::vector<const Parameter*> parameters() const;

 private:
  Variant variant_;
  std::size_t dim_;
  std::size_t labels_;
  Parameter kernels_;  // dense L*m x m | symmetric L x m | circulant L x 2m
  Parameter biases_;   // L x 2m
  Parameter scalars_;  // 1 x L, dense only (empty otherwise)
  FftPlan plan_;
};

/// Mean softmax cross-entropy over dependents 1..T of head candidates
/// (self-arcs masked). `grid` is (T+1) x (T+1), heads[k] is the head of
/// token k+1.
NodeId arc_loss(Tape& tape, NodeId grid, std::span<const int> gold_heads);

/// Mean softmax cross-entropy of label scores (T x L) against gold labels.
NodeId label_loss(Tape& tape, NodeId label_scores, std::span<const int> gold_labels);

}  // namespace cirparse
