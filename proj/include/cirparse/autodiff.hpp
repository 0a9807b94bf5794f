#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <string_view>
#include <vector>

#include "cirparse/tensor.hpp"

namespace cirparse {

/// Handle to a value recorded on a Tape.
struct NodeId {
  std::size_t index = 0;
  bool operator==(const NodeId&) const = default;
};

/// A learnable array with its accumulated gradient. Gradients flow into it
/// when it is bound to a tape with Tape::parameter.
class Parameter {
 public:
  Parameter() = default;
  Parameter(std::string name, Tensor value)
      : name_(std::move(name)), value_(std::move(value)), grad_(value_.rows(), value_.cols()) {}

  const std::string& name() const { return name_; }
  Tensor& value() { return value_; }
  const Tensor& value() const { return value_; }
  Tensor& grad() { return grad_; }
  const Tensor& grad() const { return grad_; }
  std::size_t size() const { return value_.size(); }
  void zero_grad() { grad_.fill(0.0); }

 private:
  std::string name_;
  Tensor value_;
  Tensor grad_;
};

/// Reverse-mode recording of primitive array operations.
///
/// Nodes are appended in evaluation order, so every node's inputs precede
/// it and the reverse of the recording order is a valid backward schedule.
/// A tape is single-use: build it for one example (or mini-batch), call
/// backward once, and drop it.
class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, NodeId self)>;

  NodeId constant(Tensor value);
  NodeId parameter(Parameter& p);

  /// Appends an already-evaluated primitive. `backward` must add the
  /// contribution of grad(self) into grad_mut(input) for each input.
  NodeId record(std::string_view op, std::vector<NodeId> inputs, Tensor value,
                BackwardFn backward);
  /// Appends a leaf that reads parameter storage directly; its closure is
  /// responsible for writing into that storage's gradient.
  NodeId record_source(std::string_view op, Tensor value, BackwardFn backward);

  const Tensor& value(NodeId id) const { return at(id).value; }
  Shape shape(NodeId id) const { return at(id).value.shape(); }
  std::string_view op(NodeId id) const { return at(id).op; }
  const std::vector<NodeId>& inputs(NodeId id) const { return at(id).inputs; }
  bool needs_grad(NodeId id) const { return at(id).needs_grad; }
  std::size_t size() const { return nodes_.size(); }

  /// Gradient of the last backward() loss w.r.t. this node; zeros when the
  /// node was not reached.
  Tensor grad(NodeId id) const;
  Tensor& grad_mut(NodeId id);

  /// Seeds d(loss)/d(loss) = 1, runs every closure in reverse order and adds
  /// the resulting gradients into the bound Parameter objects.
  void backward(NodeId loss);

 private:
  struct Node {
    std::string_view op;
    std::vector<NodeId> inputs;
    Tensor value;
    Tensor grad;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool needs_grad = false;
  };

  const Node& at(NodeId id) const;
  Node& at(NodeId id);

  std::vector<Node> nodes_;
};

/// Primitive operations. Every function evaluates eagerly and records
/// itself on the tape. Vectors are 1 x n rows. Complex operands are stored
/// as interleaved (re, im) pairs: a row of n complex numbers has 2n columns.
namespace ad {

NodeId add(Tape& t, NodeId a, NodeId b);
NodeId sub(Tape& t, NodeId a, NodeId b);
NodeId mul(Tape& t, NodeId a, NodeId b);
NodeId scale(Tape& t, NodeId a, double s);
NodeId matmul(Tape& t, NodeId a, NodeId b);
NodeId transpose(Tape& t, NodeId a);

/// a (r x c) + row (1 x c) broadcast over rows.
NodeId add_row(Tape& t, NodeId a, NodeId row);
/// a (r x c) + col (r x 1) broadcast over columns.
NodeId add_col(Tape& t, NodeId a, NodeId col);
/// a (r x c) * row (1 x c) elementwise, broadcast over rows.
NodeId mul_row(Tape& t, NodeId a, NodeId row);

NodeId sigmoid(Tape& t, NodeId a);
NodeId tanh(Tape& t, NodeId a);
NodeId relu(Tape& t, NodeId a);

NodeId gather_rows(Tape& t, NodeId a, std::vector<std::size_t> rows);
/// Rows of a parameter table, with a sparse scatter-add into p.grad() on
/// backward. Avoids copying the whole table onto the tape.
NodeId lookup_rows(Tape& t, Parameter& table, std::vector<std::size_t> rows);
NodeId slice_rows(Tape& t, NodeId a, std::size_t begin, std::size_t count);
NodeId slice_cols(Tape& t, NodeId a, std::size_t begin, std::size_t count);
NodeId concat_rows(Tape& t, const std::vector<NodeId>& parts);
NodeId concat_cols(Tape& t, const std::vector<NodeId>& parts);

NodeId sum(Tape& t, NodeId a);
NodeId dot(Tape& t, NodeId a, NodeId b);

/// Mean over rows with target >= 0 of the softmax cross-entropy of each
/// logit row against its target column. With mask_diagonal, entry (r, r) is
/// excluded from row r's softmax.
NodeId cross_entropy_rows(Tape& t, NodeId logits, std::vector<int> targets,
                          bool mask_diagonal = false);

/// out[t][l] = x_t^T U_l y_t, where U (L*m x m) stacks the L square blocks.
NodeId bilinear_rows(Tape& t, NodeId x, NodeId stacked, NodeId y);

/// Real r x n -> complex r x 2n with zero imaginary part.
NodeId to_complex(Tape& t, NodeId a);
/// Complex r x 2n -> real parts, r x n.
NodeId real_part(Tape& t, NodeId a);
/// Row-wise forward DFT (no scaling) of a complex r x 2n array.
NodeId dft_rows(Tape& t, NodeId a);
/// Row-wise inverse DFT (with 1/n) of a complex r x 2n array.
NodeId idft_rows(Tape& t, NodeId a);
/// Complex a (r x 2n) times complex row w (1 x 2n), elementwise.
NodeId complex_mul_row(Tape& t, NodeId a, NodeId w);
/// conj(a) * b elementwise over complex arrays of equal shape.
NodeId conj_mul(Tape& t, NodeId a, NodeId b);
/// out[i][j] = Re(sum_k op(a)[i,k] * b[j,k]) with op = conj when conj_a.
NodeId complex_matmul_nt_re(Tape& t, NodeId a, NodeId b, bool conj_a);

}  // namespace ad

}  // namespace cirparse
