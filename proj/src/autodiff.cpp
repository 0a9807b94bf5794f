#include "cirparse/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <memory>

#include "cirparse/fft.hpp"

namespace cirparse {

const Tape::Node& Tape::at(NodeId id) const {
  if (id.index >= nodes_.size()) {
    throw std::out_of_range("tape: node " + std::to_string(id.index) + " is not on this tape");
  }
  return nodes_[id.index];
}

Tape::Node& Tape::at(NodeId id) {
  return const_cast<Node&>(static_cast<const Tape&>(*this).at(id));
}

NodeId Tape::constant(Tensor value) {
  Node n;
  n.op = "constant";
  n.value = std::move(value);
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Tape::parameter(Parameter& p) {
  Node n;
  n.op = "parameter";
  n.value = p.value();
  n.param = &p;
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Tape::record(std::string_view op, std::vector<NodeId> inputs, Tensor value,
                    BackwardFn backward) {
  bool needs = false;
  for (NodeId in : inputs) needs = needs || at(in).needs_grad;
  Node n;
  n.op = op;
  n.inputs = std::move(inputs);
  n.value = std::move(value);
  n.backward = std::move(backward);
  n.needs_grad = needs;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

NodeId Tape::record_source(std::string_view op, Tensor value, BackwardFn backward) {
  Node n;
  n.op = op;
  n.value = std::move(value);
  n.backward = std::move(backward);
  n.needs_grad = true;
  nodes_.push_back(std::move(n));
  return NodeId{nodes_.size() - 1};
}

Tensor Tape::grad(NodeId id) const {
  const Node& n = at(id);
  if (n.grad.empty() && !n.value.empty()) return Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

Tensor& Tape::grad_mut(NodeId id) {
  Node& n = at(id);
  if (n.grad.shape() != n.value.shape()) n.grad = Tensor(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::backward(NodeId loss) {
  if (at(loss).value.shape() != Shape{1, 1}) {
    throw ShapeError("backward", "loss must be a 1x1 scalar, got " + to_string(shape(loss)));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_mut(loss)[0] = 1.0;
  for (std::size_t i = loss.index + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.needs_grad || n.grad.empty()) continue;
    if (n.param != nullptr) {
      auto dst = n.param->grad().span();
      auto src = n.grad.span();
      for (std::size_t k = 0; k < dst.size(); ++k) dst[k] += src[k];
    }
    if (n.backward) n.backward(*this, NodeId{i});
  }
}

namespace ad {
namespace {

void require(bool ok, const char* op, const std::string& detail) {
  if (!ok) throw ShapeError(op, detail);
}

void require_same(const Tape& t, NodeId a, NodeId b, const char* op) {
  require(t.shape(a) == t.shape(b), op,
          "operand shapes differ: " + to_string(t.shape(a)) + " vs " + to_string(t.shape(b)));
}

void require_complex(const Tape& t, NodeId a, const char* op) {
  require(t.shape(a).cols % 2 == 0 && t.shape(a).cols > 0, op,
          "complex operand needs an even, nonzero column count, got " + to_string(t.shape(a)));
}

// Matrix product with optional transposes: out = op(a) * op(b).
void gemm_acc(const Tensor& a, bool ta, const Tensor& b, bool tb, Tensor& out) {
  const std::size_t m = ta ? a.cols() : a.rows();
  const std::size_t k = ta ? a.rows() : a.cols();
  const std::size_t n = tb ? b.rows() : b.cols();
  if (tb && !ta) {
    for (std::size_t i = 0; i < m; ++i) {
      const double* arow = a.row_span(i).data();
      for (std::size_t j = 0; j < n; ++j) {
        const double* brow = b.row_span(j).data();
        double acc = 0.0;
        for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
        out(i, j) += acc;
      }
    }
    return;
  }
  for (std::size_t i = 0; i < m; ++i) {
    double* orow = out.row_span(i).data();
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ta ? a(p, i) : a(i, p);
      if (!tb) {
        const double* brow = b.row_span(p).data();
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * brow[j];
      } else {
        for (std::size_t j = 0; j < n; ++j) orow[j] += av * b(j, p);
      }
    }
  }
}

const FftPlan& cached_plan(std::size_t n) {
  thread_local std::map<std::size_t, std::unique_ptr<FftPlan>> plans;
  auto& slot = plans[n];
  if (!slot) slot = std::make_unique<FftPlan>(n);
  return *slot;
}

// Applies a per-row complex transform to interleaved data.
Tensor transform_rows(const Tensor& x, bool inverse) {
  const std::size_t n = x.cols() / 2;
  const FftPlan& plan = cached_plan(n);
  Tensor y(x.rows(), x.cols());
  ComplexVector buf(n);
  for (std::size_t r = 0; r < x.rows(); ++r) {
    auto in = x.row_span(r);
    for (std::size_t k = 0; k < n; ++k) buf[k] = {in[2 * k], in[2 * k + 1]};
    if (inverse) {
      plan.inverse(buf);
    } else {
      plan.forward(buf);
    }
    auto out = y.row_span(r);
    for (std::size_t k = 0; k < n; ++k) {
      out[2 * k] = buf[k].real();
      out[2 * k + 1] = buf[k].imag();
    }
  }
  return y;
}

}  // namespace

NodeId add(Tape& t, NodeId a, NodeId b) {
  require_same(t, a, b, "add");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] += bv[k];
  return t.record("add", {a, b}, std::move(y), [a, b](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    for (NodeId in : {a, b}) {
      if (!tp.needs_grad(in)) continue;
      Tensor& gi = tp.grad_mut(in);
      for (std::size_t k = 0; k < g.size(); ++k) gi[k] += g[k];
    }
  });
}

NodeId sub(Tape& t, NodeId a, NodeId b) {
  require_same(t, a, b, "sub");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] -= bv[k];
  return t.record("sub", {a, b}, std::move(y), [a, b](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    Tensor& gb = tp.grad_mut(b);
    for (std::size_t k = 0; k < g.size(); ++k) gb[k] -= g[k];
  });
}

NodeId mul(Tape& t, NodeId a, NodeId b) {
  require_same(t, a, b, "mul");
  Tensor y = t.value(a);
  const Tensor& bv = t.value(b);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] *= bv[k];
  return t.record("mul", {a, b}, std::move(y), [a, b](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * bv[k];
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_mut(b);
      for (std::size_t k = 0; k < g.size(); ++k) gb[k] += g[k] * av[k];
    }
  });
}

NodeId scale(Tape& t, NodeId a, double s) {
  Tensor y = t.value(a);
  for (auto& v : y.span()) v *= s;
  return t.record("scale", {a}, std::move(y), [a, s](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += s * g[k];
  });
}

NodeId matmul(Tape& t, NodeId a, NodeId b) {
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  require(av.cols() == bv.rows(), "matmul",
          "inner dimensions differ: " + to_string(av.shape()) + " * " + to_string(bv.shape()));
  Tensor y(av.rows(), bv.cols());
  gemm_acc(av, false, bv, false, y);
  return t.record("matmul", {a, b}, std::move(y), [a, b](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    if (tp.needs_grad(a)) gemm_acc(g, false, tp.value(b), true, tp.grad_mut(a));
    if (tp.needs_grad(b)) gemm_acc(tp.value(a), true, g, false, tp.grad_mut(b));
  });
}

NodeId transpose(Tape& t, NodeId a) {
  const Tensor& x = t.value(a);
  Tensor y(x.cols(), x.rows());
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < x.cols(); ++c) y(c, r) = x(r, c);
  return t.record("transpose", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t r = 0; r < ga.rows(); ++r)
      for (std::size_t c = 0; c < ga.cols(); ++c) ga(r, c) += g(c, r);
  });
}

NodeId add_row(Tape& t, NodeId a, NodeId row) {
  const Tensor& x = t.value(a);
  const Tensor& v = t.value(row);
  require(v.rows() == 1 && v.cols() == x.cols(), "add_row",
          "row " + to_string(v.shape()) + " does not broadcast over " + to_string(x.shape()));
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += v[c];
  return t.record("add_row", {a, row}, std::move(y), [a, row](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (tp.needs_grad(row)) {
      Tensor& gv = tp.grad_mut(row);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gv[c] += g(r, c);
    }
  });
}

NodeId add_col(Tape& t, NodeId a, NodeId col) {
  const Tensor& x = t.value(a);
  const Tensor& v = t.value(col);
  require(v.cols() == 1 && v.rows() == x.rows(), "add_col",
          "column " + to_string(v.shape()) + " does not broadcast over " + to_string(x.shape()));
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) += v[r];
  return t.record("add_col", {a, col}, std::move(y), [a, col](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k];
    }
    if (tp.needs_grad(col)) {
      Tensor& gv = tp.grad_mut(col);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gv[r] += g(r, c);
    }
  });
}

NodeId mul_row(Tape& t, NodeId a, NodeId row) {
  const Tensor& x = t.value(a);
  const Tensor& v = t.value(row);
  require(v.rows() == 1 && v.cols() == x.cols(), "mul_row",
          "row " + to_string(v.shape()) + " does not broadcast over " + to_string(x.shape()));
  Tensor y = x;
  for (std::size_t r = 0; r < y.rows(); ++r)
    for (std::size_t c = 0; c < y.cols(); ++c) y(r, c) *= v[c];
  return t.record("mul_row", {a, row}, std::move(y), [a, row](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& xv = tp.value(a);
    const Tensor& vv = tp.value(row);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) ga(r, c) += g(r, c) * vv[c];
    }
    if (tp.needs_grad(row)) {
      Tensor& gv = tp.grad_mut(row);
      for (std::size_t r = 0; r < g.rows(); ++r)
        for (std::size_t c = 0; c < g.cols(); ++c) gv[c] += g(r, c) * xv(r, c);
    }
  });
}

NodeId sigmoid(Tape& t, NodeId a) {
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = 1.0 / (1.0 + std::exp(-x[k]));
  return t.record("sigmoid", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& yv = tp.value(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * yv[k] * (1.0 - yv[k]);
  });
}

NodeId tanh(Tape& t, NodeId a) {
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = std::tanh(x[k]);
  return t.record("tanh", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& yv = tp.value(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[k] += g[k] * (1.0 - yv[k] * yv[k]);
  });
}

NodeId relu(Tape& t, NodeId a) {
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[k] = x[k] < 0.0 ? 0.0 : x[k];  // NaN passes through
  return t.record("relu", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& xv = tp.value(a);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k)
      if (xv[k] > 0.0) ga[k] += g[k];
  });
}

NodeId gather_rows(Tape& t, NodeId a, std::vector<std::size_t> rows) {
  const Tensor& x = t.value(a);
  Tensor y(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < x.rows(), "gather_rows",
            "row index " + std::to_string(rows[i]) + " out of range for " + to_string(x.shape()));
    auto src = x.row_span(rows[i]);
    std::copy(src.begin(), src.end(), y.row_span(i).begin());
  }
  return t.record("gather_rows", {a}, std::move(y),
                  [a, rows = std::move(rows)](Tape& tp, NodeId self) {
                    const Tensor g = tp.grad_mut(self);
                    Tensor& ga = tp.grad_mut(a);
                    for (std::size_t i = 0; i < rows.size(); ++i) {
                      auto src = g.row_span(i);
                      auto dst = ga.row_span(rows[i]);
                      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
                    }
                  });
}

NodeId lookup_rows(Tape& t, Parameter& table, std::vector<std::size_t> rows) {
  const Tensor& x = table.value();
  Tensor y(rows.size(), x.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    require(rows[i] < x.rows(), "lookup_rows",
            "row index " + std::to_string(rows[i]) + " out of range for '" + table.name() + "' " +
                to_string(x.shape()));
    auto src = x.row_span(rows[i]);
    std::copy(src.begin(), src.end(), y.row_span(i).begin());
  }
  return t.record_source("lookup_rows", std::move(y),
                         [p = &table, rows = std::move(rows)](Tape& tp, NodeId self) {
                           const Tensor& g = tp.grad_mut(self);
                           Tensor& dst = p->grad();
                           for (std::size_t i = 0; i < rows.size(); ++i) {
                             auto src = g.row_span(i);
                             auto out = dst.row_span(rows[i]);
                             for (std::size_t c = 0; c < src.size(); ++c) out[c] += src[c];
                           }
                         });
}

NodeId slice_rows(Tape& t, NodeId a, std::size_t begin, std::size_t count) {
  const Tensor& x = t.value(a);
  require(begin + count <= x.rows() && count > 0, "slice_rows",
          "rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + to_string(x.shape()));
  Tensor y(count, x.cols());
  std::copy_n(x.span().begin() + static_cast<std::ptrdiff_t>(begin * x.cols()), count * x.cols(),
              y.span().begin());
  return t.record("slice_rows", {a}, std::move(y), [a, begin](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    const std::size_t offset = begin * ga.cols();
    for (std::size_t k = 0; k < g.size(); ++k) ga[offset + k] += g[k];
  });
}

NodeId slice_cols(Tape& t, NodeId a, std::size_t begin, std::size_t count) {
  const Tensor& x = t.value(a);
  require(begin + count <= x.cols() && count > 0, "slice_cols",
          "cols [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
              ") out of range for " + to_string(x.shape()));
  Tensor y(x.rows(), count);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t c = 0; c < count; ++c) y(r, c) = x(r, begin + c);
  return t.record("slice_cols", {a}, std::move(y), [a, begin](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t r = 0; r < g.rows(); ++r)
      for (std::size_t c = 0; c < g.cols(); ++c) ga(r, begin + c) += g(r, c);
  });
}

NodeId concat_rows(Tape& t, const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_rows", "no operands");
  const std::size_t cols = t.shape(parts.front()).cols;
  std::size_t rows = 0;
  for (NodeId p : parts) {
    require(t.shape(p).cols == cols, "concat_rows", "column counts differ");
    rows += t.shape(p).rows;
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& v = t.value(p);
    std::copy(v.span().begin(), v.span().end(), y.span().begin() + static_cast<std::ptrdiff_t>(offset));
    offset += v.size();
  }
  return t.record("concat_rows", parts, std::move(y), [parts](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    std::size_t off = 0;
    for (NodeId p : parts) {
      const std::size_t len = tp.value(p).size();
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad_mut(p);
        for (std::size_t k = 0; k < len; ++k) gp[k] += g[off + k];
      }
      off += len;
    }
  });
}

NodeId concat_cols(Tape& t, const std::vector<NodeId>& parts) {
  require(!parts.empty(), "concat_cols", "no operands");
  const std::size_t rows = t.shape(parts.front()).rows;
  std::size_t cols = 0;
  for (NodeId p : parts) {
    require(t.shape(p).rows == rows, "concat_cols", "row counts differ");
    cols += t.shape(p).cols;
  }
  Tensor y(rows, cols);
  std::size_t offset = 0;
  for (NodeId p : parts) {
    const Tensor& v = t.value(p);
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) y(r, offset + c) = v(r, c);
    offset += v.cols();
  }
  return t.record("concat_cols", parts, std::move(y), [parts](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    std::size_t off = 0;
    for (NodeId p : parts) {
      const std::size_t pc = tp.shape(p).cols;
      if (tp.needs_grad(p)) {
        Tensor& gp = tp.grad_mut(p);
        for (std::size_t r = 0; r < g.rows(); ++r)
          for (std::size_t c = 0; c < pc; ++c) gp(r, c) += g(r, off + c);
      }
      off += pc;
    }
  });
}

NodeId sum(Tape& t, NodeId a) {
  double s = 0.0;
  for (double v : t.value(a).span()) s += v;
  return t.record("sum", {a}, Tensor(1, 1, s), [a](Tape& tp, NodeId self) {
    const double g = tp.grad_mut(self)[0];
    for (auto& v : tp.grad_mut(a).span()) v += g;
  });
}

NodeId dot(Tape& t, NodeId a, NodeId b) {
  require_same(t, a, b, "dot");
  const Tensor& av = t.value(a);
  const Tensor& bv = t.value(b);
  double s = 0.0;
  for (std::size_t k = 0; k < av.size(); ++k) s += av[k] * bv[k];
  return t.record("dot", {a, b}, Tensor(1, 1, s), [a, b](Tape& tp, NodeId self) {
    const double g = tp.grad_mut(self)[0];
    const Tensor& av = tp.value(a);
    const Tensor& bv = tp.value(b);
    if (tp.needs_grad(a)) {
      Tensor& ga = tp.grad_mut(a);
      for (std::size_t k = 0; k < av.size(); ++k) ga[k] += g * bv[k];
    }
    if (tp.needs_grad(b)) {
      Tensor& gb = tp.grad_mut(b);
      for (std::size_t k = 0; k < av.size(); ++k) gb[k] += g * av[k];
    }
  });
}

NodeId cross_entropy_rows(Tape& t, NodeId logits, std::vector<int> targets, bool mask_diagonal) {
  const Tensor& x = t.value(logits);
  require(targets.size() == x.rows(), "cross_entropy_rows",
          "expected " + std::to_string(x.rows()) + " targets, got " + std::to_string(targets.size()));
  Tensor probs(x.rows(), x.cols());
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t r = 0; r < x.rows(); ++r) {
    const int target = targets[r];
    if (target < 0) continue;
    require(static_cast<std::size_t>(target) < x.cols() &&
                !(mask_diagonal && static_cast<std::size_t>(target) == r),
            "cross_entropy_rows", "invalid target " + std::to_string(target) + " in row " +
                                      std::to_string(r));
    double peak = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (mask_diagonal && c == r) continue;
      peak = std::max(peak, x(r, c));
    }
    double z = 0.0;
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (mask_diagonal && c == r) continue;
      z += std::exp(x(r, c) - peak);
    }
    const double log_z = peak + std::log(z);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      if (mask_diagonal && c == r) continue;
      probs(r, c) = std::exp(x(r, c) - log_z);
    }
    total += log_z - x(r, static_cast<std::size_t>(target));
    ++counted;
  }
  const double denom = counted == 0 ? 1.0 : static_cast<double>(counted);
  return t.record("cross_entropy_rows", {logits}, Tensor(1, 1, total / denom),
                  [logits, targets = std::move(targets), probs = std::move(probs), denom](
                      Tape& tp, NodeId self) {
                    const double g = tp.grad_mut(self)[0] / denom;
                    Tensor& gx = tp.grad_mut(logits);
                    for (std::size_t r = 0; r < probs.rows(); ++r) {
                      if (targets[r] < 0) continue;
                      for (std::size_t c = 0; c < probs.cols(); ++c) gx(r, c) += g * probs(r, c);
                      gx(r, static_cast<std::size_t>(targets[r])) -= g;
                    }
                  });
}

NodeId bilinear_rows(Tape& t, NodeId x, NodeId stacked, NodeId y) {
  const Tensor& xv = t.value(x);
  const Tensor& uv = t.value(stacked);
  const Tensor& yv = t.value(y);
  const std::size_t m = uv.cols();
  require(xv.cols() == m && yv.cols() == m && xv.rows() == yv.rows(), "bilinear_rows",
          "operands " + to_string(xv.shape()) + ", " + to_string(yv.shape()) +
              " do not match blocks of width " + std::to_string(m));
  require(m > 0 && uv.rows() % m == 0, "bilinear_rows",
          "stacked weights " + to_string(uv.shape()) + " are not square blocks");
  const std::size_t labels = uv.rows() / m;
  Tensor out(xv.rows(), labels);
  for (std::size_t r = 0; r < xv.rows(); ++r) {
    for (std::size_t l = 0; l < labels; ++l) {
      double s = 0.0;
      for (std::size_t a = 0; a < m; ++a) {
        double inner = 0.0;
        for (std::size_t b = 0; b < m; ++b) inner += uv(l * m + a, b) * yv(r, b);
        s += xv(r, a) * inner;
      }
      out(r, l) = s;
    }
  }
  return t.record("bilinear_rows", {x, stacked, y}, std::move(out),
                  [x, stacked, y, m, labels](Tape& tp, NodeId self) {
                    const Tensor g = tp.grad_mut(self);
                    const Tensor& xv = tp.value(x);
                    const Tensor& uv = tp.value(stacked);
                    const Tensor& yv = tp.value(y);
                    Tensor& gx = tp.grad_mut(x);
                    Tensor& gu = tp.grad_mut(stacked);
                    Tensor& gy = tp.grad_mut(y);
                    for (std::size_t r = 0; r < xv.rows(); ++r) {
                      for (std::size_t l = 0; l < labels; ++l) {
                        const double gl = g(r, l);
                        if (gl == 0.0) continue;
                        for (std::size_t a = 0; a < m; ++a) {
                          double inner = 0.0;
                          for (std::size_t b = 0; b < m; ++b) {
                            const double u = uv(l * m + a, b);
                            inner += u * yv(r, b);
                            gy(r, b) += gl * xv(r, a) * u;
                            gu(l * m + a, b) += gl * xv(r, a) * yv(r, b);
                          }
                          gx(r, a) += gl * inner;
                        }
                      }
                    }
                  });
}

NodeId to_complex(Tape& t, NodeId a) {
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), 2 * x.cols());
  for (std::size_t k = 0; k < x.size(); ++k) y[2 * k] = x[k];
  return t.record("to_complex", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += g[2 * k];
  });
}

NodeId real_part(Tape& t, NodeId a) {
  require_complex(t, a, "real_part");
  const Tensor& x = t.value(a);
  Tensor y(x.rows(), x.cols() / 2);
  for (std::size_t k = 0; k < y.size(); ++k) y[k] = x[2 * k];
  return t.record("real_part", {a}, std::move(y), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < g.size(); ++k) ga[2 * k] += g[k];
  });
}

// For a complex-linear map y = A x acting on (re, im) pairs, the real
// adjoint is A^H. The forward DFT F has F^H = n * F^{-1}, and the inverse
// DFT F^{-1} has adjoint F / n.
NodeId dft_rows(Tape& t, NodeId a) {
  require_complex(t, a, "dft_rows");
  return t.record("dft_rows", {a}, transform_rows(t.value(a), false), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor back = transform_rows(g, true);
    const double n = static_cast<double>(g.cols() / 2);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += n * back[k];
  });
}

NodeId idft_rows(Tape& t, NodeId a) {
  require_complex(t, a, "idft_rows");
  return t.record("idft_rows", {a}, transform_rows(t.value(a), true), [a](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    Tensor fwd = transform_rows(g, false);
    const double n = static_cast<double>(g.cols() / 2);
    Tensor& ga = tp.grad_mut(a);
    for (std::size_t k = 0; k < ga.size(); ++k) ga[k] += fwd[k] / n;
  });
}

NodeId complex_mul_row(Tape& t, NodeId a, NodeId w) {
  require_complex(t, a, "complex_mul_row");
  const Tensor& x = t.value(a);
  const Tensor& wv = t.value(w);
  require(wv.rows() == 1 && wv.cols() == x.cols(), "complex_mul_row",
          "row " + to_string(wv.shape()) + " does not broadcast over " + to_string(x.shape()));
  const std::size_t n = x.cols() / 2;
  Tensor y(x.rows(), x.cols());
  for (std::size_t r = 0; r < x.rows(); ++r) {
    for (std::size_t k = 0; k < n; ++k) {
      const double ar = x(r, 2 * k), ai = x(r, 2 * k + 1);
      const double br = wv[2 * k], bi = wv[2 * k + 1];
      y(r, 2 * k) = ar * br - ai * bi;
      y(r, 2 * k + 1) = ar * bi + ai * br;
    }
  }
  return t.record("complex_mul_row", {a, w}, std::move(y), [a, w, n](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& x = tp.value(a);
    const Tensor& wv = tp.value(w);
    const bool need_a = tp.needs_grad(a);
    const bool need_w = tp.needs_grad(w);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t k = 0; k < n; ++k) {
        const double gr = g(r, 2 * k), gi = g(r, 2 * k + 1);
        const double ar = x(r, 2 * k), ai = x(r, 2 * k + 1);
        const double br = wv[2 * k], bi = wv[2 * k + 1];
        if (need_a) {
          Tensor& ga = tp.grad_mut(a);
          ga(r, 2 * k) += gr * br + gi * bi;
          ga(r, 2 * k + 1) += -gr * bi + gi * br;
        }
        if (need_w) {
          Tensor& gw = tp.grad_mut(w);
          gw[2 * k] += gr * ar + gi * ai;
          gw[2 * k + 1] += -gr * ai + gi * ar;
        }
      }
    }
  });
}

NodeId conj_mul(Tape& t, NodeId a, NodeId b) {
  require_complex(t, a, "conj_mul");
  require_same(t, a, b, "conj_mul");
  const Tensor& x = t.value(a);
  const Tensor& z = t.value(b);
  Tensor y(x.rows(), x.cols());
  for (std::size_t k = 0; k < x.size() / 2; ++k) {
    const double ar = x[2 * k], ai = x[2 * k + 1];
    const double br = z[2 * k], bi = z[2 * k + 1];
    y[2 * k] = ar * br + ai * bi;
    y[2 * k + 1] = ar * bi - ai * br;
  }
  return t.record("conj_mul", {a, b}, std::move(y), [a, b](Tape& tp, NodeId self) {
    const Tensor g = tp.grad_mut(self);
    const Tensor& x = tp.value(a);
    const Tensor& z = tp.value(b);
    Tensor& ga = tp.grad_mut(a);
    Tensor& gb = tp.grad_mut(b);
    for (std::size_t k = 0; k < g.size() / 2; ++k) {
      const double gr = g[2 * k], gi = g[2 * k + 1];
      const double ar = x[2 * k], ai = x[2 * k + 1];
      const double br = z[2 * k], bi = z[2 * k + 1];
      ga[2 * k] += gr * br + gi * bi;
      ga[2 * k + 1] += gr * bi - gi * br;
      gb[2 * k] += gr * ar - gi * ai;
      gb[2 * k + 1] += gr * ai + gi * ar;
    }
  });
}

NodeId complex_matmul_nt_re(Tape& t, NodeId a, NodeId b, bool conj_a) {
  require_complex(t, a, "complex_matmul_nt_re");
  const Tensor& x = t.value(a);
  const Tensor& z = t.value(b);
  require(x.cols() == z.cols(), "complex_matmul_nt_re",
          "operand widths differ: " + to_string(x.shape()) + " vs " + to_string(z.shape()));
  const double sign = conj_a ? 1.0 : -1.0;  // Re(conj(a) b) = ar br + ai bi
  const std::size_t n = x.cols() / 2;
  Tensor y(x.rows(), z.rows());
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < z.rows(); ++j) {
      double s = 0.0;
      for (std::size_t k = 0; k < n; ++k) {
        s += x(i, 2 * k) * z(j, 2 * k) + sign * x(i, 2 * k + 1) * z(j, 2 * k + 1);
      }
      y(i, j) = s;
    }
  }
  return t.record("complex_matmul_nt_re", {a, b}, std::move(y),
                  [a, b, sign, n](Tape& tp, NodeId self) {
                    const Tensor g = tp.grad_mut(self);
                    const Tensor& x = tp.value(a);
                    const Tensor& z = tp.value(b);
                    const bool need_a = tp.needs_grad(a);
                    const bool need_b = tp.needs_grad(b);
                    for (std::size_t i = 0; i < g.rows(); ++i) {
                      for (std::size_t j = 0; j < g.cols(); ++j) {
                        const double gij = g(i, j);
                        if (gij == 0.0) continue;
                        for (std::size_t k = 0; k < n; ++k) {
                          if (need_a) {
                            Tensor& ga = tp.grad_mut(a);
                            ga(i, 2 * k) += gij * z(j, 2 * k);
                            ga(i, 2 * k + 1) += sign * gij * z(j, 2 * k + 1);
                          }
                          if (need_b) {
                            Tensor& gb = tp.grad_mut(b);
                            gb(j, 2 * k) += gij * x(i, 2 * k);
                            gb(j, 2 * k + 1) += sign * gij * x(i, 2 * k + 1);
                          }
                        }
                      }
                    }
                  });
}

}  // namespace ad
}  // namespace cirparse
