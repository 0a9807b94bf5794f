#include "cirparse/scorers.hpp"

#include <algorithm>

namespace cirparse {
namespace {

Tensor uniform(std::size_t rows, std::size_t cols, double range, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-range, range);
  Tensor t(rows, cols);
  for (auto& v : t.span()) v = dist(rng);
  return t;
}

Tensor spectra(std::size_t rows, std::size_t n, double range, std::mt19937_64& rng) {
  Tensor t(rows, 2 * n);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto interleaved = to_interleaved(spectrum_init(n, rng, range));
    std::copy(interleaved.begin(), interleaved.end(), t.row_span(r).begin());
  }
  return t;
}

ComplexVector row_spectrum(const Tensor& t, std::size_t row) { return from_interleaved(t.row_span(row)); }

void require_width(const Tensor& t, std::size_t n, const char* op) {
  if (t.cols() != n) {
    throw ShapeError(op, "view width " + std::to_string(t.cols()) + " does not match kernel dimension " +
                             std::to_string(n));
  }
}

// grid(i, j) += head_i . b[0:n] + dep_j . b[n:2n]
NodeId concat_bias_grid(Tape& t, NodeId grid, NodeId heads, NodeId deps, NodeId bias,
                        std::size_t n) {
  const NodeId head_part = ad::slice_cols(t, bias, 0, n);
  const NodeId dep_part = ad::slice_cols(t, bias, n, n);
  const NodeId by_head = ad::matmul(t, heads, ad::transpose(t, head_part));                    // T x 1
  const NodeId by_dep = ad::transpose(t, ad::matmul(t, deps, ad::transpose(t, dep_part)));  // 1 x T
  return ad::add_row(t, ad::add_col(t, grid, by_head), by_dep);
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

}  // namespace

ArcClassifier::ArcClassifier(Variant variant, std::size_t dim, std::mt19937_64& rng,
                             double init_range)
    : variant_(variant), dim_(dim), plan_(dim) {
  switch (variant_) {
    case Variant::Dense:
      kernel_ = Parameter("arc.kernel", uniform(dim, dim, init_range, rng));
      bias_ = Parameter("arc.bias", Tensor(1, dim));
      break;
    case Variant::Symmetric:
      kernel_ = Parameter("arc.kernel", uniform(1, dim, init_range, rng));
      bias_ = Parameter("arc.bias", Tensor(1, 2 * dim));
      break;
    case Variant::Circulant:
      kernel_ = Parameter("arc.kernel", spectra(1, dim, init_range, rng));
      bias_ = Parameter("arc.bias", Tensor(1, 2 * dim));
      break;
  }
}

NodeId ArcClassifier::score(Tape& t, NodeId heads, NodeId deps) {
  if (t.shape(heads).cols != dim_ || t.shape(deps).cols != dim_) {
    throw ShapeError("score_arcs", "view widths " + to_string(t.shape(heads)) + ", " +
                                       to_string(t.shape(deps)) + " do not match n=" +
                                       std::to_string(dim_));
  }
  const NodeId kernel = t.parameter(kernel_);
  const NodeId bias = t.parameter(bias_);
  switch (variant_) {
    case Variant::Dense: {
      const NodeId grid = ad::matmul(t, ad::matmul(t, heads, kernel), ad::transpose(t, deps));
      return ad::add_col(t, grid, ad::matmul(t, heads, ad::transpose(t, bias)));
    }
    case Variant::Symmetric: {
      const NodeId grid = ad::matmul(t, ad::mul_row(t, heads, kernel), ad::transpose(t, deps));
      return concat_bias_grid(t, grid, heads, deps, bias, dim_);
    }
    case Variant::Circulant: {
      const NodeId head_freq = ad::dft_rows(t, ad::to_complex(t, heads));
      const NodeId dep_freq = ad::dft_rows(t, ad::to_complex(t, deps));
      const NodeId weighted = ad::complex_mul_row(t, dep_freq, kernel);
      const NodeId grid = ad::complex_matmul_nt_re(t, head_freq, weighted, true);
      return concat_bias_grid(t, grid, heads, deps, bias, dim_);
    }
  }
  throw std::logic_error("unreachable");
}

Tensor ArcClassifier::score_values(const Tensor& heads, const Tensor& deps) const {
  require_width(heads, dim_, "score_arcs");
  require_width(deps, dim_, "score_arcs");
  const std::size_t n = dim_;
  const std::size_t rows = heads.rows();
  const std::size_t cols = deps.rows();
  Tensor grid(rows, cols);
  const Tensor& k = kernel_.value();
  const Tensor& b = bias_.value();

  switch (variant_) {
    case Variant::Dense: {
      // projected[j] = W v_dep_j
      Tensor projected(cols, n);
      for (std::size_t j = 0; j < cols; ++j) {
        auto d = deps.row_span(j);
        auto out = projected.row_span(j);
        for (std::size_t r = 0; r < n; ++r) out[r] = dot(k.row_span(r), d);
      }
      for (std::size_t i = 0; i < rows; ++i) {
        auto h = heads.row_span(i);
        const double head_bias = dot(h, b.span());
        for (std::size_t j = 0; j < cols; ++j) grid(i, j) = dot(h, projected.row_span(j)) + head_bias;
      }
      return grid;
    }
    case Variant::Symmetric: {
      std::vector<double> dep_bias(cols);
      for (std::size_t j = 0; j < cols; ++j) dep_bias[j] = dot(deps.row_span(j), b.span().subspan(n, n));
      for (std::size_t i = 0; i < rows; ++i) {
        auto h = heads.row_span(i);
        const double head_bias = dot(h, b.span().subspan(0, n));
        for (std::size_t j = 0; j < cols; ++j) {
          grid(i, j) = triple_inner_product(h, k.span(), deps.row_span(j)) + head_bias + dep_bias[j];
        }
      }
      return grid;
    }
    case Variant::Circulant: {
      // Re(conj(a) z) is the real dot product of the interleaved (re, im)
      // pairs, so with z = w' * F v_dep precomputed each pair is one dot.
      Tensor head_freq(rows, 2 * n);
      Tensor dep_freq(cols, 2 * n);
      std::vector<double> dep_bias(cols);
      ComplexVector buf(n);
      for (std::size_t i = 0; i < rows; ++i) {
        auto h = heads.row_span(i);
        for (std::size_t r = 0; r < n; ++r) buf[r] = {h[r], 0.0};
        plan_.forward(buf);
        auto out = head_freq.row_span(i);
        for (std::size_t r = 0; r < n; ++r) {
          out[2 * r] = buf[r].real();
          out[2 * r + 1] = buf[r].imag();
        }
      }
      for (std::size_t j = 0; j < cols; ++j) {
        auto d = deps.row_span(j);
        for (std::size_t r = 0; r < n; ++r) buf[r] = {d[r], 0.0};
        plan_.forward(buf);
        auto out = dep_freq.row_span(j);
        for (std::size_t r = 0; r < n; ++r) {
          const Complex z = cmul(buf[r], Complex{k[2 * r], k[2 * r + 1]});
          out[2 * r] = z.real();
          out[2 * r + 1] = z.imag();
        }
        dep_bias[j] = dot(d, b.span().subspan(n, n));
      }
      for (std::size_t i = 0; i < rows; ++i) {
        const double head_bias = dot(heads.row_span(i), b.span().subspan(0, n));
        auto a = head_freq.row_span(i);
        for (std::size_t j = 0; j < cols; ++j) {
          grid(i, j) = dot(a, dep_freq.row_span(j)) + head_bias + dep_bias[j];
        }
      }
      return grid;
    }
  }
  throw std::logic_error("unreachable");
}

KernelWeights ArcClassifier::kernel() const {
  const Tensor& k = kernel_.value();
  switch (variant_) {
    case Variant::Dense:
      return DenseKernel{k};
    case Variant::Symmetric:
      return SymmetricKernel{k.values()};
    case Variant::Circulant:
      return CirculantKernel{row_spectrum(k, 0)};
  }
  throw std::logic_error("unreachable");
}

std::vector<Parameter*> ArcClassifier::parameters() { return {&kernel_, &bias_}; }
std::vector<const Parameter*> ArcClassifier::parameters() const { return {&kernel_, &bias_}; }

LabelClassifier::LabelClassifier(Variant variant, std::size_t dim, std::size_t labels,
                                 std::mt19937_64& rng, double init_range)
    : variant_(variant), dim_(dim), labels_(labels), plan_(dim) {
  if (labels == 0) throw std::invalid_argument("label classifier: at least one label required");
  switch (variant_) {
    case Variant::Dense:
      kernels_ = Parameter("label.kernels", uniform(labels * dim, dim, init_range, rng));
      scalars_ = Parameter("label.scalars", Tensor(1, labels));
      break;
    case Variant::Symmetric:
      kernels_ = Parameter("label.kernels", uniform(labels, dim, init_range, rng));
      break;
    case Variant::Circulant:
      kernels_ = Parameter("label.kernels", spectra(labels, dim, init_range, rng));
      break;
  }
  biases_ = Parameter("label.biases", Tensor(labels, 2 * dim));
}

NodeId LabelClassifier::score(Tape& t, NodeId heads, NodeId deps) {
  if (t.shape(heads) != t.shape(deps) || t.shape(heads).cols != dim_) {
    throw ShapeError("score_labels", "view shapes " + to_string(t.shape(heads)) + ", " +
                                         to_string(t.shape(deps)) + " do not match m=" +
                                         std::to_string(dim_));
  }
  const NodeId kernels = t.parameter(kernels_);
  const NodeId biases = t.parameter(biases_);
  NodeId scores{};
  switch (variant_) {
    case Variant::Dense:
      scores = ad::bilinear_rows(t, heads, kernels, deps);
      break;
    case Variant::Symmetric:
      scores = ad::matmul(t, ad::mul(t, heads, deps), ad::transpose(t, kernels));
      break;
    case Variant::Circulant: {
      const NodeId head_freq = ad::dft_rows(t, ad::to_complex(t, heads));
      const NodeId dep_freq = ad::dft_rows(t, ad::to_complex(t, deps));
      scores = ad::complex_matmul_nt_re(t, ad::conj_mul(t, head_freq, dep_freq), kernels, false);
      break;
    }
  }
  const NodeId pair = ad::concat_cols(t, {heads, deps});
  scores = ad::add(t, scores, ad::matmul(t, pair, ad::transpose(t, biases)));
  if (variant_ == Variant::Dense) scores = ad::add_row(t, scores, t.parameter(scalars_));
  return scores;
}

std::vector<double> LabelClassifier::score_values(std::span<const double> head,
                                                  std::span<const double> dep) const {
  if (head.size() != dim_ || dep.size() != dim_) {
    throw ShapeError("score_labels", "view dimensions " + std::to_string(head.size()) + ", " +
                                         std::to_string(dep.size()) + " do not match m=" +
                                         std::to_string(dim_));
  }
  const Tensor& k = kernels_.value();
  std::vector<double> out(labels_);
  ComplexVector product;
  if (variant_ == Variant::Circulant) {
    ComplexVector a(head.begin(), head.end());
    ComplexVector b(dep.begin(), dep.end());
    plan_.forward(a);
    plan_.forward(b);
    product.resize(dim_);
    for (std::size_t r = 0; r < dim_; ++r) product[r] = cmul(std::conj(a[r]), b[r]);
  }
  for (std::size_t l = 0; l < labels_; ++l) {
    double s = 0.0;
    switch (variant_) {
      case Variant::Dense:
        for (std::size_t a = 0; a < dim_; ++a) s += head[a] * dot(k.row_span(l * dim_ + a), dep);
        s += scalars_.value()[l];
        break;
      case Variant::Symmetric:
        s = triple_inner_product(head, k.row_span(l), dep);
        break;
      case Variant::Circulant: {
        auto w = k.row_span(l);
        for (std::size_t r = 0; r < dim_; ++r) {
          s += product[r].real() * w[2 * r] - product[r].imag() * w[2 * r + 1];
        }
        break;
      }
    }
    auto bias = biases_.value().row_span(l);
    s += dot(head, bias.subspan(0, dim_)) + dot(dep, bias.subspan(dim_, dim_));
    out[l] = s;
  }
  return out;
}

KernelWeights LabelClassifier::kernel(std::size_t label) const {
  const Tensor& k = kernels_.value();
  switch (variant_) {
    case Variant::Dense: {
      Tensor block(dim_, dim_);
      for (std::size_t a = 0; a < dim_; ++a) {
        auto src = k.row_span(label * dim_ + a);
        std::copy(src.begin(), src.end(), block.row_span(a).begin());
      }
      return DenseKernel{std::move(block)};
    }
    case Variant::Symmetric: {
      auto row = k.row_span(label);
      return SymmetricKernel{std::vector<double>(row.begin(), row.end())};
    }
    case Variant::Circulant:
      return CirculantKernel{row_spectrum(k, label)};
  }
  throw std::logic_error("unreachable");
}

double LabelClassifier::scalar_bias(std::size_t label) const {
  return variant_ == Variant::Dense ? scalars_.value()[label] : 0.0;
}

std::vector<Parameter*> LabelClassifier::parameters() {
  if (variant_ == Variant::Dense) return {&kernels_, &biases_, &scalars_};
  return {&kernels_, &biases_};
}

std::vector<const Parameter*> LabelClassifier::parameters() const {
  auto mut = const_cast<LabelClassifier*>(this)->parameters();
  return {mut.begin(), mut.end()};
}

NodeId arc_loss(Tape& tape, NodeId grid, std::span<const int> gold_heads) {
  const Shape s = tape.shape(grid);
  if (s.rows != s.cols || s.rows != gold_heads.size() + 1) {
    throw ShapeError("arc_loss", "grid " + to_string(s) + " does not fit " +
                                     std::to_string(gold_heads.size()) + " dependents");
  }
  std::vector<int> targets(s.rows, -1);
  for (std::size_t k = 0; k < gold_heads.size(); ++k) targets[k + 1] = gold_heads[k];
  // Rows of the transposed grid are dependents, columns head candidates.
  return ad::cross_entropy_rows(tape, ad::transpose(tape, grid), std::move(targets), true);
}

NodeId label_loss(Tape& tape, NodeId label_scores, std::span<const int> gold_labels) {
  return ad::cross_entropy_rows(tape, label_scores,
                                std::vector<int>(gold_labels.begin(), gold_labels.end()));
}

}  // namespace cirparse
