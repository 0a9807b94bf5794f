#include "cirparse/kernels.hpp"

#include <spdlog/spdlog.h>

#include <stdexcept>
#include <string>

namespace cirparse {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Dense:
      return "dense";
    case Variant::Symmetric:
      return "symmetric";
    case Variant::Circulant:
      return "circulant";
  }
  return "unknown";
}

Variant parse_variant(std::string_view name) {
  if (name == "dense") return Variant::Dense;
  if (name == "symmetric") return Variant::Symmetric;
  if (name == "circulant") return Variant::Circulant;
  throw std::invalid_argument("unknown classifier variant '" + std::string(name) +
                              "' (expected dense, symmetric or circulant)");
}

namespace {

void require_equal(std::size_t a, std::size_t b, const char* op, const char* what) {
  if (a != b) {
    throw ShapeError(op, std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}

template <class... Fs>
struct overloaded : Fs... {
  using Fs::operator()...;
};

}  // namespace

Variant variant_of(const KernelWeights& k) {
  return std::visit(overloaded{[](const DenseKernel&) { return Variant::Dense; },
                               [](const SymmetricKernel&) { return Variant::Symmetric; },
                               [](const CirculantKernel&) { return Variant::Circulant; }},
                    k);
}

std::size_t dimension(const KernelWeights& k) {
  return std::visit(overloaded{[](const DenseKernel& d) { return d.matrix.rows(); },
                               [](const SymmetricKernel& s) { return s.diagonal.size(); },
                               [](const CirculantKernel& c) { return c.spectrum.size(); }},
                    k);
}

double apply(const KernelWeights& k, std::span<const double> vi, std::span<const double> vj) {
  return std::visit(
      overloaded{
          [&](const DenseKernel& d) { return bilinear_dense(vi, d.matrix, vj); },
          [&](const SymmetricKernel& s) { return triple_inner_product(vi, s.diagonal, vj); },
          [&](const CirculantKernel& c) { return circulant_bilinear_fft(vi, c.spectrum, vj); }},
      k);
}

Tensor to_dense(const KernelWeights& k) {
  return std::visit(
      overloaded{[](const DenseKernel& d) { return d.matrix; },
                 [](const SymmetricKernel& s) { return diagonal_matrix(s.diagonal); },
                 [](const CirculantKernel& c) {
                   return circulant_from_vector(circulant_column_from_spectrum(c.spectrum));
                 }},
      k);
}

double bilinear_dense(std::span<const double> vi, const Tensor& w, std::span<const double> vj) {
  require_equal(vi.size(), w.rows(), "bilinear_dense", "dim(vi) vs rows(W)");
  require_equal(vj.size(), w.cols(), "bilinear_dense", "dim(vj) vs cols(W)");
  double total = 0.0;
  for (std::size_t r = 0; r < w.rows(); ++r) {
    double inner = 0.0;
    auto row = w.row_span(r);
    for (std::size_t c = 0; c < w.cols(); ++c) inner += row[c] * vj[c];
    total += vi[r] * inner;
  }
  return total;
}

double triple_inner_product(std::span<const double> vi, std::span<const double> w,
                            std::span<const double> vj) {
  require_equal(vi.size(), w.size(), "triple_inner_product", "dim(vi) vs dim(w)");
  require_equal(vj.size(), w.size(), "triple_inner_product", "dim(vj) vs dim(w)");
  // (vi * vj) * w rounds identically with vi and vj swapped.
  double total = 0.0;
  for (std::size_t k = 0; k < w.size(); ++k) total += vi[k] * vj[k] * w[k];
  return total;
}

Tensor diagonal_matrix(std::span<const double> w) {
  Tensor d(w.size(), w.size());
  for (std::size_t k = 0; k < w.size(); ++k) d(k, k) = w[k];
  return d;
}

Tensor circulant_from_vector(std::span<const double> w) {
  const std::size_t n = w.size();
  if (n == 0) throw ShapeError("circulant_from_vector", "empty vector");
  Tensor c(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) c(i, j) = w[(i + n - j) % n];
  return c;
}

double circulant_bilinear_naive(std::span<const double> vi, std::span<const double> w,
                                std::span<const double> vj) {
  require_equal(vi.size(), w.size(), "circulant_bilinear_naive", "dim(vi) vs dim(w)");
  require_equal(vj.size(), w.size(), "circulant_bilinear_naive", "dim(vj) vs dim(w)");
  const std::size_t n = w.size();
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double inner = 0.0;
    for (std::size_t j = 0; j < n; ++j) inner += w[(i + n - j) % n] * vj[j];
    total += vi[i] * inner;
  }
  return total;
}

double circulant_bilinear_fft(std::span<const double> vi, std::span<const Complex> spectrum,
                              std::span<const double> vj) {
  require_equal(vi.size(), spectrum.size(), "circulant_bilinear_fft", "dim(vi) vs dim(w')");
  require_equal(vj.size(), spectrum.size(), "circulant_bilinear_fft", "dim(vj) vs dim(w')");
  const double residual = conjugate_symmetry_residual(spectrum);
  if (residual > 1e-9) {
    spdlog::warn("circulant_bilinear_fft: spectrum is not conjugate-symmetric (residual {:.3g})",
                 residual);
  }
  const FftPlan plan(spectrum.size());
  ComplexVector a(vi.begin(), vi.end());
  ComplexVector b(vj.begin(), vj.end());
  plan.forward(a);
  plan.forward(b);
  Complex total{};
  for (std::size_t k = 0; k < spectrum.size(); ++k) total += std::conj(a[k]) * spectrum[k] * b[k];
  return total.real();
}

ComplexVector spectrum_from_real(std::span<const double> w) {
  ComplexVector s = dft_real(w);
  const double scale = 1.0 / static_cast<double>(w.size());
  for (auto& v : s) v *= scale;
  return s;
}

std::vector<double> circulant_column_from_spectrum(std::span<const Complex> spectrum) {
  ComplexVector w = idft(spectrum);
  std::vector<double> out(w.size());
  const double n = static_cast<double>(w.size());
  for (std::size_t k = 0; k < w.size(); ++k) out[k] = n * w[k].real();
  return out;
}

ComplexVector spectrum_init(std::size_t n, std::mt19937_64& rng, double range) {
  if (n == 0) throw ShapeError("spectrum_init", "dimension must be positive");
  std::uniform_real_distribution<double> dist(-range, range);
  std::vector<double> w(n);
  for (auto& v : w) v = dist(rng);
  return spectrum_from_real(w);
}

}  // namespace cirparse
