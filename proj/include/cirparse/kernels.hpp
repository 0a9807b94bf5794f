#pragma once

#include <random>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "cirparse/fft.hpp"
#include "cirparse/tensor.hpp"

namespace cirparse {

/// Parameterization of the bilinear weight matrix.
enum class Variant { Dense, Symmetric, Circulant };

std::string_view to_string(Variant v);
/// Accepts "dense", "symmetric" or "circulant"; throws std::invalid_argument.
Variant parse_variant(std::string_view name);

struct DenseKernel {
  Tensor matrix;  // n x n
};
struct SymmetricKernel {
  std::vector<double> diagonal;  // eigenvalues in the implicit basis
};
struct CirculantKernel {
  ComplexVector spectrum;  // (1/n) * DFT of the circulant's first column
};

/// The three interchangeable weight parameterizations of a bilinear form
/// v_i^T W v_j.
using KernelWeights = std::variant<DenseKernel, SymmetricKernel, CirculantKernel>;

Variant variant_of(const KernelWeights& k);
std::size_t dimension(const KernelWeights& k);
/// Evaluates v_i^T W v_j with the kernel's native algorithm.
double apply(const KernelWeights& k, std::span<const double> vi, std::span<const double> vj);
/// Materializes the equivalent dense n x n matrix.
Tensor to_dense(const KernelWeights& k);

/// v_i^T W v_j.
double bilinear_dense(std::span<const double> vi, const Tensor& w, std::span<const double> vj);

/// <a, b, c> = sum_k a_k b_k c_k; equals v_i^T diag(w) v_j.
double triple_inner_product(std::span<const double> vi, std::span<const double> w,
                            std::span<const double> vj);

Tensor diagonal_matrix(std::span<const double> w);

/// C(w) with C[i][j] = w[(i - j) mod n]: first column w, each further column
/// rotated down by one.
Tensor circulant_from_vector(std::span<const double> w);

/// v_i^T C(w) v_j by an explicit O(n^2) sweep. Verification path.
double circulant_bilinear_naive(std::span<const double> vi, std::span<const double> w,
                                std::span<const double> vj);

/// v_i^T C(w) v_j in O(n log n) as Re(sum_k conj(F v_i)[k] w'[k] (F v_j)[k])
/// where w' = (1/n) F w is the stored spectrum. A spectrum that is not
/// conjugate-symmetric is reported through the logger; the real part is
/// taken regardless.
double circulant_bilinear_fft(std::span<const double> vi, std::span<const Complex> spectrum,
                              std::span<const double> vj);

/// (1/n) * DFT(w).
ComplexVector spectrum_from_real(std::span<const double> w);
/// Real parts of n * IDFT(spectrum): the first column of the circulant.
std::vector<double> circulant_column_from_spectrum(std::span<const Complex> spectrum);

/// Draws w uniformly from [-range, range]^n and returns its scaled DFT.
ComplexVector spectrum_init(std::size_t n, std::mt19937_64& rng, double range);

}  // namespace cirparse
