#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace cirparse {

using Complex = std::complex<double>;
using ComplexVector = std::vector<Complex>;

// Plain complex product; std::complex's operator* takes a slow path that
// handles infinities, which we never feed it.
inline Complex cmul(Complex a, Complex b) {
  return {a.real() * b.real() - a.imag() * b.imag(), a.real() * b.imag() + a.imag() * b.real()};
}

/// Precomputed transform of a fixed length. Power-of-two lengths use an
/// iterative radix-2 transform; every other length goes through Bluestein's
/// chirp-z reformulation on a padded power-of-two transform.
///
/// Convention: forward X[j] = sum_k x[k] exp(-2 pi i jk / n), inverse
/// includes the 1/n factor. Plans are immutable after construction and may
/// be shared between threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n);

  std::size_t size() const { return n_; }

  void forward(std::span<Complex> data) const;
  void inverse(std::span<Complex> data) const;

 private:
  void radix2(std::span<Complex> data, bool inverse) const;
  void bluestein(std::span<Complex> data, bool inverse) const;

  std::size_t n_;
  bool pow2_;
  // radix-2 tables (length n_ when pow2_, else length of the padded size)
  std::vector<std::size_t> bitrev_;
  std::vector<Complex> twiddles_;
  // Bluestein tables
  std::size_t padded_ = 0;
  std::vector<Complex> chirp_;
  std::vector<Complex> chirp_filter_fft_;
};

bool is_power_of_two(std::size_t n);

ComplexVector dft(std::span<const Complex> x);
ComplexVector idft(std::span<const Complex> x);
ComplexVector dft_real(std::span<const double> x);

/// max_k |x[k] - conj(x[(n-k) mod n])|
double conjugate_symmetry_residual(std::span<const Complex> x);
bool is_conjugate_symmetric(std::span<const Complex> x, double tol = 1e-9);

ComplexVector from_interleaved(std::span<const double> pairs);
std::vector<double> to_interleaved(std::span<const Complex> x);

}  // namespace cirparse
