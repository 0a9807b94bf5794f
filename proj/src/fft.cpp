#include "cirparse/fft.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include "cirparse/tensor.hpp"

namespace cirparse {

bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

namespace {

std::size_t next_power_of_two(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void build_radix2_tables(std::size_t n, std::vector<std::size_t>& bitrev,
                         std::vector<Complex>& twiddles) {
  bitrev.assign(n, 0);
  std::size_t bits = 0;
  while ((std::size_t{1} << bits) < n) ++bits;
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t r = 0;
    for (std::size_t b = 0; b < bits; ++b) {
      if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
    }
    bitrev[i] = r;
  }
  twiddles.resize(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = -2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
    twiddles[k] = {std::cos(angle), std::sin(angle)};
  }
}

}  // namespace

FftPlan::FftPlan(std::size_t n) : n_(n), pow2_(is_power_of_two(n)) {
  if (n == 0) throw ShapeError("fft", "length must be positive");
  if (pow2_) {
    build_radix2_tables(n_, bitrev_, twiddles_);
    return;
  }
  padded_ = next_power_of_two(2 * n_ - 1);
  build_radix2_tables(padded_, bitrev_, twiddles_);

  // chirp[k] = exp(-pi i k^2 / n); k^2 reduced mod 2n keeps the angle small.
  chirp_.resize(n_);
  for (std::size_t k = 0; k < n_; ++k) {
    const std::size_t k2 = (k * k) % (2 * n_);
    const double angle = -std::numbers::pi * static_cast<double>(k2) / static_cast<double>(n_);
    chirp_[k] = {std::cos(angle), std::sin(angle)};
  }
  std::vector<Complex> filter(padded_, Complex{});
  filter[0] = std::conj(chirp_[0]);
  for (std::size_t k = 1; k < n_; ++k) {
    filter[k] = std::conj(chirp_[k]);
    filter[padded_ - k] = std::conj(chirp_[k]);
  }
  radix2(filter, false);
  chirp_filter_fft_ = std::move(filter);
}

void FftPlan::forward(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("fft", "plan/data length mismatch");
  if (pow2_) {
    radix2(data, false);
  } else {
    bluestein(data, false);
  }
}

void FftPlan::inverse(std::span<Complex> data) const {
  if (data.size() != n_) throw ShapeError("ifft", "plan/data length mismatch");
  if (pow2_) {
    radix2(data, true);
  } else {
    bluestein(data, true);
  }
  const double scale = 1.0 / static_cast<double>(n_);
  for (auto& v : data) v *= scale;
}

void FftPlan::radix2(std::span<Complex> data, bool inverse) const {
  const std::size_t n = data.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (i < bitrev_[i]) std::swap(data[i], data[bitrev_[i]]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        Complex w = twiddles_[k * stride];
        if (inverse) w = std::conj(w);
        const Complex even = data[start + k];
        const Complex odd = cmul(data[start + k + half], w);
        data[start + k] = even + odd;
        data[start + k + half] = even - odd;
      }
    }
  }
}

void FftPlan::bluestein(std::span<Complex> data, bool inverse) const {
  // The inverse transform is the conjugate of the forward transform of the
  // conjugated input (scaling is applied by the caller).
  std::vector<Complex> work(padded_, Complex{});
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex x = inverse ? std::conj(data[k]) : data[k];
    work[k] = cmul(x, chirp_[k]);
  }
  radix2(work, false);
  for (std::size_t k = 0; k < padded_; ++k) work[k] = cmul(work[k], chirp_filter_fft_[k]);
  radix2(work, true);
  const double scale = 1.0 / static_cast<double>(padded_);
  for (std::size_t k = 0; k < n_; ++k) {
    const Complex y = cmul(work[k] * scale, chirp_[k]);
    data[k] = inverse ? std::conj(y) : y;
  }
}

ComplexVector dft(std::span<const Complex> x) {
  ComplexVector out(x.begin(), x.end());
  FftPlan(out.size()).forward(out);
  return out;
}

ComplexVector idft(std::span<const Complex> x) {
  ComplexVector out(x.begin(), x.end());
  FftPlan(out.size()).inverse(out);
  return out;
}

ComplexVector dft_real(std::span<const double> x) {
  ComplexVector out(x.begin(), x.end());
  FftPlan(out.size()).forward(out);
  return out;
}

double conjugate_symmetry_residual(std::span<const Complex> x) {
  const std::size_t n = x.size();
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k) {
    worst = std::max(worst, std::abs(x[k] - std::conj(x[(n - k) % n])));
  }
  return worst;
}

bool is_conjugate_symmetric(std::span<const Complex> x, double tol) {
  return conjugate_symmetry_residual(x) <= tol;
}

ComplexVector from_interleaved(std::span<const double> pairs) {
  if (pairs.size() % 2 != 0) throw ShapeError("from_interleaved", "odd number of reals");
  ComplexVector out(pairs.size() / 2);
  for (std::size_t k = 0; k < out.size(); ++k) out[k] = {pairs[2 * k], pairs[2 * k + 1]};
  return out;
}

std::vector<double> to_interleaved(std::span<const Complex> x) {
  std::vector<double> out(2 * x.size());
  for (std::size_t k = 0; k < x.size(); ++k) {
    out[2 * k] = x[k].real();
    out[2 * k + 1] = x[k].imag();
  }
  return out;
}

}  // namespace cirparse
