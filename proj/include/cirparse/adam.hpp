#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cirparse/autodiff.hpp"

namespace cirparse {

struct AdamConfig {
  double learning_rate = 2e-3;
  double beta1 = 0.9;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

/// Bias-corrected Adam. Moment buffers are bound to parameters by position,
/// so every call to step() must pass the same parameter list in the same
/// order.
class Adam {
 public:
  explicit Adam(AdamConfig config = {}) : config_(config) {}

  /// Applies one update from each parameter's accumulated gradient.
  /// Throws NumericError naming the first parameter whose gradient holds a
  /// NaN or Inf; in that case no parameter is modified.
  void step(std::span<Parameter* const> params);

  std::size_t steps() const { return steps_; }
  const AdamConfig& config() const { return config_; }

 private:
  struct Moments {
    Tensor first;
    Tensor second;
  };

  AdamConfig config_;
  std::size_t steps_ = 0;
  std::vector<Moments> moments_;
};

}  // namespace cirparse
