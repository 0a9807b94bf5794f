#include "cirparse/adam.hpp"

#include <cmath>

namespace cirparse {

void Adam::step(std::span<Parameter* const> params) {
  if (moments_.empty()) {
    moments_.reserve(params.size());
    for (const Parameter* p : params) {
      moments_.push_back({Tensor(p->value().rows(), p->value().cols()),
                          Tensor(p->value().rows(), p->value().cols())});
    }
  }
  if (moments_.size() != params.size()) {
    throw ShapeError("adam_step", "parameter list changed between steps");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Parameter& p = *params[i];
    if (p.grad().shape() != p.value().shape() || moments_[i].first.shape() != p.value().shape()) {
      throw ShapeError("adam_step", "state shape mismatch for parameter '" + p.name() + "'");
    }
    if (!p.grad().all_finite()) {
      throw NumericError("adam_step: non-finite gradient in parameter '" + p.name() + "'");
    }
  }

  ++steps_;
  const double t = static_cast<double>(steps_);
  const double correction1 = 1.0 - std::pow(config_.beta1, t);
  const double correction2 = 1.0 - std::pow(config_.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto value = params[i]->value().span();
    auto grad = params[i]->grad().span();
    auto m = moments_[i].first.span();
    auto v = moments_[i].second.span();
    for (std::size_t k = 0; k < value.size(); ++k) {
      m[k] = config_.beta1 * m[k] + (1.0 - config_.beta1) * grad[k];
      v[k] = config_.beta2 * v[k] + (1.0 - config_.beta2) * grad[k] * grad[k];
      const double m_hat = m[k] / correction1;
      const double v_hat = v[k] / correction2;
      value[k] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
}

}  // namespace cirparse
