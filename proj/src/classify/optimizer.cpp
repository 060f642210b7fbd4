#include "adhoc/classify/optimizer.hpp"

#include <cmath>

#include "adhoc/core/error.hpp"

namespace adhoc {

Adam::Adam(double beta2, double epsilon) : beta2_(beta2), epsilon_(epsilon) {
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("adam beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("adam epsilon must be positive");
}

void Adam::step(std::span<const std::span<double>> params,
                std::span<const std::span<const double>> grads, double lr, double beta1) {
  if (params.size() != grads.size()) throw ValidationError("parameter/gradient count mismatch");
  if (!(beta1 >= 0.0 && beta1 < 1.0)) throw ValidationError("beta1 must lie in [0, 1)");
  if (m_.empty()) {
    for (const auto& p : params) {
      m_.emplace_back(p.size(), 0.0);
      v_.emplace_back(p.size(), 0.0);
    }
  }
  if (m_.size() != params.size()) throw ValidationError("parameter layout changed between steps");
  ++t_;
  beta1_product_ *= beta1;
  beta2_product_ *= beta2_;
  const double c1 = 1.0 - beta1_product_;
  const double c2 = 1.0 - beta2_product_;
  for (std::size_t k = 0; k < params.size(); ++k) {
    auto p = params[k];
    auto g = grads[k];
    auto& m = m_[k];
    auto& v = v_[k];
    if (p.size() != m.size() || g.size() != m.size()) {
      throw ValidationError("parameter shape changed between steps");
    }
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
      v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
      const double m_hat = m[i] / c1;
      const double v_hat = v[i] / c2;
      p[i] -= lr * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
  }
}

OneCycleSchedule::OneCycleSchedule(std::size_t total_steps, double lr_min, double lr_max,
                                   double beta1_min, double beta1_max)
    : total_(total_steps),
      lr_min_(lr_min),
      lr_max_(lr_max),
      beta1_min_(beta1_min),
      beta1_max_(beta1_max) {
  if (total_steps == 0) throw ConfigError("one-cycle schedule needs at least one step");
  if (!(lr_min > 0.0 && lr_min < lr_max)) throw ConfigError("need 0 < lr_min < lr_max");
  if (!(beta1_min >= 0.0 && beta1_min <= beta1_max && beta1_max < 1.0)) {
    throw ConfigError("need 0 <= beta1_min <= beta1_max < 1");
  }
}

double OneCycleSchedule::phase(double step) const {
  const double half = static_cast<double>(total_) / 2.0;
  if (step <= 0.0) return 0.0;
  if (step >= static_cast<double>(total_)) return 0.0;
  return step <= half ? step / half : (static_cast<double>(total_) - step) / half;
}

// Written as a convex combination so the endpoints are hit exactly.
double OneCycleSchedule::lr(double step) const {
  const double f = phase(step);
  return (1.0 - f) * lr_min_ + f * lr_max_;
}

double OneCycleSchedule::beta1(double step) const {
  const double f = phase(step);
  return (1.0 - f) * beta1_max_ + f * beta1_min_;
}

}  // namespace adhoc
