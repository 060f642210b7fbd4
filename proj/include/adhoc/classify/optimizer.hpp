#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace adhoc {

// Adam with a per-step first-moment decay. The first-moment bias correction
// uses the running product of the decays actually applied, which reduces to
// 1 - beta1^t when beta1 is constant.
class Adam {
public:
  explicit Adam(double beta2 = 0.999, double epsilon = 1e-7);

  // Lazily sized on the first call; later calls must pass the same shapes.
  void step(std::span<const std::span<double>> params,
            std::span<const std::span<const double>> grads, double lr, double beta1);

  std::size_t steps_taken() const noexcept { return t_; }

private:
  double beta2_;
  double epsilon_;
  std::size_t t_ = 0;
  double beta1_product_ = 1.0;
  double beta2_product_ = 1.0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

// Triangular one-cycle policy over `total_steps`: the learning rate rises
// linearly from lr_min at step 0 to lr_max at total_steps / 2 and falls back
// to lr_min at total_steps. beta1 moves the opposite way between
// beta1_max and beta1_min.
class OneCycleSchedule {
public:
  OneCycleSchedule(std::size_t total_steps, double lr_min, double lr_max,
                   double beta1_min = 0.85, double beta1_max = 0.95);

  double lr(double step) const;
  double beta1(double step) const;
  std::size_t total_steps() const noexcept { return total_; }

private:
  // 0 at the ends, 1 at the midpoint.
  double phase(double step) const;

  std::size_t total_;
  double lr_min_;
  double lr_max_;
  double beta1_min_;
  double beta1_max_;
};

}  // namespace adhoc
