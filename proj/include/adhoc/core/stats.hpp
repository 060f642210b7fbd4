#pragma once

#include <span>
#include <vector>

namespace adhoc::stats {

double mean(std::span<const double> values);
// Population standard deviation (divides by n).
double population_std(std::span<const double> values);

// Nearest-rank percentile: the value at 1-based rank ceil(p/100 * n) of the
// sorted sample, with rank clamped to [1, n]. p in [0, 100].
double nearest_rank(std::span<const double> sorted_values, double p);

struct Summary {
  std::size_t count = 0;
  double mean = 0.0;
  double std = 0.0;
  double min = 0.0;
  double p25 = 0.0;
  double p50 = 0.0;
  double p75 = 0.0;
  double max = 0.0;
};

// Empty input yields an all-zero summary with count 0.
Summary summarize(std::vector<double> values);

}  // namespace adhoc::stats
