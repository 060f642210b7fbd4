#include "adhoc/core/stats.hpp"

#include <algorithm>
#include <cmath>

#include "adhoc/core/error.hpp"

namespace adhoc::stats {

double mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double sum = 0.0;
  for (double v : values) sum += v;
  return sum / static_cast<double>(values.size());
}

double population_std(std::span<const double> values) {
  if (values.empty()) return 0.0;
  const double m = mean(values);
  double ss = 0.0;
  for (double v : values) ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(values.size()));
}

double nearest_rank(std::span<const double> sorted_values, double p) {
  if (sorted_values.empty()) throw ValidationError("percentile of an empty sample");
  if (!(p >= 0.0 && p <= 100.0)) throw ValidationError("percentile outside [0, 100]");
  const auto n = static_cast<double>(sorted_values.size());
  auto rank = static_cast<std::size_t>(std::ceil(p * n / 100.0));
  rank = std::clamp<std::size_t>(rank, 1, sorted_values.size());
  return sorted_values[rank - 1];
}

Summary summarize(std::vector<double> values) {
  Summary s;
  s.count = values.size();
  if (values.empty()) return s;
  std::sort(values.begin(), values.end());
  s.mean = mean(values);
  s.std = population_std(values);
  s.min = values.front();
  s.max = values.back();
  s.p25 = nearest_rank(values, 25.0);
  s.p50 = nearest_rank(values, 50.0);
  s.p75 = nearest_rank(values, 75.0);
  return s;
}

}  // namespace adhoc::stats
