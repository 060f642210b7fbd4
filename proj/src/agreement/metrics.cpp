#include "adhoc/agreement/metrics.hpp"

#include "adhoc/core/error.hpp"

namespace adhoc {
namespace {

double ratio(std::size_t num, std::size_t den) {
  return den == 0 ? 0.0 : static_cast<double>(num) / static_cast<double>(den);
}

double harmonic(double p, double r) { return p + r == 0.0 ? 0.0 : 2.0 * p * r / (p + r); }

}  // namespace

Prf1 prf1(const BinaryCounts& c) {
  Prf1 m;
  m.precision = ratio(c.tp, c.tp + c.fp);
  m.recall = ratio(c.tp, c.tp + c.fn);
  m.f1 = harmonic(m.precision, m.recall);
  return m;
}

MacroMicro macro_micro(std::span<const BinaryCounts> per_topic) {
  if (per_topic.empty()) throw ValidationError("macro/micro averaging needs at least one topic");
  MacroMicro out;
  BinaryCounts pooled;
  double weighted = 0.0;
  std::size_t support = 0;
  for (const BinaryCounts& c : per_topic) {
    const Prf1 m = prf1(c);
    out.macro.precision += m.precision;
    out.macro.recall += m.recall;
    out.macro.f1 += m.f1;
    weighted += m.f1 * static_cast<double>(c.support());
    support += c.support();
    pooled += c;
  }
  const auto n = static_cast<double>(per_topic.size());
  out.macro.precision /= n;
  out.macro.recall /= n;
  out.macro.f1 /= n;
  out.micro = prf1(pooled);
  out.support_weighted_f1 = support ? weighted / static_cast<double>(support) : 0.0;
  return out;
}

TopicCounts count_topics(std::span<const LabelSet> predicted, std::span<const LabelSet> reference) {
  if (predicted.size() != reference.size()) {
    throw ValidationError("predicted and reference label lists differ in length");
  }
  TopicCounts counts{};
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const std::uint32_t p = predicted[i].bits();
    const std::uint32_t r = reference[i].bits();
    for (int t = 0; t < kNumTopics; ++t) {
      const bool pt = (p >> t) & 1u;
      const bool rt = (r >> t) & 1u;
      BinaryCounts& c = counts[static_cast<std::size_t>(t)];
      if (pt && rt) ++c.tp;
      else if (pt) ++c.fp;
      else if (rt) ++c.fn;
      else ++c.tn;
    }
  }
  return counts;
}

}  // namespace adhoc
