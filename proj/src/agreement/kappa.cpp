#include "adhoc/agreement/kappa.hpp"

#include <cmath>

#include "adhoc/core/error.hpp"

namespace adhoc {

double fleiss_kappa(std::span<const int> positives, int n_raters) {
  if (n_raters < 2) throw ValidationError("Fleiss' kappa needs at least 2 raters");
  if (positives.empty()) throw ValidationError("Fleiss' kappa needs at least one item");
  const double n = n_raters;
  double agreement_sum = 0.0;
  double positive_total = 0.0;
  for (int n1 : positives) {
    if (n1 < 0 || n1 > n_raters) {
      throw ValidationError("item rating count outside [0, n_raters]");
    }
    const double p = n1;
    const double q = n - p;
    agreement_sum += (p * (p - 1.0) + q * (q - 1.0)) / (n * (n - 1.0));
    positive_total += p;
  }
  const auto items = static_cast<double>(positives.size());
  const double p_a = agreement_sum / items;
  const double share = positive_total / (items * n);
  const double p_e = share * share + (1.0 - share) * (1.0 - share);
  if (p_e == 1.0) {
    if (p_a == 1.0) return 1.0;
    throw DegenerateError("Fleiss' kappa undefined: chance agreement is 1 but observed is not");
  }
  return (p_a - p_e) / (1.0 - p_e);
}

KappaBand interpret_kappa(double kappa) {
  if (!(kappa >= -1.0 && kappa <= 1.0)) {
    throw ValidationError("kappa outside [-1, 1]");
  }
  if (kappa < 0.0) return KappaBand::less_than_chance;
  if (kappa <= 0.20) return KappaBand::slight;
  if (kappa <= 0.40) return KappaBand::fair;
  if (kappa <= 0.60) return KappaBand::moderate;
  if (kappa <= 0.80) return KappaBand::substantial;
  return KappaBand::almost_perfect;
}

std::string_view band_label(KappaBand band) {
  switch (band) {
    case KappaBand::less_than_chance: return "Less than chance agreement";
    case KappaBand::slight: return "Slight agreement";
    case KappaBand::fair: return "Fair agreement";
    case KappaBand::moderate: return "Moderate agreement";
    case KappaBand::substantial: return "Substantial agreement";
    case KappaBand::almost_perfect: return "Almost perfect agreement";
  }
  return "";
}

KappaReport kappa_report(const AnnotatorRatings& ratings, std::span<const std::string> items,
                         LabelSet excluded) {
  if (ratings.size() < 2) throw ValidationError("kappa report needs at least 2 annotators");
  if (items.empty()) throw ValidationError("kappa report needs at least one item");
  std::vector<LabelSet> labels;  // item-major, annotator-minor
  for (const auto& item : items) {
    for (const auto& [annotator, r] : ratings) {
      auto it = r.find(item);
      if (it == r.end()) {
        throw ValidationError("annotator " + annotator + " has no rating for item " + item);
      }
      labels.push_back(it->second);
    }
  }
  KappaReport report;
  report.raters = static_cast<int>(ratings.size());
  report.items = items.size();
  double sum = 0.0;
  for (TopicId t = 0; t < kNumTopics; ++t) {
    if (excluded.contains(t)) continue;
    std::vector<int> positives(items.size(), 0);
    for (std::size_t i = 0; i < items.size(); ++i) {
      for (std::size_t a = 0; a < ratings.size(); ++a) {
        if (labels[i * ratings.size() + a].contains(t)) ++positives[i];
      }
    }
    TopicKappa tk;
    tk.topic = t;
    int total = 0;
    for (int p : positives) total += p;
    tk.degenerate = total == 0 || total == report.raters * static_cast<int>(items.size());
    tk.kappa = fleiss_kappa(positives, report.raters);
    tk.band = interpret_kappa(tk.kappa);
    sum += tk.kappa;
    report.topics.push_back(tk);
  }
  if (!report.topics.empty()) {
    report.average = sum / static_cast<double>(report.topics.size());
    report.average_band = interpret_kappa(report.average);
  }
  return report;
}

}  // namespace adhoc
