#pragma once

#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "adhoc/corpus/topic.hpp"

namespace adhoc {

// Fleiss' kappa for one binary category. positives[i] is the number of the
// n_raters raters that assigned the topic to item i.
//
// P_i = [n1(n1-1) + n0(n0-1)] / [n(n-1)],  p_a = mean P_i,
// p_e = q^2 + (1-q)^2 with q the overall positive share,
// kappa = (p_a - p_e) / (1 - p_e).
//
// When p_e = 1 every rating fell in one category: returns 1 if p_a = 1 and
// throws DegenerateError otherwise.
double fleiss_kappa(std::span<const int> positives, int n_raters);

// Landis-Koch interpretation bands.
enum class KappaBand {
  less_than_chance,
  slight,
  fair,
  moderate,
  substantial,
  almost_perfect,
};

// < 0 less than chance; [0, 0.20] slight; (0.20, 0.40] fair;
// (0.40, 0.60] moderate; (0.60, 0.80] substantial; (0.80, 1] almost perfect.
// Throws ValidationError outside [-1, 1].
KappaBand interpret_kappa(double kappa);
std::string_view band_label(KappaBand band);

struct TopicKappa {
  TopicId topic = 0;
  double kappa = 0.0;
  // All ratings in one category; kappa was fixed to 1.
  bool degenerate = false;
  KappaBand band = KappaBand::less_than_chance;
};

struct KappaReport {
  std::vector<TopicKappa> topics;
  double average = 0.0;
  KappaBand average_band = KappaBand::less_than_chance;
  int raters = 0;
  std::size_t items = 0;
};

using Ratings = std::map<std::string, LabelSet>;
using AnnotatorRatings = std::map<std::string, Ratings>;

// Per-topic Fleiss' kappa over the given items, which every annotator must
// have rated (ValidationError otherwise). Topics in `excluded` are skipped.
KappaReport kappa_report(const AnnotatorRatings& ratings, std::span<const std::string> items,
                         LabelSet excluded = {});

}  // namespace adhoc
