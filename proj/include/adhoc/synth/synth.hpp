#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "adhoc/annotate/types.hpp"
#include "adhoc/core/date.hpp"
#include "adhoc/eventstudy/eventstudy.hpp"

namespace adhoc::synth {

// Keyword tokens that belong to exactly one topic's keyword list.
std::vector<std::vector<std::string>> distinctive_terms(const Taxonomy& taxonomy);

struct CorpusOptions {
  std::size_t announcements = 400;
  std::size_t min_sentences = 3;
  std::size_t max_sentences = 7;
  double topic_probability = 0.75;
  double second_topic_probability = 0.15;
  std::size_t filler_words = 6;
  // Planted lexicon size per topic; 0 plants every distinctive term.
  std::size_t terms_per_topic = 4;
  std::size_t firms = 40;
  Date first_date = Date::from_ymd(2016, 1, 4);
  std::int32_t span_days = 1400;
  std::uint64_t seed = 7;
};

struct Corpus {
  std::vector<nlohmann::json> records;  // ingest line format
  Ratings sentence_labels;               // keyed by "<announcement>#<ordinal>"

  std::string jsonl() const;
};

// Keyword-planted announcements: a labelled sentence carries terms that
// only its topics use, an unlabelled one carries filler only. Every other
// announcement is given as raw text, the rest pre-segmented.
Corpus make_corpus(const Taxonomy& taxonomy, const CorpusOptions& options);

struct AnnotatorNoise {
  double miss = 0.1;       // drop a gold label
  double spurious = 0.01;  // add a label per topic
};

// One row per (item, annotator), labels perturbed from `gold`.
AnnotationMatrix make_annotations(const Ratings& gold, std::span<const std::string> items,
                                  std::span<const std::string> annotators,
                                  const AnnotatorNoise& noise, std::uint64_t seed);

// Monday-to-Friday trading days.
std::vector<Date> weekday_calendar(Date first, std::size_t days);
bool is_weekday(Date d);

using EffectFn = std::function<double(LabelSet)>;

inline constexpr double kLargeScaleProjectEffect = 0.0270;
inline constexpr double kBankruptcyFilingEffect = -0.0875;
inline constexpr double kBankruptcyPairEffect = 0.1285;

// Large Scale Project and Bankruptcy Filing main effects plus the filing x
// proceedings interaction; 0 for everything else.
double reference_effect(LabelSet labels);

struct MarketOptions {
  Date first_day = Date::from_ymd(2014, 6, 2);
  std::size_t trading_days = 1800;
  double market_mean = 0.0003;
  double market_sd = 0.01;
  double riskfree = 0.00005;
  double alpha1_mean = 1.0;
  double alpha1_sd = 0.3;
  double noise_sd = 0.015;
  // Firms listed only this many trading days before their first event.
  std::size_t late_listing_days = 40;
  std::size_t late_listing_firms = 1;
  std::uint64_t seed = 11;
};

// Market-model returns with abnormal returns effect(labels) planted on each
// event's trading day. Firms are all firm ids that appear in `events`.
ReturnPanel make_market(std::span<const EventSpec> events, const MarketOptions& options,
                        const EffectFn& effect = reference_effect);

}  // namespace adhoc::synth
