#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "adhoc/agreement/kappa.hpp"
#include "adhoc/agreement/metrics.hpp"
#include "adhoc/corpus/corpus.hpp"
#include "adhoc/corpus/topic.hpp"

namespace adhoc {

struct PerformanceTable {
  std::vector<std::string> annotators;
  LabelSet topics;  // topics that entered the averages
  std::map<std::string, TopicCounts> counts;
  std::map<std::string, std::size_t> items;
  // Per annotator, averaged over topics.
  std::map<std::string, Prf1> annotator_macro;
  // Per topic, averaged over annotators.
  std::array<Prf1, kNumTopics> topic_average{};
  std::array<std::size_t, kNumTopics> topic_support{};
  // Mean of the annotator rows.
  Prf1 average;
};

// Scores each annotator against the gold labels on the items both cover.
// Throws ValidationError when an annotator shares no item with the gold set.
PerformanceTable annotator_performance(const AnnotatorRatings& annotations, const Ratings& gold,
                                       LabelSet excluded = {});

// Topics with fewer than min_labeled gold-labelled items.
LabelSet low_coverage_topics(const Ratings& gold, std::size_t min_labeled = 3);

// Sentence ratings -> announcement ratings by label union.
Ratings to_document_level(const Corpus& corpus, const Ratings& sentence_ratings);
AnnotatorRatings to_document_level(const Corpus& corpus, const AnnotatorRatings& ratings);

// Annotator-by-metric table (precision, recall, f1, num) with an Avg column.
std::string annotator_table_csv(const PerformanceTable& table);
// Topic rows with support and annotator-averaged precision, recall, f1.
std::string topic_table_csv(const PerformanceTable& table, const Taxonomy& taxonomy);
std::string kappa_table_csv(const KappaReport& report, const Taxonomy& taxonomy);

}  // namespace adhoc
