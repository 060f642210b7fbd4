#include "adhoc/agreement/performance.hpp"

#include <sstream>

#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

PerformanceTable annotator_performance(const AnnotatorRatings& annotations, const Ratings& gold,
                                       LabelSet excluded) {
  if (annotations.empty()) throw ValidationError("no annotators to score");
  PerformanceTable table;
  table.topics = LabelSet::from_bits(LabelSet::kAllBits & ~excluded.bits());
  const std::vector<TopicId> topics = table.topics.topics();
  if (topics.empty()) throw ValidationError("every topic is excluded");

  for (const auto& [id, labels] : gold) {
    for (TopicId t : labels.topics()) ++table.topic_support[static_cast<std::size_t>(t)];
  }

  std::array<Prf1, kNumTopics> topic_sum{};
  for (const auto& [annotator, ratings] : annotations) {
    std::vector<LabelSet> predicted, reference;
    for (const auto& [item, labels] : ratings) {
      auto g = gold.find(item);
      if (g == gold.end()) continue;
      predicted.push_back(labels);
      reference.push_back(g->second);
    }
    if (predicted.empty()) {
      throw ValidationError("annotator " + annotator + " shares no item with the gold standard");
    }
    table.annotators.push_back(annotator);
    table.items[annotator] = predicted.size();
    const TopicCounts counts = count_topics(predicted, reference);
    table.counts[annotator] = counts;

    std::vector<BinaryCounts> included;
    for (TopicId t : topics) {
      const auto& c = counts[static_cast<std::size_t>(t)];
      included.push_back(c);
      const Prf1 m = prf1(c);
      auto& s = topic_sum[static_cast<std::size_t>(t)];
      s.precision += m.precision;
      s.recall += m.recall;
      s.f1 += m.f1;
    }
    const Prf1 macro = macro_micro(included).macro;
    table.annotator_macro[annotator] = macro;
    table.average.precision += macro.precision;
    table.average.recall += macro.recall;
    table.average.f1 += macro.f1;
  }

  const auto n = static_cast<double>(table.annotators.size());
  table.average.precision /= n;
  table.average.recall /= n;
  table.average.f1 /= n;
  for (TopicId t : topics) {
    auto& avg = table.topic_average[static_cast<std::size_t>(t)];
    const auto& s = topic_sum[static_cast<std::size_t>(t)];
    avg = {s.precision / n, s.recall / n, s.f1 / n};
  }
  return table;
}

LabelSet low_coverage_topics(const Ratings& gold, std::size_t min_labeled) {
  std::array<std::size_t, kNumTopics> counts{};
  for (const auto& [id, labels] : gold) {
    for (TopicId t : labels.topics()) ++counts[static_cast<std::size_t>(t)];
  }
  LabelSet low;
  for (TopicId t = 0; t < kNumTopics; ++t) {
    if (counts[static_cast<std::size_t>(t)] < min_labeled) low.insert(t);
  }
  return low;
}

Ratings to_document_level(const Corpus& corpus, const Ratings& sentence_ratings) {
  Ratings docs;
  for (const auto& [sentence_id, labels] : sentence_ratings) {
    docs[corpus.announcement_of(sentence_id).id] |= labels;
  }
  return docs;
}

AnnotatorRatings to_document_level(const Corpus& corpus, const AnnotatorRatings& ratings) {
  AnnotatorRatings out;
  for (const auto& [annotator, r] : ratings) out[annotator] = to_document_level(corpus, r);
  return out;
}

namespace {

std::string pct(double v) { return format_fixed(100.0 * v, 1); }

}  // namespace

std::string annotator_table_csv(const PerformanceTable& table) {
  std::ostringstream out;
  csv::Row header{"metric"};
  for (const auto& a : table.annotators) header.push_back(a);
  header.push_back("Avg.");
  csv::write_row(out, header);

  auto metric_row = [&](const char* name, double Prf1::*field) {
    csv::Row row{name};
    for (const auto& a : table.annotators) row.push_back(pct(table.annotator_macro.at(a).*field));
    row.push_back(pct(table.average.*field));
    csv::write_row(out, row);
  };
  metric_row("precision", &Prf1::precision);
  metric_row("recall", &Prf1::recall);
  metric_row("f1", &Prf1::f1);
  csv::Row num{"num"};
  for (const auto& a : table.annotators) num.push_back(std::to_string(table.items.at(a)));
  num.push_back("");
  csv::write_row(out, num);
  return out.str();
}

std::string topic_table_csv(const PerformanceTable& table, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, {"topic", "support", "precision", "recall", "f1"});
  for (TopicId t : table.topics.topics()) {
    const auto& m = table.topic_average[static_cast<std::size_t>(t)];
    csv::write_row(out, {taxonomy.name(t),
                         std::to_string(table.topic_support[static_cast<std::size_t>(t)]),
                         pct(m.precision), pct(m.recall), pct(m.f1)});
  }
  return out.str();
}

std::string kappa_table_csv(const KappaReport& report, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, {"topic", "kappa", "band", "degenerate"});
  for (const auto& tk : report.topics) {
    csv::write_row(out, {taxonomy.name(tk.topic), pct(tk.kappa), std::string(band_label(tk.band)),
                         tk.degenerate ? "1" : "0"});
  }
  csv::write_row(out, {"Average", pct(report.average),
                       std::string(band_label(report.average_band)), ""});
  return out.str();
}

}  // namespace adhoc
