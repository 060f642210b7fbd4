#include "adhoc/classify/evaluate.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "adhoc/agreement/metrics.hpp"
#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"
#include "adhoc/core/stats.hpp"

namespace adhoc {

using nlohmann::json;

MeanStd mean_std(std::span<const double> values) {
  return {stats::mean(values), stats::population_std(values)};
}

EvalReport evaluate_multiseed(std::span<const SeedPredictions> runs, const Ratings& gold,
                              Level level, Level training_level) {
  if (runs.empty()) throw ValidationError("evaluation needs at least one seed");
  const auto& ids = runs.front().predictions.ids;
  if (ids.empty()) throw ValidationError("evaluation set is empty");
  for (const auto& run : runs) {
    if (run.predictions.ids != ids || run.predictions.labels.size() != ids.size()) {
      throw ValidationError("seed " + std::to_string(run.seed) +
                            " was evaluated on a different test set");
    }
  }
  std::vector<LabelSet> reference;
  reference.reserve(ids.size());
  for (const auto& id : ids) {
    auto it = gold.find(id);
    if (it == gold.end()) throw ValidationError("no gold labels for item '" + id + "'");
    reference.push_back(it->second);
  }

  EvalReport report;
  report.level = level;
  report.training_level = training_level;
  report.seeds = runs.size();
  report.items = ids.size();

  std::array<std::array<std::vector<double>, 3>, kNumTopics> topic_values;
  std::array<std::vector<double>, 7> agg;
  for (const auto& run : runs) {
    const TopicCounts counts = count_topics(run.predictions.labels, reference);
    for (int t = 0; t < kNumTopics; ++t) {
      const Prf1 m = prf1(counts[static_cast<std::size_t>(t)]);
      auto& tv = topic_values[static_cast<std::size_t>(t)];
      tv[0].push_back(m.precision);
      tv[1].push_back(m.recall);
      tv[2].push_back(m.f1);
      report.topics[static_cast<std::size_t>(t)].support = counts[static_cast<std::size_t>(t)].support();
    }
    const MacroMicro mm = macro_micro(counts);
    agg[0].push_back(mm.macro.precision);
    agg[1].push_back(mm.macro.recall);
    agg[2].push_back(mm.macro.f1);
    agg[3].push_back(mm.micro.precision);
    agg[4].push_back(mm.micro.recall);
    agg[5].push_back(mm.micro.f1);
    agg[6].push_back(mm.support_weighted_f1);
  }
  for (std::size_t t = 0; t < kNumTopics; ++t) {
    report.topics[t].precision = mean_std(topic_values[t][0]);
    report.topics[t].recall = mean_std(topic_values[t][1]);
    report.topics[t].f1 = mean_std(topic_values[t][2]);
  }
  report.macro_precision = mean_std(agg[0]);
  report.macro_recall = mean_std(agg[1]);
  report.macro_f1 = mean_std(agg[2]);
  report.micro_precision = mean_std(agg[3]);
  report.micro_recall = mean_std(agg[4]);
  report.micro_f1 = mean_std(agg[5]);
  report.support_weighted_f1 = mean_std(agg[6]);
  return report;
}

namespace {

void push_ms(csv::Row& row, const MeanStd& v) {
  row.push_back(format_double(v.mean));
  row.push_back(format_double(v.std));
}

json ms_json(const MeanStd& v) { return {{"mean", v.mean}, {"std", v.std}}; }

}  // namespace

std::string eval_report_csv(const EvalReport& r, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, {"level", "training_level", "row", "support", "precision_mean",
                       "precision_std", "recall_mean", "recall_std", "f1_mean", "f1_std"});
  const std::string level(to_string(r.level));
  const std::string training(to_string(r.training_level));
  std::size_t total_support = 0;
  for (int t = 0; t < kNumTopics; ++t) {
    const TopicEval& e = r.topics[static_cast<std::size_t>(t)];
    total_support += e.support;
    csv::Row row{level, training, taxonomy.name(t), std::to_string(e.support)};
    push_ms(row, e.precision);
    push_ms(row, e.recall);
    push_ms(row, e.f1);
    csv::write_row(out, row);
  }
  csv::Row macro{level, training, "Macro", std::to_string(total_support)};
  push_ms(macro, r.macro_precision);
  push_ms(macro, r.macro_recall);
  push_ms(macro, r.macro_f1);
  csv::write_row(out, macro);
  csv::Row micro{level, training, "Micro", std::to_string(total_support)};
  push_ms(micro, r.micro_precision);
  push_ms(micro, r.micro_recall);
  push_ms(micro, r.micro_f1);
  csv::write_row(out, micro);
  return out.str();
}

json eval_report_json(const EvalReport& r, const Taxonomy& taxonomy) {
  json topics = json::array();
  for (int t = 0; t < kNumTopics; ++t) {
    const TopicEval& e = r.topics[static_cast<std::size_t>(t)];
    topics.push_back({{"topic", taxonomy.name(t)},
                      {"support", e.support},
                      {"precision", ms_json(e.precision)},
                      {"recall", ms_json(e.recall)},
                      {"f1", ms_json(e.f1)}});
  }
  return {{"level", std::string(to_string(r.level))},
          {"training_level", std::string(to_string(r.training_level))},
          {"seeds", r.seeds},
          {"items", r.items},
          {"topics", topics},
          {"macro",
           {{"precision", ms_json(r.macro_precision)},
            {"recall", ms_json(r.macro_recall)},
            {"f1", ms_json(r.macro_f1)}}},
          {"micro",
           {{"precision", ms_json(r.micro_precision)},
            {"recall", ms_json(r.micro_recall)},
            {"f1", ms_json(r.micro_f1)}}},
          {"support_weighted_f1", ms_json(r.support_weighted_f1)}};
}

std::vector<double> default_threshold_grid() {
  std::vector<double> grid;
  for (int k = 30; k <= 80; k += 5) grid.push_back(k / 100.0);
  return grid;
}

std::vector<SweepPoint> threshold_sweep(std::span<const ScoreMatrix> per_seed, const Ratings& gold,
                                        std::span<const double> grid, const Corpus* corpus) {
  if (per_seed.empty()) throw ValidationError("threshold sweep needs at least one seed");
  std::vector<SweepPoint> points;
  for (double threshold : grid) {
    std::vector<SeedPredictions> runs;
    for (std::size_t s = 0; s < per_seed.size(); ++s) {
      Predictions p = predict(per_seed[s], threshold);
      if (corpus) p = aggregate_predictions(*corpus, p);
      runs.push_back({s, std::move(p)});
    }
    const Level level = corpus ? Level::document : Level::sentence;
    const EvalReport r = evaluate_multiseed(runs, gold, level, Level::sentence);
    points.push_back({threshold, r.macro_f1, r.micro_f1});
  }
  return points;
}

std::string threshold_sweep_csv(std::span<const SweepPoint> points) {
  std::ostringstream out;
  csv::write_row(out, {"threshold", "macro_f1_mean", "macro_f1_std", "micro_f1_mean", "micro_f1_std"});
  for (const auto& p : points) {
    csv::Row row{format_double(p.threshold)};
    push_ms(row, p.macro_f1);
    push_ms(row, p.micro_f1);
    csv::write_row(out, row);
  }
  return out.str();
}

}  // namespace adhoc
