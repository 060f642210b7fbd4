#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adhoc/agreement/kappa.hpp"
#include "adhoc/classify/predict.hpp"

namespace adhoc {

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population std across seeds
};

MeanStd mean_std(std::span<const double> values);

struct SeedPredictions {
  std::uint64_t seed = 0;
  Predictions predictions;
};

struct TopicEval {
  MeanStd precision;
  MeanStd recall;
  MeanStd f1;
  std::size_t support = 0;
};

struct EvalReport {
  Level level = Level::sentence;
  Level training_level = Level::sentence;
  std::size_t seeds = 0;
  std::size_t items = 0;
  std::array<TopicEval, kNumTopics> topics{};
  MeanStd macro_precision, macro_recall, macro_f1;
  MeanStd micro_precision, micro_recall, micro_f1;
  MeanStd support_weighted_f1;
};

// Every run must cover the same item ids in the same order, and every id
// must have a gold label set. Throws ValidationError otherwise.
EvalReport evaluate_multiseed(std::span<const SeedPredictions> runs, const Ratings& gold,
                              Level level, Level training_level);

// Topic rows then Macro and Micro rows; columns support and mean/std of P, R, F1.
std::string eval_report_csv(const EvalReport& report, const Taxonomy& taxonomy);
nlohmann::json eval_report_json(const EvalReport& report, const Taxonomy& taxonomy);

// {0.30, 0.35, ..., 0.80}
std::vector<double> default_threshold_grid();

struct SweepPoint {
  double threshold = 0.0;
  MeanStd macro_f1;
  MeanStd micro_f1;
};

// Per-seed score matrices thresholded at each grid point. With `corpus`
// given, sentence predictions are union-aggregated to documents first.
std::vector<SweepPoint> threshold_sweep(std::span<const ScoreMatrix> per_seed, const Ratings& gold,
                                        std::span<const double> grid,
                                        const Corpus* corpus = nullptr);
std::string threshold_sweep_csv(std::span<const SweepPoint> points);

}  // namespace adhoc
