#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adhoc/agreement/kappa.hpp"
#include "adhoc/classify/nn_model.hpp"
#include "adhoc/classify/tokenizer.hpp"
#include "adhoc/corpus/corpus.hpp"

namespace adhoc {

struct TrainConfig {
  std::size_t batch_size = 6;
  std::size_t epochs = 4;
  // Unset bounds are derived by the learning-rate range test.
  std::optional<double> lr_min;
  std::optional<double> lr_max;
  double beta1_min = 0.85;
  double beta1_max = 0.95;
  double beta2 = 0.999;
  double epsilon = 1e-7;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8};
  double threshold = 0.6;
  std::size_t vocabulary_size = kDefaultVocabularySize;
  double range_lr_lo = 1e-5;
  double range_lr_hi = 1.0;
  std::size_t range_steps = 100;

  // Throws ConfigError.
  void validate() const;
  nlohmann::json to_json() const;
  static TrainConfig from_json(const nlohmann::json& doc);
};

struct Example {
  TokenIds tokens;
  LabelSet labels;
};

struct TrainResult {
  NnModel model;
  std::vector<double> loss_trace;  // batch loss before each update
  std::vector<double> lr_trace;
  std::vector<double> beta1_trace;
};

// Mini-batch Adam on mean binary cross-entropy under the one-cycle policy.
// Each epoch reshuffles with a stream derived from `seed`. Both lr bounds
// must be set. Throws Error(internal) on a non-finite loss.
TrainResult train(NnModel model, std::span<const Example> data, const TrainConfig& config,
                  std::uint64_t seed);

struct LrRangeResult {
  std::vector<double> lrs;
  std::vector<double> losses;
  std::vector<double> smoothed;
  bool diverged = false;  // curve stops at the first diverging step
  bool flat = false;      // no descent found; geometric-midpoint fallback
  double suggested_max = 0.0;
  double suggested_min = 0.0;
};

// lr rises linearly from lr_lo to lr_hi over `steps` calls of `step(lr)`,
// each returning the loss observed at that step. The suggested maximum is
// the lr where the smoothed loss falls fastest; the minimum is a tenth of it.
// A step whose loss is non-finite or above 4x the best smoothed loss
// ends the curve.
LrRangeResult lr_range_test(const std::function<double(double)>& step, double lr_lo,
                            double lr_hi, std::size_t steps, double smoothing = 0.8);

// Range test of `model` on `data` with Adam at constant beta1 = beta1_max.
LrRangeResult lr_range_test(NnModel model, std::span<const Example> data,
                            const TrainConfig& config, double lr_lo, double lr_hi,
                            std::size_t steps, std::uint64_t seed);

struct LabeledText {
  std::string id;
  std::string text;
  LabelSet labels;
};

// Sentence level: every labelled sentence of the given announcements.
// Document level: joined sentence text with union labels, for announcements
// with at least one labelled sentence.
std::vector<LabeledText> labeled_texts(const Corpus& corpus, const Ratings& sentence_labels,
                                       std::span<const std::string> announcement_ids,
                                       Level level);

struct DataSplit {
  std::vector<std::string> train;
  std::vector<std::string> test;
};

// Announcement-level split so document aggregation never straddles the two.
DataSplit split_announcements(const Corpus& corpus, double test_fraction, std::uint64_t seed);

std::vector<Example> encode_examples(const Vocabulary& vocab, std::span<const LabeledText> texts);

struct SeedModel {
  std::uint64_t seed = 0;
  NnModel model;
  std::vector<double> loss_trace;
};

struct Ensemble {
  Vocabulary vocabulary;
  TrainConfig config;  // with resolved lr bounds
  Level training_level = Level::sentence;
  std::optional<LrRangeResult> range_test;
  std::vector<SeedModel> models;

  nlohmann::json to_json() const;
  static Ensemble from_json(const nlohmann::json& doc);
};

// Builds the vocabulary from `train_texts`, resolves missing lr bounds with
// a range test under the first seed, then trains one model per seed.
Ensemble train_ensemble(std::span<const LabeledText> train_texts, const TrainConfig& config,
                        Level training_level);

}  // namespace adhoc
