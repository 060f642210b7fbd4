#include "adhoc/classify/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "adhoc/classify/optimizer.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"
#include "adhoc/core/rng.hpp"

namespace adhoc {

using nlohmann::json;

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("train.batch_size must be positive");
  if (epochs == 0) throw ConfigError("train.epochs must be positive");
  if (lr_min.has_value() != lr_max.has_value()) {
    throw ConfigError("train.lr_min and train.lr_max must be given together");
  }
  if (lr_min && !(*lr_min > 0.0 && *lr_min < *lr_max)) {
    throw ConfigError("need 0 < train.lr_min < train.lr_max");
  }
  if (!(beta1_min >= 0.0 && beta1_min <= beta1_max && beta1_max < 1.0)) {
    throw ConfigError("need 0 <= train.beta1_min <= train.beta1_max < 1");
  }
  if (!(beta2 >= 0.0 && beta2 < 1.0)) throw ConfigError("train.beta2 must lie in [0, 1)");
  if (!(epsilon > 0.0)) throw ConfigError("train.epsilon must be positive");
  if (seeds.empty()) throw ConfigError("train.seeds must not be empty");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("train.threshold must lie in (0, 1)");
  if (vocabulary_size == 0) throw ConfigError("train.vocabulary_size must be positive");
  if (!(range_lr_lo > 0.0 && range_lr_lo < range_lr_hi)) {
    throw ConfigError("need 0 < train.range_lr_lo < train.range_lr_hi");
  }
  if (range_steps < 2) throw ConfigError("train.range_steps must be at least 2");
}

json TrainConfig::to_json() const {
  json doc{{"batch_size", batch_size},   {"epochs", epochs},         {"beta1_min", beta1_min},
           {"beta1_max", beta1_max},     {"beta2", beta2},           {"epsilon", epsilon},
           {"seeds", seeds},             {"threshold", threshold},   {"vocabulary_size", vocabulary_size},
           {"range_lr_lo", range_lr_lo}, {"range_lr_hi", range_lr_hi}, {"range_steps", range_steps}};
  doc["lr_min"] = lr_min ? json(*lr_min) : json(nullptr);
  doc["lr_max"] = lr_max ? json(*lr_max) : json(nullptr);
  return doc;
}

TrainConfig TrainConfig::from_json(const json& doc) {
  TrainConfig c;
  try {
    c.batch_size = doc.value("batch_size", c.batch_size);
    c.epochs = doc.value("epochs", c.epochs);
    if (doc.contains("lr_min") && !doc["lr_min"].is_null()) c.lr_min = doc["lr_min"].get<double>();
    if (doc.contains("lr_max") && !doc["lr_max"].is_null()) c.lr_max = doc["lr_max"].get<double>();
    c.beta1_min = doc.value("beta1_min", c.beta1_min);
    c.beta1_max = doc.value("beta1_max", c.beta1_max);
    c.beta2 = doc.value("beta2", c.beta2);
    c.epsilon = doc.value("epsilon", c.epsilon);
    c.seeds = doc.value("seeds", c.seeds);
    c.threshold = doc.value("threshold", c.threshold);
    c.vocabulary_size = doc.value("vocabulary_size", c.vocabulary_size);
    c.range_lr_lo = doc.value("range_lr_lo", c.range_lr_lo);
    c.range_lr_hi = doc.value("range_lr_hi", c.range_lr_hi);
    c.range_steps = doc.value("range_steps", c.range_steps);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed train config: ") + e.what());
  }
  c.validate();
  return c;
}

namespace {

struct Batch {
  std::vector<TokenIds> tokens;
  Eigen::MatrixXd targets;
};

Batch make_batch(std::span<const Example> data, std::span<const std::size_t> order) {
  Batch b;
  std::vector<LabelSet> labels;
  b.tokens.reserve(order.size());
  for (std::size_t i : order) {
    b.tokens.push_back(data[i].tokens);
    labels.push_back(data[i].labels);
  }
  b.targets = label_matrix(labels);
  return b;
}

void update_running_stats(NnModel& m, const BatchPass& pass) {
  m.bn_running_mean = m.bn_momentum * m.bn_running_mean + (1.0 - m.bn_momentum) * pass.batch_mean;
  m.bn_running_var = m.bn_momentum * m.bn_running_var + (1.0 - m.bn_momentum) * pass.batch_var;
}

std::vector<std::size_t> epoch_order(std::size_t n, std::uint64_t seed, std::uint64_t epoch) {
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5eed0000 + epoch));
  rng.shuffle(order);
  return order;
}

double interpolate(double lo, double hi, std::size_t k, std::size_t steps) {
  if (steps <= 1) return lo;
  const double f = static_cast<double>(k) / static_cast<double>(steps - 1);
  return (1.0 - f) * lo + f * hi;
}

}  // namespace

TrainResult train(NnModel model, std::span<const Example> data, const TrainConfig& config,
                  std::uint64_t seed) {
  config.validate();
  if (!config.lr_min) throw ConfigError("learning-rate bounds unresolved; run the range test first");
  if (data.empty()) throw ValidationError("training data is empty");

  const std::size_t per_epoch = (data.size() + config.batch_size - 1) / config.batch_size;
  const std::size_t total = per_epoch * config.epochs;
  const OneCycleSchedule schedule(total, *config.lr_min, *config.lr_max, config.beta1_min,
                                  config.beta1_max);
  Adam adam(config.beta2, config.epsilon);

  TrainResult result;
  result.loss_trace.reserve(total);
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto order = epoch_order(data.size(), seed, epoch);
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      const Batch batch = make_batch(data, std::span(order).subspan(start, len));
      const BatchPass pass = forward_backward(model, batch.tokens, batch.targets);
      if (!std::isfinite(pass.loss)) {
        throw Error(ErrorKind::internal, "training diverged: non-finite loss at step " +
                                             std::to_string(step) + " (seed " +
                                             std::to_string(seed) + ")");
      }
      const double lr = schedule.lr(static_cast<double>(step));
      const double beta1 = schedule.beta1(static_cast<double>(step));
      result.loss_trace.push_back(pass.loss);
      result.lr_trace.push_back(lr);
      result.beta1_trace.push_back(beta1);
      update_running_stats(model, pass);
      auto params = parameter_views(model);
      auto grads = gradient_views(pass.grads);
      adam.step(params, grads, lr, beta1);
      if (!model.all_finite()) {
        throw Error(ErrorKind::internal, "training diverged: non-finite parameters after step " +
                                             std::to_string(step));
      }
      ++step;
    }
  }
  result.model = std::move(model);
  return result;
}

LrRangeResult lr_range_test(const std::function<double(double)>& step, double lr_lo,
                            double lr_hi, std::size_t steps, double smoothing) {
  if (!(lr_lo > 0.0 && lr_lo < lr_hi)) throw ValidationError("need 0 < lr_lo < lr_hi");
  if (steps < 2) throw ValidationError("range test needs at least 2 steps");
  if (!(smoothing >= 0.0 && smoothing < 1.0)) throw ValidationError("smoothing must lie in [0, 1)");

  LrRangeResult r;
  double avg = 0.0;
  double weight = 1.0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < steps; ++k) {
    const double lr = interpolate(lr_lo, lr_hi, k, steps);
    const double loss = step(lr);
    if (!std::isfinite(loss)) {
      r.diverged = true;
      break;
    }
    avg = smoothing * avg + (1.0 - smoothing) * loss;
    weight *= smoothing;
    const double smooth = avg / (1.0 - weight);
    if (k > 0 && smooth > 4.0 * best) {
      r.diverged = true;
      break;
    }
    best = std::min(best, smooth);
    r.lrs.push_back(lr);
    r.losses.push_back(loss);
    r.smoothed.push_back(smooth);
  }

  std::size_t steepest = 0;
  double steepest_slope = 0.0;
  for (std::size_t k = 1; k < r.smoothed.size(); ++k) {
    const double slope = (r.smoothed[k] - r.smoothed[k - 1]) / (r.lrs[k] - r.lrs[k - 1]);
    if (slope < steepest_slope) {
      steepest_slope = slope;
      steepest = k;
    }
  }
  const double scale = r.smoothed.empty() ? 1.0 : std::max(1.0, std::abs(r.smoothed.front()));
  if (steepest == 0 || -steepest_slope * (lr_hi - lr_lo) <= 1e-12 * scale) {
    r.flat = true;
    r.suggested_max = std::sqrt(lr_lo * lr_hi);
  } else {
    r.suggested_max = r.lrs[steepest];
  }
  r.suggested_min = r.suggested_max / 10.0;
  return r;
}

LrRangeResult lr_range_test(NnModel model, std::span<const Example> data,
                            const TrainConfig& config, double lr_lo, double lr_hi,
                            std::size_t steps, std::uint64_t seed) {
  if (data.empty()) throw ValidationError("range-test data is empty");
  Adam adam(config.beta2, config.epsilon);
  std::vector<std::size_t> order;
  std::size_t cursor = 0;
  std::uint64_t epoch = 0;
  auto step = [&](double lr) {
    if (cursor >= order.size()) {
      order = epoch_order(data.size(), seed, 0x7a000 + epoch++);
      cursor = 0;
    }
    const std::size_t len = std::min(config.batch_size, order.size() - cursor);
    const Batch batch = make_batch(data, std::span(order).subspan(cursor, len));
    cursor += len;
    const BatchPass pass = forward_backward(model, batch.tokens, batch.targets);
    if (!std::isfinite(pass.loss)) return pass.loss;
    update_running_stats(model, pass);
    auto params = parameter_views(model);
    auto grads = gradient_views(pass.grads);
    adam.step(params, grads, lr, config.beta1_max);
    return pass.loss;
  };
  return lr_range_test(step, lr_lo, lr_hi, steps);
}

std::vector<LabeledText> labeled_texts(const Corpus& corpus, const Ratings& sentence_labels,
                                       std::span<const std::string> announcement_ids,
                                       Level level) {
  std::vector<LabeledText> out;
  for (const auto& aid : announcement_ids) {
    const Announcement* a = corpus.find_announcement(aid);
    if (!a) throw NotFoundError("unknown announcement '" + aid + "'");
    if (level == Level::sentence) {
      for (const Sentence& s : a->sentences) {
        auto it = sentence_labels.find(s.id);
        if (it != sentence_labels.end()) out.push_back({s.id, s.text, it->second});
      }
      continue;
    }
    LabeledText doc{a->id, "", {}};
    bool any = false;
    for (const Sentence& s : a->sentences) {
      if (!doc.text.empty()) doc.text += ' ';
      doc.text += s.text;
      auto it = sentence_labels.find(s.id);
      if (it != sentence_labels.end()) {
        doc.labels |= it->second;
        any = true;
      }
    }
    if (any) out.push_back(std::move(doc));
  }
  return out;
}

DataSplit split_announcements(const Corpus& corpus, double test_fraction, std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw ConfigError("test fraction must lie in (0, 1)");
  }
  const auto& anns = corpus.announcements();
  if (anns.size() < 2) throw ValidationError("need at least 2 announcements to split");
  std::vector<std::size_t> order(anns.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(derive_seed(seed, 0x5b117));
  rng.shuffle(order);
  auto n_test = static_cast<std::size_t>(std::llround(test_fraction * static_cast<double>(anns.size())));
  n_test = std::clamp<std::size_t>(n_test, 1, anns.size() - 1);
  std::vector<bool> is_test(anns.size(), false);
  for (std::size_t i = 0; i < n_test; ++i) is_test[order[i]] = true;
  DataSplit split;
  for (std::size_t i = 0; i < anns.size(); ++i) {
    (is_test[i] ? split.test : split.train).push_back(anns[i].id);
  }
  return split;
}

std::vector<Example> encode_examples(const Vocabulary& vocab, std::span<const LabeledText> texts) {
  std::vector<Example> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back({vocab.encode(std::string_view(t.text)), t.labels});
  return out;
}

namespace {

json range_json(const LrRangeResult& r) {
  return {{"lrs", r.lrs},
          {"losses", r.losses},
          {"smoothed", r.smoothed},
          {"diverged", r.diverged},
          {"flat", r.flat},
          {"suggested_min", r.suggested_min},
          {"suggested_max", r.suggested_max}};
}

LrRangeResult range_from_json(const json& doc) {
  LrRangeResult r;
  r.lrs = doc.at("lrs").get<std::vector<double>>();
  r.losses = doc.at("losses").get<std::vector<double>>();
  r.smoothed = doc.at("smoothed").get<std::vector<double>>();
  r.diverged = doc.at("diverged").get<bool>();
  r.flat = doc.at("flat").get<bool>();
  r.suggested_min = doc.at("suggested_min").get<double>();
  r.suggested_max = doc.at("suggested_max").get<double>();
  return r;
}

}  // namespace

json Ensemble::to_json() const {
  json models_doc = json::array();
  for (const auto& m : models) {
    models_doc.push_back({{"seed", m.seed}, {"model", m.model.to_json()}, {"loss_trace", m.loss_trace}});
  }
  return {{"vocabulary", vocabulary.to_json()},
          {"config", config.to_json()},
          {"training_level", std::string(to_string(training_level))},
          {"range_test", range_test ? range_json(*range_test) : json(nullptr)},
          {"models", models_doc}};
}

Ensemble Ensemble::from_json(const json& doc) {
  Ensemble e;
  try {
    e.vocabulary = Vocabulary::from_json(doc.at("vocabulary"));
    e.config = TrainConfig::from_json(doc.at("config"));
    e.training_level = parse_level(doc.at("training_level").get<std::string>());
    if (!doc.at("range_test").is_null()) e.range_test = range_from_json(doc.at("range_test"));
    for (const auto& m : doc.at("models")) {
      e.models.push_back({m.at("seed").get<std::uint64_t>(), NnModel::from_json(m.at("model")),
                          m.at("loss_trace").get<std::vector<double>>()});
    }
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("malformed model file: ") + ex.what());
  }
  if (e.models.empty()) throw ValidationError("model file holds no trained models");
  return e;
}

Ensemble train_ensemble(std::span<const LabeledText> train_texts, const TrainConfig& config,
                        Level training_level) {
  config.validate();
  if (train_texts.empty()) throw ValidationError("training split is empty");
  std::vector<std::vector<std::string>> tokenized;
  tokenized.reserve(train_texts.size());
  for (const auto& t : train_texts) tokenized.push_back(tokenize(t.text));

  Ensemble e;
  e.vocabulary = Vocabulary::build(tokenized, config.vocabulary_size);
  if (e.vocabulary.size() == 0) throw ValidationError("training texts contain no tokens");
  e.config = config;
  e.training_level = training_level;
  const auto examples = encode_examples(e.vocabulary, train_texts);

  if (!config.lr_min) {
    const std::uint64_t seed = config.seeds.front();
    e.range_test = lr_range_test(NnModel::initialize(e.vocabulary.size(), seed), examples, config,
                                 config.range_lr_lo, config.range_lr_hi, config.range_steps, seed);
    e.config.lr_min = e.range_test->suggested_min;
    e.config.lr_max = e.range_test->suggested_max;
  }
  for (std::uint64_t seed : config.seeds) {
    TrainResult r = train(NnModel::initialize(e.vocabulary.size(), seed), examples, e.config, seed);
    e.models.push_back({seed, std::move(r.model), std::move(r.loss_trace)});
  }
  return e;
}

}  // namespace adhoc
