#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adhoc/agreement/performance.hpp"
#include "adhoc/classify/evaluate.hpp"
#include "adhoc/classify/nn_model.hpp"
#include "adhoc/classify/optimizer.hpp"
#include "adhoc/classify/predict.hpp"
#include "adhoc/classify/trainer.hpp"
#include "adhoc/core/rng.hpp"
#include "adhoc/synth/synth.hpp"
#include "checks.hpp"

namespace acceptance {

using namespace adhoc;

namespace {

struct GradientCheck {
  std::vector<double> errors;  // per parameter group
  std::size_t coordinates = 0;
  std::size_t kinks = 0;
};

std::vector<int> argmaxes(const NnModel& m, std::span<const TokenIds> batch) {
  std::vector<int> all, one;
  for (const auto& t : batch) {
    max_pool(m.embedding, t, &one);
    all.insert(all.end(), one.begin(), one.end());
  }
  return all;
}

// Relative error per parameter group between central differences and the
// analytic gradient over every coordinate. Embedding coordinates whose
// perturbation changes a max-pool winner sit on a kink and are skipped.
GradientCheck gradient_errors(NnModel& m, std::span<const TokenIds> batch, const Eigen::MatrixXd& y) {
  const BatchPass pass = forward_backward(m, batch, y);
  const auto grads = gradient_views(pass.grads);
  auto params = parameter_views(m);
  const auto winners = argmaxes(m, batch);
  const double h = 1e-6;
  GradientCheck out;
  for (std::size_t g = 0; g < params.size(); ++g) {
    double diff_sq = 0, fd_sq = 0, an_sq = 0;
    for (std::size_t k = 0; k < params[g].size(); ++k) {
      const double old = params[g][k];
      params[g][k] = old + h;
      const double up = batch_loss(m, batch, y);
      bool kink = g == 0 && argmaxes(m, batch) != winners;
      params[g][k] = old - h;
      const double down = batch_loss(m, batch, y);
      kink = kink || (g == 0 && argmaxes(m, batch) != winners);
      params[g][k] = old;
      if (kink) {
        ++out.kinks;
        continue;
      }
      ++out.coordinates;
      const double fd = (up - down) / (2 * h);
      diff_sq += (fd - grads[g][k]) * (fd - grads[g][k]);
      fd_sq += fd * fd;
      an_sq += grads[g][k] * grads[g][k];
    }
    out.errors.push_back(std::sqrt(diff_sq) / std::max({std::sqrt(fd_sq), std::sqrt(an_sq), 1e-12}));
  }
  return out;
}

Outcome nn_training() {
  const char* groups[] = {"embedding", "bn_gamma", "bn_beta", "w1", "b1", "w2", "b2"};
  NnModel m = NnModel::initialize(30, 41);
  Rng rng(42);
  for (int d = 0; d < kEmbeddingDim; ++d) {
    m.bn_gamma(d) = rng.uniform(0.5, 1.5);
    m.bn_beta(d) = rng.uniform(-0.2, 0.2);
  }
  for (int o = 0; o < kNumTopics; ++o) m.b2(o) = rng.uniform(-0.5, 0.5);
  std::vector<TokenIds> batch;
  std::vector<LabelSet> labels;
  for (int i = 0; i < 6; ++i) {
    TokenIds t;
    const std::size_t len = 2 + rng.below(5);
    for (std::size_t k = 0; k < len; ++k) t.push_back(static_cast<int>(rng.below(30)));
    batch.push_back(t);
    labels.push_back(LabelSet::from_bits(static_cast<std::uint32_t>(rng.below(1u << 20))));
  }
  const auto check = gradient_errors(m, batch, label_matrix(labels));
  const auto& errors = check.errors;
  bool grads_ok = true;
  std::ostringstream d;
  d << "FD over " << check.coordinates << " coordinates (" << check.kinks << " max-pool kinks skipped), rel err";
  for (std::size_t g = 0; g < errors.size(); ++g) {
    grads_ok = grads_ok && errors[g] < 1e-4;
    d << " " << groups[g] << "=" << errors[g];
  }

  bool schedule_ok = true;
  for (std::size_t total : {2u, 10u, 101u, 1000u}) {
    const OneCycleSchedule s(total, 1e-4, 3e-3, 0.85, 0.95);
    const double mid = static_cast<double>(total) / 2.0;
    const double end = static_cast<double>(total);
    schedule_ok = schedule_ok && s.lr(0) == 1e-4 && s.lr(mid) == 3e-3 && s.lr(end) == 1e-4 &&
                  s.beta1(0) == 0.95 && s.beta1(mid) == 0.85 && s.beta1(end) == 0.95;
  }
  d << "; schedule endpoints/midpoint " << (schedule_ok ? "exact" : "NOT exact");

  std::vector<LabeledText> texts;
  for (int i = 0; i < 60; ++i) {
    const int t = i % kNumTopics;
    texts.push_back({"s" + std::to_string(i), "alpha beta topic" + std::to_string(t) + " gamma" + std::to_string(i % 7),
                     LabelSet::of({t})});
  }
  TrainConfig c;
  c.seeds = {3, 4};
  c.epochs = 2;
  c.range_steps = 30;
  const auto a = train_ensemble(texts, c, Level::sentence);
  const auto b = train_ensemble(texts, c, Level::sentence);
  const bool repro = a.to_json().dump() == b.to_json().dump() && a.models[0].loss_trace == b.models[0].loss_trace;
  d << "; two fixed-seed ensemble runs " << (repro ? "bit-identical" : "DIFFER");
  return {"NN training", grads_ok && schedule_ok && repro, d.str()};
}

struct Split {
  adhoc::Corpus corpus;
  Ratings sentence_gold;
  DataSplit split;
};

// Mean over seeds of test-split evaluation, optionally aggregated to documents.
EvalReport evaluate_ensemble(const Ensemble& e, const Split& s, std::span<const LabeledText> test, Level level,
                             bool aggregate, const Ratings& gold) {
  std::vector<SeedPredictions> runs;
  for (const auto& sm : e.models) {
    Predictions p = predict(score_texts(sm.model, e.vocabulary, test), e.config.threshold);
    if (aggregate) p = aggregate_predictions(s.corpus, p);
    runs.push_back({sm.seed, std::move(p)});
  }
  return evaluate_multiseed(runs, gold, level, e.training_level);
}

Outcome synthetic_classification() {
  Stopwatch clock;
  synth::CorpusOptions o;
  o.announcements = 400;
  o.min_sentences = 5;
  o.max_sentences = 5;
  o.seed = 404;
  const auto generated = synth::make_corpus(Taxonomy::builtin(), o);
  std::istringstream lines(generated.jsonl());
  Split s{ingest_corpus(lines, Taxonomy::builtin()).corpus, generated.sentence_labels, {}};
  s.split = split_announcements(s.corpus, 0.2, 7);

  TrainConfig config;  // threshold 0.6, 8 seeds, range-test learning rates
  const auto train_s = labeled_texts(s.corpus, s.sentence_gold, s.split.train, Level::sentence);
  const auto test_s = labeled_texts(s.corpus, s.sentence_gold, s.split.test, Level::sentence);
  const auto train_d = labeled_texts(s.corpus, s.sentence_gold, s.split.train, Level::document);
  const auto test_d = labeled_texts(s.corpus, s.sentence_gold, s.split.test, Level::document);
  const Ratings doc_gold = to_document_level(s.corpus, s.sentence_gold);

  const Ensemble sentence_model = train_ensemble(train_s, config, Level::sentence);
  const Ensemble document_model = train_ensemble(train_d, config, Level::document);
  const auto sentence_eval = evaluate_ensemble(sentence_model, s, test_s, Level::sentence, false, s.sentence_gold);
  const auto aggregated = evaluate_ensemble(sentence_model, s, test_s, Level::document, true, doc_gold);
  const auto doc_trained = evaluate_ensemble(document_model, s, test_d, Level::document, false, doc_gold);
  const double secs = clock.seconds();

  const double f1 = sentence_eval.macro_f1.mean;
  const bool ok = f1 >= 0.90 && secs < 300.0;
  std::ostringstream d;
  d << s.corpus.sentence_count() << " sentences, " << test_s.size() << " test; sentence macro F1 " << f1 << " +/- "
    << sentence_eval.macro_f1.std << " at 0.6 (floor 0.90); diagnostic: sentence-trained/document-aggregated "
    << aggregated.macro_f1.mean << " vs document-trained " << doc_trained.macro_f1.mean << " ("
    << (aggregated.macro_f1.mean >= doc_trained.macro_f1.mean ? ">=" : "<") << ", reported only; range-test lr_max "
    << *sentence_model.config.lr_max << " sentence, " << *document_model.config.lr_max << " document); " << secs
    << " s (limit 300 s)";
  return {"synthetic classification", ok, d.str()};
}

}  // namespace

void classify_checks(Outcomes& out) {
  out.push_back(nn_training());
  out.push_back(synthetic_classification());
}

}  // namespace acceptance
