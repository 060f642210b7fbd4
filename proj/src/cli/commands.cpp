#include "adhoc/cli/commands.hpp"

#include <algorithm>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "adhoc/agreement/performance.hpp"
#include "adhoc/annotate/allocation.hpp"
#include "adhoc/annotate/service.hpp"
#include "adhoc/classify/evaluate.hpp"
#include "adhoc/cli/manifest.hpp"
#include "adhoc/core/csv.hpp"
#include "adhoc/core/digest.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"
#include "adhoc/core/rng.hpp"
#include "adhoc/panel/panel.hpp"
#include "adhoc/prelabel/bm25.hpp"
#include "adhoc/synth/synth.hpp"

// Last: the resolver headers it pulls in define `_res`, which clashes with Eigen.
#include <httplib.h>

namespace adhoc::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr std::uint64_t kDefaultSeed = 7;

struct Context {
  const GlobalOptions& options;
  RunConfig& config;
  Manifest manifest;

  std::uint64_t seed() {
    if (options.seed) {
      config.set("seed", *options.seed);
    }
    const auto s = static_cast<std::uint64_t>(config.integer("seed", static_cast<std::int64_t>(kDefaultSeed)));
    manifest.set_seed(s);
    return s;
  }

  Level level(const std::string& key) {
    if (options.level) config.set(key, std::string(to_string(*options.level)));
    return parse_level(config.text(key, "sentence"));
  }

  fs::path out(const std::string& name) const { return options.out_dir / name; }
};

// Artifact from an earlier stage in the output directory.
fs::path upstream(Context& ctx, const std::string& name, const std::string& producer) {
  const fs::path p = ctx.out(name);
  if (!fs::exists(p)) {
    throw MissingInputError("missing " + p.string() + "; run `adhoc " + producer +
                            "` with the same --out-dir first");
  }
  ctx.manifest.input(p);
  return p;
}

fs::path required_path(Context& ctx, const std::string& key) {
  const auto p = ctx.config.path(key);
  if (!p) throw MissingInputError("config key " + key + " is required by this subcommand");
  if (!fs::exists(*p)) throw MissingInputError(key + " points to missing file " + p->string());
  ctx.manifest.input(*p);
  return *p;
}

std::optional<fs::path> optional_path(Context& ctx, const std::string& key) {
  const auto p = ctx.config.path(key);
  if (!p) return std::nullopt;
  if (!fs::exists(*p)) throw MissingInputError(key + " points to missing file " + p->string());
  ctx.manifest.input(*p);
  return p;
}

Taxonomy load_taxonomy(Context& ctx) {
  const auto p = optional_path(ctx, "paths.taxonomy");
  return p ? Taxonomy::load(*p) : Taxonomy::builtin();
}

Corpus load_out_corpus(Context& ctx) {
  std::ifstream in(upstream(ctx, "corpus.jsonl", "ingest"));
  return load_corpus(in);
}

// Label files share the score-matrix layout with 0/1 cells.
Ratings read_label_file(const fs::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  const auto r = ingest_external_scores(in, taxonomy);
  if (!r.rejections.empty()) {
    const auto& first = r.rejections.front();
    throw ValidationError(path.string() + " line " + std::to_string(first.line) + ": " + first.reason);
  }
  Ratings out;
  const Predictions p = predict(r.matrix, 0.5);
  for (std::size_t i = 0; i < p.ids.size(); ++i) out[p.ids[i]] = p.labels[i];
  return out;
}

AnnotationMatrix read_matrix(const fs::path& path, const Taxonomy& taxonomy) {
  std::ifstream in(path);
  return read_annotation_matrix(in, taxonomy, Level::sentence);
}

std::vector<Annotator> read_annotators(const fs::path& path) {
  const json doc = json::parse(read_file(path), nullptr, false);
  if (doc.is_discarded()) throw ConfigError(path.string() + " is not valid JSON");
  return annotators_from_json(doc);
}

// --- ingest -------------------------------------------------------------

void cmd_ingest(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const fs::path source = required_path(ctx, "paths.corpus");
  const auto labels_path = optional_path(ctx, "paths.labels");
  IngestOptions opts;
  const std::string min_date = ctx.config.text("ingest.min_date", "");
  const std::string max_date = ctx.config.text("ingest.max_date", "");
  if (!min_date.empty()) opts.min_date = Date::parse(min_date);
  if (!max_date.empty()) opts.max_date = Date::parse(max_date);
  const json abbreviations = ctx.config.value("ingest.abbreviations", nullptr);
  if (!abbreviations.is_null()) {
    if (!abbreviations.is_array()) throw ConfigError("ingest.abbreviations must be a list of strings");
    opts.segmenter = Segmenter(abbreviations.get<std::set<std::string>>());
  }

  std::ifstream in(source);
  const IngestResult result = ingest_corpus(in, taxonomy, opts);
  ctx.manifest.output("corpus.jsonl", serialize_corpus(result.corpus));

  std::ostringstream rej;
  csv::write_row(rej, {"line", "reason"});
  for (const auto& r : result.rejections) csv::write_row(rej, {std::to_string(r.line), r.reason});
  ctx.manifest.output("ingest_rejections.csv", rej.str());
  std::ostringstream dup;
  csv::write_row(dup, {"dropped_id", "kept_id"});
  for (const auto& [dropped, kept] : result.duplicates) csv::write_row(dup, {dropped, kept});
  ctx.manifest.output("ingest_duplicates.csv", dup.str());

  SentenceLabels labels;
  if (labels_path) {
    for (const auto& [id, l] : read_label_file(*labels_path, taxonomy)) {
      if (result.corpus.find_sentence(id)) labels[id] = l;
    }
  }
  const CorpusStats stats = corpus_stats(result.corpus, labels);
  ctx.manifest.output("corpus_stats.csv", corpus_stats_csv(stats));
  ctx.manifest.output("corpus_stats.json", corpus_stats_json(stats));
  if (labels_path) {
    const auto docs = document_labels(result.corpus, labels);
    const PairCounts pairs = cooccurrence_counts(docs);
    std::vector<std::pair<TopicPair, std::size_t>> sorted(pairs.begin(), pairs.end());
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const auto& a, const auto& b) { return a.second > b.second; });
    std::ostringstream co;
    csv::write_row(co, {"topic_a", "topic_b", "documents"});
    for (const auto& [pair, count] : sorted) {
      csv::write_row(co, {taxonomy.name(pair.first), taxonomy.name(pair.second), std::to_string(count)});
    }
    ctx.manifest.output("cooccurrence.csv", co.str());
  }
  ctx.manifest.note("announcements", result.corpus.announcements().size());
  ctx.manifest.note("sentences", result.corpus.sentence_count());
  ctx.manifest.note("rejections", result.rejections.size());
  ctx.manifest.note("duplicates", result.duplicates.size());
}

// --- prelabel -----------------------------------------------------------

void cmd_prelabel(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const Corpus corpus = load_out_corpus(ctx);
  Bm25Params params;
  params.k1 = ctx.config.number("prelabel.k1", params.k1);
  params.b = ctx.config.number("prelabel.b", params.b);
  params.score_threshold = ctx.config.number("prelabel.score_threshold", params.score_threshold);
  params.validate();
  const auto labels = prelabel_corpus(corpus, taxonomy, params);
  ctx.manifest.output("prelabels.csv", prelabels_csv(labels));

  const auto per_ann = announcement_prelabels(corpus, labels);
  std::array<std::size_t, kNumTopics> sentences{};
  std::array<std::size_t, kNumTopics> announcements{};
  for (const auto& l : labels) {
    if (l.topic) ++sentences[static_cast<std::size_t>(*l.topic)];
  }
  for (const auto& [id, set] : per_ann) {
    for (TopicId t : set.topics()) ++announcements[static_cast<std::size_t>(t)];
  }
  std::ostringstream out;
  csv::write_row(out, {"topic", "sentences", "announcements"});
  for (int t = 0; t < kNumTopics; ++t) {
    csv::write_row(out, {taxonomy.name(t), std::to_string(sentences[static_cast<std::size_t>(t)]),
                         std::to_string(announcements[static_cast<std::size_t>(t)])});
  }
  ctx.manifest.output("prelabel_summary.csv", out.str());
}

// --- allocate -----------------------------------------------------------

AnnouncementPrelabels load_announcement_prelabels(Context& ctx, const Corpus& corpus) {
  std::ifstream in(upstream(ctx, "prelabels.csv", "prelabel"));
  const auto labels = read_prelabels_csv(in);
  return announcement_prelabels(corpus, labels);
}

void cmd_allocate(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const std::uint64_t seed = ctx.seed();
  const Corpus corpus = load_out_corpus(ctx);
  const auto prelabels = load_announcement_prelabels(ctx, corpus);
  std::vector<Annotator> annotators;
  for (auto& a : read_annotators(required_path(ctx, "paths.annotators"))) {
    if (!a.is_instructor) annotators.push_back(std::move(a));
  }
  const auto phase = static_cast<int>(ctx.config.integer("allocate.phase", 2));
  if (phase < 1 || phase > 3) throw ConfigError("allocate.phase must be 1, 2 or 3");
  ctx.manifest.set_stem("allocate_phase" + std::to_string(phase));
  const auto shared_per_topic = ctx.config.integer("allocate.shared_per_topic", 3);
  if (shared_per_topic < 0) throw ConfigError("allocate.shared_per_topic must be non-negative");

  if (phase == 1) {
    PhasePlan plan;
    plan.phase = 1;
    plan.shared_announcements =
        draw_shared_set(prelabels, static_cast<std::size_t>(shared_per_topic), derive_seed(seed, 1));
    for (const auto& a : annotators) plan.unique_assignments[a.id];
    plan.validate();
    ctx.manifest.output("plan_phase1.json", plan.to_json().dump(2) + "\n");
    return;
  }

  const GoldStandard gold = gold_from_matrix(read_matrix(required_path(ctx, "paths.gold"), taxonomy));
  AllocationRequest request;
  request.phase = phase;
  request.per_topic_sentence_target = static_cast<int>(ctx.config.integer("allocate.per_topic_target", 50));
  request.seed = derive_seed(seed, static_cast<std::uint64_t>(phase));
  for (const auto& [sid, labels] : gold.labels) request.exclude.insert(corpus.announcement_of(sid).id);
  Ratings covered = gold.labels;
  if (phase == 3) {
    const auto min_sentences = ctx.config.integer("allocate.min_topic_sentences", 10);
    const fs::path prior = ctx.out("plan_phase2.json");
    if (fs::exists(prior)) {
      ctx.manifest.input(prior);
      const PhasePlan p2 = PhasePlan::from_json(json::parse(read_file(prior)));
      for (const auto& id : p2.shared_announcements) request.exclude.insert(id);
      for (const auto& [a, ids] : p2.unique_assignments) request.exclude.insert(ids.begin(), ids.end());
    }
    request.topics = undercovered_topics(covered, static_cast<std::size_t>(min_sentences));
  }
  request.shared_announcements = draw_shared_set(prelabels, static_cast<std::size_t>(shared_per_topic),
                                                 derive_seed(request.seed, 2), request.exclude,
                                                 request.topics);
  const PhasePlan plan = allocate_balanced(corpus, prelabels, gold, annotators, request, taxonomy);
  ctx.manifest.output("plan_phase" + std::to_string(phase) + ".json", plan.to_json().dump(2) + "\n");
}

// --- serve --------------------------------------------------------------

void cmd_serve(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const Corpus corpus = load_out_corpus(ctx);
  auto annotators = read_annotators(required_path(ctx, "paths.annotators"));
  const auto gold_path = optional_path(ctx, "paths.gold");
  const std::string host = ctx.config.text("serve.host", "127.0.0.1");
  const auto port = static_cast<int>(ctx.config.integer("serve.port", 8080));
  ServiceOptions service_options;
  service_options.show_prelabels = ctx.config.flag("serve.show_prelabels", false);
  service_options.min_topic_coverage =
      static_cast<std::size_t>(ctx.config.integer("agreement.min_gold_sentences", 3));
  const std::string journal = ctx.config.text("serve.journal", (ctx.options.out_dir / "journal.jsonl").string());
  if (fs::exists(ctx.out("prelabels.csv"))) {
    std::ifstream in(upstream(ctx, "prelabels.csv", "prelabel"));
    for (const auto& l : read_prelabels_csv(in)) {
      if (l.topic) service_options.prelabels[l.sentence_id] = *l.topic;
    }
  }
  if (gold_path) {
    // Phase-1 gold scores every phase and drives the low-coverage filter.
    const GoldStandard gold = gold_from_matrix(read_matrix(*gold_path, taxonomy));
    for (int phase = 1; phase <= 3; ++phase) service_options.gold[phase] = gold;
  }

  AnnotationStore store(corpus, std::move(annotators));
  bool any_plan = false;
  for (int phase = 1; phase <= 3; ++phase) {
    const std::string name = "plan_phase" + std::to_string(phase) + ".json";
    if (!fs::exists(ctx.out(name))) continue;
    store.open_phase(PhasePlan::from_json(json::parse(read_file(upstream(ctx, name, "allocate")))));
    any_plan = true;
  }
  if (!any_plan) throw MissingInputError("no phase plan found; run `adhoc allocate` first");
  store.attach_journal(journal);
  ctx.manifest.write(ctx.config);

  AnnotationService service(store, taxonomy, service_options);
  auto server = make_http_server(service);
  std::cerr << "serving annotation API on http://" << host << ":" << port << "\n";
  if (!server->listen(host, port)) throw Error(ErrorKind::internal, "cannot listen on " + host + ":" + std::to_string(port));
}

// --- agreement ----------------------------------------------------------

void cmd_agreement(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const Level level = ctx.level("agreement.level");
  ctx.manifest.set_stem("agreement_" + std::string(to_string(level)));
  const AnnotationMatrix annotations = read_matrix(required_path(ctx, "paths.annotations"), taxonomy);
  const GoldStandard gold_std = gold_from_matrix(read_matrix(required_path(ctx, "paths.gold"), taxonomy));
  const bool filter = ctx.config.flag("agreement.exclude_low_coverage", false);
  const auto min_gold = static_cast<std::size_t>(ctx.config.integer("agreement.min_gold_sentences", 3));

  AnnotatorRatings ratings = to_ratings(annotations);
  for (const auto& author : gold_std.provenance) ratings.erase(author);
  Ratings gold = gold_std.labels;
  const LabelSet excluded = filter ? low_coverage_topics(gold, min_gold) : LabelSet{};
  if (level == Level::document) {
    const Corpus corpus = load_out_corpus(ctx);
    ratings = to_document_level(corpus, ratings);
    gold = to_document_level(corpus, gold);
  }
  if (ratings.empty()) throw ValidationError("annotation matrix holds no annotator besides the gold authors");

  const PerformanceTable table = annotator_performance(ratings, gold, excluded);
  std::vector<std::string> items;
  for (const auto& [item, _] : ratings.begin()->second) {
    const bool everyone = std::all_of(ratings.begin(), ratings.end(),
                                      [&](const auto& r) { return r.second.count(item) > 0; });
    if (everyone) items.push_back(item);
  }
  const std::string prefix = "agreement_" + std::string(to_string(level));
  ctx.manifest.output(prefix + "_annotators.csv", annotator_table_csv(table));
  ctx.manifest.output(prefix + "_topics.csv", topic_table_csv(table, taxonomy));
  json summary{{"level", std::string(to_string(level))},
               {"annotators", table.annotators},
               {"average", {{"precision", table.average.precision},
                            {"recall", table.average.recall},
                            {"f1", table.average.f1}}},
               {"excluded_topics", excluded.bits()}};
  if (ratings.size() >= 2 && !items.empty()) {
    const KappaReport kappa = kappa_report(ratings, items, excluded);
    ctx.manifest.output(prefix + "_kappa.csv", kappa_table_csv(kappa, taxonomy));
    summary["kappa_average"] = kappa.average;
    summary["kappa_band"] = std::string(band_label(kappa.average_band));
  }
  ctx.manifest.output(prefix + ".json", summary.dump(2) + "\n");
}

// --- train --------------------------------------------------------------

void cmd_train(Context& ctx) {
  const std::uint64_t seed = ctx.seed();
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const Corpus corpus = load_out_corpus(ctx);
  const Ratings labels = read_label_file(required_path(ctx, "paths.labels"), taxonomy);
  const Level level = ctx.level("train.level");
  const double test_fraction = ctx.config.number("train.test_fraction", 0.2);
  if (ctx.options.threshold) ctx.config.set("train.threshold", *ctx.options.threshold);
  json block = ctx.config.block("train");
  block.erase("level");
  block.erase("test_fraction");
  const TrainConfig config = TrainConfig::from_json(block);

  const DataSplit split = split_announcements(corpus, test_fraction, seed);
  const auto train_texts = labeled_texts(corpus, labels, split.train, level);
  const Ensemble ensemble = train_ensemble(train_texts, config, level);

  ctx.manifest.output("model.json", ensemble.to_json().dump() + "\n");
  const json split_doc{{"seed", seed}, {"test_fraction", test_fraction}, {"train", split.train}, {"test", split.test}};
  ctx.manifest.output("split.json", split_doc.dump(2) + "\n");
  std::ostringstream trace;
  csv::write_row(trace, {"seed", "step", "loss"});
  for (const auto& m : ensemble.models) {
    for (std::size_t s = 0; s < m.loss_trace.size(); ++s) {
      csv::write_row(trace, {std::to_string(m.seed), std::to_string(s), format_double(m.loss_trace[s])});
    }
  }
  ctx.manifest.output("loss_trace.csv", trace.str());
  if (ensemble.range_test) {
    std::ostringstream range;
    csv::write_row(range, {"lr", "loss", "smoothed"});
    const auto& r = *ensemble.range_test;
    for (std::size_t i = 0; i < r.lrs.size(); ++i) {
      csv::write_row(range, {format_double(r.lrs[i]), format_double(r.losses[i]), format_double(r.smoothed[i])});
    }
    ctx.manifest.output("lr_range.csv", range.str());
    ctx.manifest.note("range_test", {{"flat", r.flat}, {"diverged", r.diverged}});
  }
  ctx.manifest.note("lr_min", *ensemble.config.lr_min);
  ctx.manifest.note("lr_max", *ensemble.config.lr_max);
  ctx.manifest.note("vocabulary", ensemble.vocabulary.size());
  ctx.manifest.note("training_items", train_texts.size());
}

// --- evaluate -----------------------------------------------------------

ScoreMatrix mean_scores(std::span<const ScoreMatrix> per_seed) {
  ScoreMatrix m = per_seed.front();
  for (std::size_t s = 1; s < per_seed.size(); ++s) m.scores += per_seed[s].scores;
  m.scores /= static_cast<double>(per_seed.size());
  return m;
}

void write_evaluation(Context& ctx, const Taxonomy& taxonomy, std::span<const ScoreMatrix> scores,
                      const Ratings& gold, Level level, Level training_level, double threshold,
                      const Corpus* aggregate, bool sweep) {
  std::vector<SeedPredictions> runs;
  for (std::size_t s = 0; s < scores.size(); ++s) {
    Predictions p = predict(scores[s], threshold);
    if (aggregate) p = aggregate_predictions(*aggregate, p);
    runs.push_back({s, std::move(p)});
  }
  const EvalReport report = evaluate_multiseed(runs, gold, level, training_level);
  const std::string name = "eval_" + std::string(to_string(level));
  ctx.manifest.output(name + ".csv", eval_report_csv(report, taxonomy));
  json doc = eval_report_json(report, taxonomy);
  doc["threshold"] = threshold;
  ctx.manifest.output(name + ".json", doc.dump(2) + "\n");
  ctx.manifest.note("macro_f1", report.macro_f1.mean);
  ctx.manifest.note("micro_f1", report.micro_f1.mean);
  if (sweep) {
    const auto grid = default_threshold_grid();
    const auto points = threshold_sweep(scores, gold, grid, aggregate);
    ctx.manifest.output("threshold_sweep_" + std::string(to_string(level)) + ".csv", threshold_sweep_csv(points));
  }
}

void cmd_evaluate(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const Ratings sentence_gold = read_label_file(required_path(ctx, "paths.labels"), taxonomy);
  const Level level = ctx.level("evaluate.level");
  ctx.manifest.set_stem("evaluate_" + std::string(to_string(level)));
  const json external = ctx.config.value("evaluate.scores", nullptr);
  const bool sweep = ctx.config.flag("evaluate.sweep", true);
  std::optional<double> threshold = ctx.options.threshold;
  if (!threshold && ctx.config.find("evaluate.threshold")) threshold = ctx.config.number("evaluate.threshold", 0.6);

  if (!external.is_null()) {
    if (!external.is_array() || external.empty()) {
      throw ConfigError("evaluate.scores must be a non-empty list of score files");
    }
    std::optional<Corpus> corpus;
    if (fs::exists(ctx.out("corpus.jsonl"))) corpus = load_out_corpus(ctx);
    std::vector<ScoreMatrix> scores;
    std::ostringstream rejections;
    csv::write_row(rejections, {"file", "line", "item_id", "reason"});
    for (const auto& entry : external) {
      const fs::path p = ctx.config.resolve(entry.get<std::string>());
      if (!fs::exists(p)) throw MissingInputError("score file " + p.string() + " not found");
      ctx.manifest.input(p);
      std::ifstream in(p);
      std::function<bool(std::string_view)> known;
      if (corpus) {
        known = [&](std::string_view id) {
          return corpus->find_sentence(id) != nullptr || corpus->find_announcement(id) != nullptr;
        };
      }
      auto r = ingest_external_scores(in, taxonomy, known);
      for (const auto& rej : r.rejections) {
        csv::write_row(rejections, {p.filename().string(), std::to_string(rej.line), rej.item_id, rej.reason});
      }
      scores.push_back(std::move(r.matrix));
    }
    ctx.manifest.output("evaluate_rejections.csv", rejections.str());
    const bool sentence_ids = !scores.front().ids.empty() && corpus &&
                              corpus->find_sentence(scores.front().ids.front()) != nullptr;
    Ratings gold = sentence_gold;
    const Corpus* aggregate = nullptr;
    if (level == Level::document) {
      if (!corpus) throw MissingInputError("document-level evaluation needs corpus.jsonl; run `adhoc ingest` first");
      gold = to_document_level(*corpus, sentence_gold);
      if (sentence_ids) aggregate = &*corpus;
    }
    write_evaluation(ctx, taxonomy, scores, gold, level, level, threshold.value_or(0.6), aggregate, sweep);
    return;
  }

  const Corpus corpus = load_out_corpus(ctx);
  const Ensemble ensemble = Ensemble::from_json(json::parse(read_file(upstream(ctx, "model.json", "train"))));
  const json split = json::parse(read_file(upstream(ctx, "split.json", "train")));
  const auto test_ids = split.at("test").get<std::vector<std::string>>();
  const double t = threshold.value_or(ensemble.config.threshold);
  if (ensemble.training_level == Level::document && level == Level::sentence) {
    throw ValidationError("a document-trained model can only be evaluated with --level document");
  }
  const auto test_texts = labeled_texts(corpus, sentence_gold, test_ids, ensemble.training_level);
  std::vector<ScoreMatrix> scores;
  for (const auto& m : ensemble.models) scores.push_back(score_texts(m.model, ensemble.vocabulary, test_texts));
  for (std::size_t s = 0; s < scores.size(); ++s) {
    ctx.manifest.output("scores/test_seed" + std::to_string(ensemble.models[s].seed) + ".csv",
                        score_matrix_csv(scores[s], taxonomy));
  }
  const Ratings gold = level == Level::document ? to_document_level(corpus, sentence_gold) : sentence_gold;
  const bool aggregate = level == Level::document && ensemble.training_level == Level::sentence;
  write_evaluation(ctx, taxonomy, scores, gold, level, ensemble.training_level, t,
                   aggregate ? &corpus : nullptr, sweep);

  // Seed-averaged document predictions for every announcement feed the event study.
  std::vector<std::string> all_ids;
  for (const auto& a : corpus.announcements()) all_ids.push_back(a.id);
  LabelSet none;
  Ratings unlabeled;
  for (const Sentence* s : corpus.sentences()) unlabeled[s->id] = none;
  const auto all_texts = labeled_texts(corpus, unlabeled, all_ids, ensemble.training_level);
  std::vector<ScoreMatrix> all_scores;
  for (const auto& m : ensemble.models) all_scores.push_back(score_texts(m.model, ensemble.vocabulary, all_texts));
  Predictions preds = predict(mean_scores(all_scores), t);
  if (ensemble.training_level == Level::sentence) preds = aggregate_predictions(corpus, preds);
  ctx.manifest.output("document_predictions.csv", predictions_csv(preds, taxonomy));
}

// --- eventstudy ---------------------------------------------------------

void cmd_eventstudy(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  std::ifstream firm_in(required_path(ctx, "paths.firm_returns"));
  std::ifstream market_in(required_path(ctx, "paths.market"));
  std::ifstream rf_in(required_path(ctx, "paths.riskfree"));
  const ReturnPanel panel = load_return_panel(firm_in, market_in, rf_in);
  EventStudyOptions options;
  options.window = static_cast<std::size_t>(ctx.config.integer("eventstudy.window", 250));
  options.min_observations = static_cast<std::size_t>(ctx.config.integer("eventstudy.min_observations", 73));
  options.joint = ctx.config.flag("eventstudy.joint", true);
  const double level = ctx.config.number("eventstudy.significance_level", 0.10);

  std::vector<EventSpec> events;
  if (const auto p = optional_path(ctx, "paths.events")) {
    std::ifstream in(*p);
    events = read_events_csv(in);
  } else {
    const Corpus corpus = load_out_corpus(ctx);
    std::ifstream in(upstream(ctx, "document_predictions.csv", "evaluate"));
    const auto preds = ingest_external_scores(in, taxonomy);
    if (!preds.rejections.empty()) throw ValidationError("document_predictions.csv has malformed rows");
    const Predictions labels = predict(preds.matrix, 0.5);
    for (std::size_t i = 0; i < labels.ids.size(); ++i) {
      const Announcement* a = corpus.find_announcement(labels.ids[i]);
      if (!a) throw ValidationError("prediction for unknown announcement " + labels.ids[i]);
      if (!labels.labels[i].empty()) events.push_back({a->firm_id, a->published_at, labels.labels[i]});
    }
  }
  ctx.manifest.output("events.csv", events_csv(events));
  const EventStudyResult result = run_event_study(panel, events, options);
  ctx.manifest.output("event_fits.csv", event_fits_csv(result.fits));
  ctx.manifest.output("event_exclusions.csv", exclusions_csv(result.exclusions));
  std::string warnings;
  for (const auto& w : result.warnings) warnings += w + "\n";
  ctx.manifest.output("eventstudy_warnings.txt", warnings);
  ctx.manifest.output("topic_significance.csv", significance_csv(significance_split(result.fits, level), taxonomy));
  ctx.manifest.output("topic_distribution.csv", distribution_csv(topic_distribution(result.fits), taxonomy));
  ctx.manifest.note("events", events.size());
  ctx.manifest.note("fits", result.fits.size());
  ctx.manifest.note("exclusions", result.exclusions.size());
}

// --- panel --------------------------------------------------------------

void cmd_panel(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  std::ifstream in(upstream(ctx, "event_fits.csv", "eventstudy"));
  const auto fits = read_event_fits_csv(in);
  FeOptions options;
  const auto min_support = static_cast<std::size_t>(ctx.config.integer("panel.min_pair_support", 20));
  options.clusters = parse_cluster_mode(ctx.config.text("panel.clusters", "two_way"));
  options.tolerance = ctx.config.number("panel.tolerance", 1e-10);
  options.max_iterations = static_cast<std::size_t>(ctx.config.integer("panel.max_iterations", 10000));
  const double blank = ctx.config.number("panel.blank_level", 0.10);

  const auto events = panel_events(fits);
  const PanelResult without = fit_fe(build_design(events, taxonomy, false), options);
  const PanelResult with = fit_fe(build_design(events, taxonomy, true, min_support), options);
  ctx.manifest.output("panel_table.csv", panel_table_csv(without, with));
  ctx.manifest.output("interaction_matrix.csv", interaction_matrix_csv(with, taxonomy, blank));
  const json doc{{"without_interactions", panel_result_json(without)},
                 {"with_interactions", panel_result_json(with)}};
  ctx.manifest.output("panel.json", doc.dump(2) + "\n");
  ctx.manifest.note("n_regressors", with.n_regressors);
}

// --- report -------------------------------------------------------------

void cmd_report(Context& ctx) {
  const fs::path dir = ctx.out("manifests");
  std::vector<fs::path> files;
  if (fs::exists(dir)) {
    for (const auto& e : fs::directory_iterator(dir)) {
      if (e.path().extension() == ".json" && e.path().stem() != "report") files.push_back(e.path());
    }
  }
  if (files.empty()) {
    throw ValidationError("nothing to report: no run manifests under " + dir.string());
  }
  std::sort(files.begin(), files.end());
  std::ostringstream md;
  md << "# Run report\n\n";
  json runs = json::array();
  for (const auto& f : files) {
    ctx.manifest.input(f);
    const json m = json::parse(read_file(f));
    runs.push_back(m);
    md << "## " << m.at("subcommand").get<std::string>() << "\n\n";
    md << "- config sha256: `" << m.at("config_sha256").get<std::string>() << "`\n";
    if (!m.at("seed").is_null()) md << "- seed: " << m.at("seed").dump() << "\n";
    for (const auto& [k, v] : m.at("notes").items()) md << "- " << k << ": " << v.dump() << "\n";
    md << "\n| output | sha256 |\n|---|---|\n";
    for (const auto& o : m.at("outputs")) {
      md << "| " << o.at("path").get<std::string>() << " | `" << o.at("sha256").get<std::string>() << "` |\n";
    }
    md << "\n";
  }
  ctx.manifest.output("report.md", md.str());
  ctx.manifest.output("report.json", json{{"runs", runs}}.dump(2) + "\n");
}

// --- synth --------------------------------------------------------------

void cmd_synth(Context& ctx) {
  const Taxonomy taxonomy = load_taxonomy(ctx);
  const std::uint64_t seed = ctx.seed();
  synth::CorpusOptions co;
  co.seed = derive_seed(seed, 1);
  co.announcements = static_cast<std::size_t>(ctx.config.integer("synth.announcements", 400));
  co.min_sentences = static_cast<std::size_t>(ctx.config.integer("synth.min_sentences", 3));
  co.max_sentences = static_cast<std::size_t>(ctx.config.integer("synth.max_sentences", 7));
  co.firms = static_cast<std::size_t>(ctx.config.integer("synth.firms", 40));
  co.terms_per_topic = static_cast<std::size_t>(ctx.config.integer("synth.terms_per_topic", 4));
  co.topic_probability = ctx.config.number("synth.topic_probability", 0.75);
  const auto n_annotators = ctx.config.integer("synth.annotators", 4);
  const auto shared_per_topic = ctx.config.integer("synth.shared_per_topic", 3);
  synth::MarketOptions mo;
  mo.seed = derive_seed(seed, 2);
  mo.trading_days = static_cast<std::size_t>(ctx.config.integer("synth.trading_days", 1800));
  mo.noise_sd = ctx.config.number("synth.noise_sd", 0.015);
  if (n_annotators < 2) throw ConfigError("synth.annotators must be at least 2");

  const synth::Corpus sc = synth::make_corpus(taxonomy, co);
  ctx.manifest.output("corpus_raw.jsonl", sc.jsonl());
  Predictions all;
  for (const auto& [id, labels] : sc.sentence_labels) {
    all.ids.push_back(id);
    all.labels.push_back(labels);
  }
  ctx.manifest.output("labels.csv", predictions_csv(all, taxonomy));
  ctx.manifest.output("taxonomy.json", taxonomy.to_json().dump(2) + "\n");

  json annotators = json::array();
  std::vector<std::string> names;
  for (int i = 1; i <= n_annotators; ++i) {
    names.push_back("A" + std::to_string(i));
    annotators.push_back({{"id", names.back()}, {"display_name", "Annotator " + std::to_string(i)},
                          {"token", "token-a" + std::to_string(i)}});
  }
  annotators.push_back({{"id", "I1"}, {"display_name", "Instructor"}, {"is_instructor", true}, {"token", "token-i1"}});
  ctx.manifest.output("annotators.json", annotators.dump(2) + "\n");

  // Phase-1 overlap set drawn on the true document topics.
  AnnouncementPrelabels doc_topics;
  std::map<std::string, std::vector<std::string>> sentences_of;
  std::vector<EventSpec> events;
  for (const auto& rec : sc.records) {
    const std::string id = rec.at("id").get<std::string>();
    doc_topics[id];
    events.push_back({rec.at("firm_id").get<std::string>(), Date::parse(rec.at("date").get<std::string>()), {}});
  }
  for (const auto& [sid, labels] : sc.sentence_labels) {
    const std::string aid = sid.substr(0, sid.find('#'));
    doc_topics[aid] |= labels;
    sentences_of[aid].push_back(sid);
  }
  for (std::size_t i = 0; i < sc.records.size(); ++i) {
    events[i].labels = doc_topics.at(sc.records[i].at("id").get<std::string>());
  }
  const auto shared = draw_shared_set(doc_topics, static_cast<std::size_t>(shared_per_topic), derive_seed(seed, 3));
  std::vector<std::string> shared_sentences;
  for (const auto& aid : shared) {
    auto s = sentences_of.at(aid);
    std::sort(s.begin(), s.end(), [](const std::string& a, const std::string& b) {
      return std::stoul(a.substr(a.find('#') + 1)) < std::stoul(b.substr(b.find('#') + 1));
    });
    shared_sentences.insert(shared_sentences.end(), s.begin(), s.end());
  }
  AnnotationMatrix gold;
  for (const auto& sid : shared_sentences) gold.rows.push_back({sid, "I1", sc.sentence_labels.at(sid), false, ""});
  ctx.manifest.output("gold_phase1.csv", annotation_matrix_csv(gold, taxonomy));
  const auto noisy = synth::make_annotations(sc.sentence_labels, shared_sentences, names, {}, derive_seed(seed, 4));
  ctx.manifest.output("annotations_phase1.csv", annotation_matrix_csv(noisy, taxonomy));

  const ReturnPanel market = synth::make_market(events, mo);
  ctx.manifest.output("firm_returns.csv", firm_returns_csv(market));
  ctx.manifest.output("market.csv", series_csv(market.calendar, market.market));
  ctx.manifest.output("riskfree.csv", series_csv(market.calendar, market.riskfree));

  const json config{{"seed", seed},
                    {"paths",
                     {{"corpus", "corpus_raw.jsonl"},
                      {"labels", "labels.csv"},
                      {"taxonomy", "taxonomy.json"},
                      {"annotators", "annotators.json"},
                      {"gold", "gold_phase1.csv"},
                      {"annotations", "annotations_phase1.csv"},
                      {"firm_returns", "firm_returns.csv"},
                      {"market", "market.csv"},
                      {"riskfree", "riskfree.csv"}}},
                    {"allocate", {{"per_topic_target", 2}}}};
  ctx.manifest.output("config.json", config.dump(2) + "\n");
}

using Handler = void (*)(Context&);

const std::map<std::string, std::pair<Handler, std::string>>& handlers() {
  static const std::map<std::string, std::pair<Handler, std::string>> table = {
      {"ingest", {cmd_ingest, "Segment, validate and deduplicate raw announcements; write corpus statistics."}},
      {"prelabel", {cmd_prelabel, "Assign BM25 keyword pre-labels to every sentence."}},
      {"allocate", {cmd_allocate, "Plan an annotation phase: shared overlap set and balanced unique sets."}},
      {"serve", {cmd_serve, "Run the annotation HTTP API over the planned phases."}},
      {"agreement", {cmd_agreement, "Annotator-vs-gold metrics and per-topic Fleiss' kappa."}},
      {"train", {cmd_train, "Train the bag-of-embeddings baseline, one model per seed."}},
      {"evaluate", {cmd_evaluate, "Multi-seed evaluation of the trained model or external score files."}},
      {"eventstudy", {cmd_eventstudy, "Market-model abnormal returns for predicted announcements."}},
      {"panel", {cmd_panel, "Two-way fixed-effects regression of abnormal returns on topics."}},
      {"report", {cmd_report, "Summarise the run manifests in the output directory."}},
      {"synth", {cmd_synth, "Write a synthetic fixture: corpus, labels, annotations and returns."}},
  };
  return table;
}

}  // namespace

void run_subcommand(const std::string& name, const GlobalOptions& options, RunConfig& config) {
  const auto it = handlers().find(name);
  if (it == handlers().end()) throw ValidationError("unknown subcommand " + name);
  config.bind(name);
  fs::create_directories(options.out_dir);
  Context ctx{options, config, Manifest(name, options.out_dir)};
  it->second.first(ctx);
  if (name != "serve") ctx.manifest.write(config);
}

std::string describe(const std::string& name) { return handlers().at(name).second; }

std::string keys_help(const std::string& name) {
  const auto& keys = key_registry().at(name);
  if (keys.empty()) return "Config keys read: none\n";
  std::size_t width = 0;
  for (const auto& k : keys) width = std::max(width, k.key.size());
  std::string out = "Config keys read (APP__SECTION__KEY overrides):\n";
  for (const auto& k : keys) {
    out += "  " + k.key + std::string(width - k.key.size() + 2, ' ') + k.help + " [" + k.fallback + "]\n";
  }
  return out;
}

}  // namespace adhoc::cli
