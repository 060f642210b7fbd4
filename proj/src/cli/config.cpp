#include "adhoc/cli/config.hpp"

#include <algorithm>
#include <cctype>
#include <fstream>

#include "adhoc/core/error.hpp"

extern char** environ;

namespace adhoc::cli {

using nlohmann::json;

namespace {

const std::vector<KeySpec> kTaxonomy = {
    {"paths.taxonomy", "builtin", "taxonomy JSON (topics, names, keyword lists)"}};

std::vector<KeySpec> with_taxonomy(std::vector<KeySpec> keys) {
  keys.insert(keys.begin(), kTaxonomy.begin(), kTaxonomy.end());
  return keys;
}

}  // namespace

const std::map<std::string, std::vector<KeySpec>>& key_registry() {
  static const std::map<std::string, std::vector<KeySpec>> registry = {
      {"synth",
       with_taxonomy({{"seed", "7", "generator seed"},
                      {"synth.announcements", "400", "announcements to generate"},
                      {"synth.min_sentences", "3", "fewest sentences per announcement"},
                      {"synth.max_sentences", "7", "most sentences per announcement"},
                      {"synth.firms", "40", "distinct firms"},
                      {"synth.terms_per_topic", "4", "planted lexicon size per topic (0 = all)"},
                      {"synth.topic_probability", "0.75", "share of sentences carrying a topic"},
                      {"synth.annotators", "4", "simulated annotators A1..An"},
                      {"synth.shared_per_topic", "3", "shared phase-1 announcements per topic"},
                      {"synth.trading_days", "1800", "market calendar length"},
                      {"synth.noise_sd", "0.015", "idiosyncratic daily return noise"}})},
      {"ingest",
       with_taxonomy({{"paths.corpus", "required", "raw announcement records, one JSON object per line"},
                      {"paths.labels", "none", "sentence label file for label statistics"},
                      {"ingest.min_date", "none", "drop announcements before this date"},
                      {"ingest.max_date", "none", "drop announcements after this date"},
                      {"ingest.abbreviations", "built-in list", "abbreviations that never end a sentence"}})},
      {"prelabel",
       with_taxonomy({{"prelabel.k1", "1.2", "BM25 term saturation"},
                      {"prelabel.b", "0.75", "BM25 length normalisation"},
                      {"prelabel.score_threshold", "0", "minimum winning score for a pre-label"}})},
      {"allocate",
       with_taxonomy({{"seed", "7", "draw seed"},
                      {"paths.annotators", "required", "annotator list JSON"},
                      {"paths.gold", "required for phase 2-3", "phase-1 gold annotation matrix"},
                      {"allocate.phase", "2", "phase to plan (1, 2 or 3)"},
                      {"allocate.per_topic_target", "50", "labelled sentences per topic and annotator"},
                      {"allocate.shared_per_topic", "3", "shared announcements per pre-labelled topic"},
                      {"allocate.min_topic_sentences", "10", "phase 3: topics below this count are topped up"}})},
      {"serve",
       with_taxonomy({{"paths.annotators", "required", "annotator list JSON with tokens"},
                      {"paths.gold", "none", "phase-1 gold annotation matrix"},
                      {"serve.host", "127.0.0.1", "listen address"},
                      {"serve.port", "8080", "listen port"},
                      {"serve.show_prelabels", "false", "send BM25 pre-labels to annotators"},
                      {"serve.journal", "<out-dir>/journal.jsonl", "append-only record journal"},
                      {"agreement.min_gold_sentences", "3", "gold coverage needed for a topic to be scored"}})},
      {"agreement",
       with_taxonomy({{"paths.annotations", "required", "annotation matrix of the annotators"},
                      {"paths.gold", "required", "gold annotation matrix"},
                      {"agreement.level", "sentence", "sentence or document (--level overrides)"},
                      {"agreement.exclude_low_coverage", "false", "drop topics with few gold sentences"},
                      {"agreement.min_gold_sentences", "3", "threshold for the low-coverage filter"}})},
      {"train",
       with_taxonomy({{"seed", "7", "train/test split seed"},
        {"paths.labels", "required", "sentence label file"},
        {"train.level", "sentence", "training unit (--level overrides)"},
        {"train.test_fraction", "0.2", "share of announcements held out"},
        {"train.batch_size", "6", "mini-batch size"},
        {"train.epochs", "4", "passes over the training split"},
        {"train.lr_min", "range test", "one-cycle lower learning rate"},
        {"train.lr_max", "range test", "one-cycle upper learning rate"},
        {"train.beta1_min", "0.85", "lowest Adam beta1 (at the lr peak)"},
        {"train.beta1_max", "0.95", "highest Adam beta1 (at the ends)"},
        {"train.beta2", "0.999", "Adam beta2"},
        {"train.epsilon", "1e-7", "Adam epsilon"},
        {"train.seeds", "[1..8]", "one model per seed"},
        {"train.threshold", "0.6", "decision threshold stored with the model"},
        {"train.vocabulary_size", "20000", "most frequent training tokens kept"},
        {"train.range_lr_lo", "1e-5", "range-test start"},
        {"train.range_lr_hi", "1", "range-test end"},
        {"train.range_steps", "100", "range-test steps"}})},
      {"evaluate",
       with_taxonomy({{"paths.labels", "required", "gold sentence label file"},
                      {"evaluate.scores", "none", "external score files, one per seed"},
                      {"evaluate.level", "sentence", "evaluation unit (--level overrides)"},
                      {"evaluate.threshold", "train.threshold", "decision threshold (--threshold overrides)"},
                      {"evaluate.sweep", "true", "also write the threshold sweep"}})},
      {"eventstudy",
       with_taxonomy({{"paths.firm_returns", "required", "firm_id,date,return"},
                      {"paths.market", "required", "date,return of the market index"},
                      {"paths.riskfree", "required", "date,return of the risk-free rate"},
                      {"paths.events", "from predictions", "firm_id,date,topics event file"},
                      {"eventstudy.window", "250", "estimation window in trading days"},
                      {"eventstudy.min_observations", "73", "minimum history before an event"},
                      {"eventstudy.joint", "true", "joint dummies for overlapping events"},
                      {"eventstudy.significance_level", "0.1", "level for the significance split"}})},
      {"panel",
       with_taxonomy({{"panel.min_pair_support", "20", "events needed to keep a topic pair"},
                      {"panel.clusters", "two_way", "two_way, firm or year"},
                      {"panel.tolerance", "1e-10", "demeaning convergence tolerance"},
                      {"panel.max_iterations", "10000", "demeaning sweep limit"},
                      {"panel.blank_level", "0.1", "interaction cells above this p are blanked"}})},
      {"report", {}},
  };
  return registry;
}

std::vector<std::string> subcommands() {
  return {"ingest", "prelabel", "allocate", "serve", "agreement", "train",
          "evaluate", "eventstudy", "panel", "report", "synth"};
}

namespace {

std::pair<std::string, std::string> split_key(std::string_view key) {
  const auto dot = key.find('.');
  if (dot == std::string_view::npos) return {std::string(key), ""};
  return {std::string(key.substr(0, dot)), std::string(key.substr(dot + 1))};
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

json parse_override(const std::string& value) {
  json v = json::parse(value, nullptr, false);
  if (v.is_discarded()) return value;
  return v;
}

}  // namespace

RunConfig RunConfig::load(const std::optional<std::filesystem::path>& file,
                          const std::map<std::string, std::string>& environment) {
  RunConfig c;
  if (file) {
    std::ifstream in(*file);
    if (!in) throw MissingInputError("config file " + file->string() + " not found");
    c.doc_ = json::parse(in, nullptr, false);
    if (c.doc_.is_discarded() || !c.doc_.is_object()) {
      throw ConfigError("config file " + file->string() + " is not a JSON object");
    }
    c.base_dir_ = file->parent_path().empty() ? std::filesystem::path(".") : file->parent_path();
  }
  for (const auto& [name, value] : environment) {
    if (name.rfind("APP__", 0) != 0) continue;
    const std::string rest = name.substr(5);
    const auto sep = rest.find("__");
    if (sep == std::string::npos) {
      c.doc_[lower(rest)] = parse_override(value);
    } else {
      c.doc_[lower(rest.substr(0, sep))][lower(rest.substr(sep + 2))] = parse_override(value);
    }
  }
  return c;
}

void RunConfig::bind(std::string subcommand) { subcommand_ = std::move(subcommand); }

const json* RunConfig::find(std::string_view key) const {
  const auto [section, name] = split_key(key);
  auto it = doc_.find(section);
  if (it == doc_.end()) return nullptr;
  if (name.empty()) return &*it;
  if (!it->is_object()) return nullptr;
  auto jt = it->find(name);
  return jt == it->end() ? nullptr : &*jt;
}

void RunConfig::record(std::string_view key, const json& value) {
  if (!subcommand_.empty()) {
    const auto& keys = key_registry().at(subcommand_);
    const bool declared = std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.key == key; });
    if (!declared) {
      throw Error(ErrorKind::internal,
                  subcommand_ + " read undeclared config key " + std::string(key));
    }
  }
  used_[std::string(key)] = value;
}

double RunConfig::number(std::string_view key, double fallback) {
  const json* v = find(key);
  double out = fallback;
  if (v) {
    if (!v->is_number()) throw ConfigError(std::string(key) + " must be a number");
    out = v->get<double>();
  }
  record(key, out);
  return out;
}

std::int64_t RunConfig::integer(std::string_view key, std::int64_t fallback) {
  const json* v = find(key);
  std::int64_t out = fallback;
  if (v) {
    if (!v->is_number_integer()) throw ConfigError(std::string(key) + " must be an integer");
    out = v->get<std::int64_t>();
  }
  record(key, out);
  return out;
}

bool RunConfig::flag(std::string_view key, bool fallback) {
  const json* v = find(key);
  bool out = fallback;
  if (v) {
    if (!v->is_boolean()) throw ConfigError(std::string(key) + " must be true or false");
    out = v->get<bool>();
  }
  record(key, out);
  return out;
}

std::string RunConfig::text(std::string_view key, const std::string& fallback) {
  const json* v = find(key);
  std::string out = fallback;
  if (v) {
    if (!v->is_string()) throw ConfigError(std::string(key) + " must be a string");
    out = v->get<std::string>();
  }
  record(key, out);
  return out;
}

json RunConfig::value(std::string_view key, const json& fallback) {
  const json* v = find(key);
  const json out = v ? *v : fallback;
  record(key, out);
  return out;
}

std::filesystem::path RunConfig::resolve(const std::string& relative) const {
  const std::filesystem::path p(relative);
  return p.is_absolute() ? p : (base_dir_ / p).lexically_normal();
}

std::optional<std::filesystem::path> RunConfig::path(std::string_view key) {
  const json* v = find(key);
  if (!v || v->is_null()) {
    record(key, nullptr);
    return std::nullopt;
  }
  if (!v->is_string()) throw ConfigError(std::string(key) + " must be a path string");
  record(key, v->get<std::string>());
  return resolve(v->get<std::string>());
}

json RunConfig::block(std::string_view section) {
  const json* v = find(section);
  if (!v) return json::object();
  if (!v->is_object()) throw ConfigError(std::string(section) + " must be an object");
  const auto& keys = key_registry().at(subcommand_);
  for (const auto& [name, value] : v->items()) {
    const std::string key = std::string(section) + "." + name;
    const bool declared = std::any_of(keys.begin(), keys.end(), [&](const KeySpec& k) { return k.key == key; });
    if (!declared) throw ConfigError("unknown config key " + key);
    record(key, value);
  }
  return *v;
}

void RunConfig::set(std::string_view key, json value) {
  const auto [section, name] = split_key(key);
  if (name.empty()) {
    doc_[section] = std::move(value);
  } else {
    doc_[section][name] = std::move(value);
  }
}

std::map<std::string, std::string> app_environment() {
  std::map<std::string, std::string> out;
  for (char** e = environ; e && *e; ++e) {
    const std::string entry(*e);
    const auto eq = entry.find('=');
    if (eq == std::string::npos) continue;
    if (entry.rfind("APP__", 0) == 0) out[entry.substr(0, eq)] = entry.substr(eq + 1);
  }
  return out;
}

}  // namespace adhoc::cli
