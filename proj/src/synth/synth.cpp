#include "adhoc/synth/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <set>
#include <sstream>

#include "adhoc/classify/tokenizer.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/rng.hpp"

namespace adhoc::synth {

using nlohmann::json;

namespace {

const std::vector<std::string> kStarters = {"Die",       "Der",       "Das",      "Heute",
                                            "Zudem",     "Nach",      "Insgesamt", "Weiterhin",
                                            "Außerdem",  "Überdies"};

const std::vector<std::string> kFiller = {
    "gesellschaft", "heute",     "mitteilung", "gemäß",     "bekannt",    "wurde",
    "hat",          "im",        "rahmen",     "weiterhin", "insgesamt",  "millionen",
    "für",          "über",      "sowie",      "bereits",   "derzeit",    "aktuell",
    "zudem",        "nach",      "vorstand",   "konzern",   "laut",       "rund",
    "prozent",      "deutlich",  "weitere",    "damit",     "jedoch",     "aufgrund",
    "angaben",      "vorläufig", "wesentlich", "börse",     "unternehmen", "mitteilen"};

template <typename T>
const T& pick(Rng& rng, const std::vector<T>& items) {
  return items[static_cast<std::size_t>(rng.below(items.size()))];
}

std::string pad(const char* prefix, std::size_t n, int width) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, n);
  return buf;
}

}  // namespace

std::vector<std::vector<std::string>> distinctive_terms(const Taxonomy& taxonomy) {
  std::map<std::string, std::set<TopicId>> owners;
  std::vector<std::vector<std::string>> per_topic(kNumTopics);
  for (const Topic& t : taxonomy.topics()) {
    for (const auto& kw : t.keywords) {
      for (const auto& tok : tokenize(kw)) owners[tok].insert(t.id);
    }
  }
  for (const auto& [tok, topics] : owners) {
    if (topics.size() == 1 && tok.size() > 1) per_topic[static_cast<std::size_t>(*topics.begin())].push_back(tok);
  }
  return per_topic;
}

std::string Corpus::jsonl() const {
  std::string out;
  for (const auto& r : records) {
    out += r.dump();
    out += '\n';
  }
  return out;
}

Corpus make_corpus(const Taxonomy& taxonomy, const CorpusOptions& o) {
  if (o.min_sentences == 0 || o.min_sentences > o.max_sentences) {
    throw ConfigError("synth sentence bounds must satisfy 1 <= min <= max");
  }
  if (o.firms == 0 || o.announcements == 0) throw ConfigError("synth needs firms and announcements");
  auto terms = distinctive_terms(taxonomy);
  if (o.terms_per_topic > 0) {
    for (auto& list : terms) {
      if (list.size() > o.terms_per_topic) list.resize(o.terms_per_topic);
    }
  }
  for (int t = 0; t < kNumTopics; ++t) {
    if (terms[static_cast<std::size_t>(t)].empty()) {
      throw ConfigError("topic " + taxonomy.name(t) + " has no distinctive keyword to plant");
    }
  }
  Rng rng(derive_seed(o.seed, 1));
  Corpus out;
  for (std::size_t a = 0; a < o.announcements; ++a) {
    const std::string id = pad("ADH-", a + 1, 5);
    const std::string firm = pad("F", static_cast<std::size_t>(rng.below(o.firms)) + 1, 3);
    const Date date = o.first_date.plus_days(static_cast<std::int32_t>(rng.below(
        static_cast<std::uint64_t>(std::max<std::int32_t>(o.span_days, 1)))));
    const std::size_t n_sent =
        o.min_sentences + static_cast<std::size_t>(rng.below(o.max_sentences - o.min_sentences + 1));
    std::vector<std::string> sentences;
    for (std::size_t s = 0; s < n_sent; ++s) {
      LabelSet labels;
      if (rng.bernoulli(o.topic_probability)) {
        labels.insert(static_cast<TopicId>(rng.below(kNumTopics)));
        if (rng.bernoulli(o.second_topic_probability)) {
          labels.insert(static_cast<TopicId>(rng.below(kNumTopics)));
        }
      }
      std::vector<std::string> words;
      for (std::size_t w = 0; w < o.filler_words; ++w) words.push_back(pick(rng, kFiller));
      for (TopicId t : labels.topics()) {
        for (int k = 0; k < 2; ++k) {
          const auto pos = static_cast<std::ptrdiff_t>(rng.below(words.size() + 1));
          words.insert(words.begin() + pos, pick(rng, terms[static_cast<std::size_t>(t)]));
        }
      }
      std::string text = pick(rng, kStarters);
      for (const auto& w : words) text += " " + w;
      text += ".";
      sentences.push_back(std::move(text));
      out.sentence_labels[id + "#" + std::to_string(s)] = labels;
    }
    json rec{{"id", id}, {"firm_id", firm}, {"date", date.to_string()}, {"source", "primary_provider"}};
    if (a % 2 == 0) {
      std::string text;
      for (const auto& s : sentences) text += (text.empty() ? "" : " ") + s;
      rec["text"] = text;
    } else {
      rec["sentences"] = sentences;
    }
    out.records.push_back(std::move(rec));
  }
  return out;
}

AnnotationMatrix make_annotations(const Ratings& gold, std::span<const std::string> items,
                                  std::span<const std::string> annotators,
                                  const AnnotatorNoise& noise, std::uint64_t seed) {
  AnnotationMatrix m;
  m.level = Level::sentence;
  for (std::size_t a = 0; a < annotators.size(); ++a) {
    Rng rng(derive_seed(seed, 100 + a));
    for (const auto& item : items) {
      auto it = gold.find(item);
      if (it == gold.end()) throw NotFoundError("no gold labels for '" + item + "'");
      LabelSet labels;
      for (int t = 0; t < kNumTopics; ++t) {
        const bool in_gold = it->second.contains(t);
        if (in_gold ? !rng.bernoulli(noise.miss) : rng.bernoulli(noise.spurious)) labels.insert(t);
      }
      m.rows.push_back({item, annotators[a], labels, false, ""});
    }
  }
  return m;
}

bool is_weekday(Date d) {
  // 1970-01-01 was a Thursday; 0 = Monday.
  const int dow = ((d.serial() % 7) + 7 + 3) % 7;
  return dow < 5;
}

std::vector<Date> weekday_calendar(Date first, std::size_t days) {
  std::vector<Date> out;
  out.reserve(days);
  for (Date d = first; out.size() < days; d = d.plus_days(1)) {
    if (is_weekday(d)) out.push_back(d);
  }
  return out;
}

double reference_effect(LabelSet labels) {
  double e = 0.0;
  if (labels.contains(10)) e += kLargeScaleProjectEffect;
  if (labels.contains(12)) e += kBankruptcyFilingEffect;
  if (labels.contains(12) && labels.contains(13)) e += kBankruptcyPairEffect;
  return e;
}

ReturnPanel make_market(std::span<const EventSpec> events, const MarketOptions& o,
                        const EffectFn& effect) {
  ReturnPanel p;
  p.calendar = weekday_calendar(o.first_day, o.trading_days);
  Rng market_rng(derive_seed(o.seed, 1));
  for (std::size_t i = 0; i < p.calendar.size(); ++i) {
    p.riskfree.push_back(o.riskfree);
    p.market.push_back(o.riskfree + market_rng.normal(o.market_mean, o.market_sd));
  }
  std::map<std::string, std::vector<std::pair<std::size_t, LabelSet>>> per_firm;
  for (const auto& e : events) {
    const auto day = p.trading_index(e.date);
    auto& list = per_firm[e.firm_id];
    if (day) list.emplace_back(*day, e.labels);
  }
  std::size_t firm_no = 0;
  for (auto& [firm, list] : per_firm) {
    Rng rng(derive_seed(o.seed, 1000 + firm_no));
    const double a0 = rng.normal(0.0, 0.0005);
    const double a1 = rng.normal(o.alpha1_mean, o.alpha1_sd);
    std::size_t listed = 0;
    if (firm_no < o.late_listing_firms && !list.empty()) {
      std::size_t first = list.front().first;
      for (const auto& [d, l] : list) first = std::min(first, d);
      listed = first > o.late_listing_days ? first - o.late_listing_days : 0;
    }
    std::vector<double> abnormal(p.calendar.size(), 0.0);
    for (const auto& [d, l] : list) abnormal[d] += effect(l);
    auto& series = p.firms[firm];
    series.resize(p.calendar.size());
    for (std::size_t t = 0; t < p.calendar.size(); ++t) {
      const double eps = rng.normal(0.0, o.noise_sd);
      if (t < listed) continue;
      series[t] = p.riskfree[t] + a0 + a1 * (p.market[t] - p.riskfree[t]) + eps + abnormal[t];
    }
    ++firm_no;
  }
  return p;
}

}  // namespace adhoc::synth
