#include <doctest.h>

#include <cmath>
#include <sstream>

#include "adhoc/classify/tokenizer.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/rng.hpp"
#include "adhoc/prelabel/bm25.hpp"

using namespace adhoc;

namespace {

using Docs = std::vector<std::pair<std::string, std::string>>;

Docs docs(std::initializer_list<std::string> texts) {
  Docs out;
  int i = 0;
  for (const auto& t : texts) out.emplace_back("d" + std::to_string(i++), t);
  return out;
}

// Topic t has the single keyword "kw<t>".
Taxonomy toy_taxonomy() {
  std::vector<Topic> topics;
  for (int t = 0; t < kNumTopics; ++t) {
    topics.push_back({t, "T" + std::to_string(t), "", {"kw" + std::to_string(t)}});
  }
  return Taxonomy(std::move(topics));
}

Corpus corpus_of(const std::vector<std::string>& sentences) {
  Announcement a{"A1", "F1", Date::parse("2019-01-02"), Source::primary_provider, {}};
  for (std::size_t i = 0; i < sentences.size(); ++i) {
    a.sentences.push_back({make_sentence_id("A1", i), "A1", i, sentences[i]});
  }
  return Corpus({a});
}

// Straight-line Okapi BM25 over whitespace-free token lists.
double oracle_score(const std::vector<std::vector<std::string>>& collection, std::size_t doc,
                    const std::vector<std::string>& query, double k1, double b) {
  const double n = static_cast<double>(collection.size());
  double total_len = 0;
  for (const auto& d : collection) total_len += static_cast<double>(d.size());
  const double avg = total_len / n;
  double s = 0;
  for (const auto& q : query) {
    double df = 0;
    for (const auto& d : collection) {
      bool has = false;
      for (const auto& w : d) has = has || w == q;
      df += has ? 1 : 0;
    }
    double tf = 0;
    for (const auto& w : collection[doc]) tf += w == q ? 1 : 0;
    const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
    const double len = static_cast<double>(collection[doc].size());
    s += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * len / avg));
  }
  return s;
}

}  // namespace

TEST_CASE("single sentence 'a b a' statistics") {
  const auto d = docs({"a b a"});
  const auto idx = Bm25Index::build(d);
  CHECK(idx.term_frequency(0, "a") == 2);
  CHECK(idx.term_frequency(0, "b") == 1);
  CHECK(idx.length(0) == 3);
  CHECK(idx.average_length() == 3.0);
}

TEST_CASE("two sentences sharing a term give df 2") {
  const auto idx = Bm25Index::build(docs({"t x", "y t"}));
  CHECK(idx.document_frequency("t") == 2);
  CHECK(idx.document_frequency("x") == 1);
  CHECK(idx.document_frequency("absent") == 0);
}

TEST_CASE("df and tf equal a naive recount on a random corpus") {
  Rng rng(8);
  const std::vector<std::string> words{"alpha", "beta", "gamma", "delta", "eps", "zeta"};
  Docs d;
  std::vector<std::vector<std::string>> tokens;
  for (int i = 0; i < 10; ++i) {
    std::string text;
    std::vector<std::string> toks;
    const auto len = 1 + rng.below(8);
    for (std::size_t k = 0; k < len; ++k) {
      toks.push_back(words[rng.below(words.size())]);
      text += toks.back() + " ";
    }
    d.emplace_back("s" + std::to_string(i), text);
    tokens.push_back(toks);
  }
  const auto idx = Bm25Index::build(d);
  for (const auto& w : words) {
    std::size_t df = 0;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      std::size_t tf = 0;
      for (const auto& t : tokens[i]) tf += t == w ? 1 : 0;
      df += tf > 0 ? 1 : 0;
      CHECK(idx.term_frequency(i, w) == tf);
    }
    CHECK(idx.document_frequency(w) == df);
  }
}

TEST_CASE("empty query scores 0 and absent terms contribute 0") {
  const auto idx = Bm25Index::build(docs({"a b", "c"}));
  const Bm25Params p;
  CHECK(idx.score(std::vector<std::string>{}, 0, p) == 0.0);
  const std::vector<std::string> q1{"a"};
  const std::vector<std::string> q2{"a", "zzz"};
  CHECK(idx.score(q2, 0, p) == idx.score(q1, 0, p));
}

TEST_CASE("single-term single-sentence score equals the hand-evaluated formula") {
  const auto idx = Bm25Index::build(docs({"gewinn"}));
  const Bm25Params p;
  // N = 1, df = 1, tf = 1, len = avglen = 1.
  const double idf = std::log((1 - 1 + 0.5) / (1 + 0.5) + 1.0);
  const double expected = idf * 1 * (1.2 + 1) / (1 + 1.2 * (1 - 0.75 + 0.75));
  CHECK(idx.score(std::vector<std::string>{"gewinn"}, 0, p) == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("random cases match the straight-line formula") {
  Rng rng(31);
  const std::vector<std::string> words{"a", "b", "c", "d", "e", "f", "g"};
  for (int trial = 0; trial < 30; ++trial) {
    Docs d;
    std::vector<std::vector<std::string>> tokens;
    const auto n = 1 + rng.below(9);
    for (std::size_t i = 0; i < n; ++i) {
      std::vector<std::string> t;
      std::string text;
      for (std::size_t k = 0, len = 1 + rng.below(10); k < len; ++k) {
        t.push_back(words[rng.below(words.size())]);
        text += t.back() + " ";
      }
      d.emplace_back("s" + std::to_string(i), text);
      tokens.push_back(t);
    }
    std::vector<std::string> q;
    for (std::size_t k = 0, len = rng.below(5); k < len; ++k) q.push_back(words[rng.below(words.size())]);
    Bm25Params p;
    p.k1 = rng.uniform(0.1, 3.0);
    p.b = rng.uniform();
    const auto idx = Bm25Index::build(d);
    for (std::size_t i = 0; i < n; ++i) {
      CHECK(std::abs(idx.score(q, i, p) - oracle_score(tokens, i, q, p.k1, p.b)) <= 1e-12);
    }
  }
}

TEST_CASE("parameter validation") {
  Bm25Params p;
  p.k1 = 0;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.b = 1.5;
  CHECK_THROWS_AS(p.validate(), ConfigError);
  p = {};
  p.score_threshold = -1;
  CHECK_THROWS_AS(p.validate(), ConfigError);
}

TEST_CASE("sentence with only topic-A keywords is pre-labelled A") {
  const Taxonomy tax = toy_taxonomy();
  const Corpus c = corpus_of({"kw4 kw4 text", "filler words only"});
  const auto labels = prelabel_corpus(c, tax, {});
  REQUIRE(labels.size() == 2);
  CHECK(labels[0].topic == std::optional<TopicId>(4));
}

TEST_CASE("zero keyword overlap with a positive threshold gives no pre-label") {
  const Taxonomy tax = toy_taxonomy();
  Bm25Params p;
  p.score_threshold = 0.1;
  const auto labels = prelabel_corpus(corpus_of({"kw2", "nothing here"}), tax, p);
  CHECK_FALSE(labels[1].topic.has_value());
  CHECK(labels[1].score == 0.0);
}

TEST_CASE("a symmetric two-topic tie goes to the lower topic id") {
  const Taxonomy tax = toy_taxonomy();
  // kw3 and kw7 each occur once in the tied sentence and once elsewhere.
  const auto labels = prelabel_corpus(corpus_of({"kw7 kw3", "kw3 x", "kw7 x"}), tax, {});
  CHECK(labels[0].topic == std::optional<TopicId>(3));
}

TEST_CASE("pre-label file round-trips and announcement sets are unions") {
  const Taxonomy tax = toy_taxonomy();
  const Corpus c = corpus_of({"kw1 a", "kw5 b", "none"});
  const auto labels = prelabel_corpus(c, tax, {});
  std::istringstream in(prelabels_csv(labels));
  const auto back = read_prelabels_csv(in);
  REQUIRE(back.size() == labels.size());
  for (std::size_t i = 0; i < back.size(); ++i) {
    CHECK(back[i].sentence_id == labels[i].sentence_id);
    CHECK(back[i].topic == labels[i].topic);
    CHECK(back[i].score == labels[i].score);
  }
  CHECK(announcement_prelabels(c, labels).at("A1") == LabelSet::of({1, 5}));
}

TEST_CASE("topic queries deduplicate tokens") {
  const Topic t{0, "x", "", {"half year", "year", "profit"}};
  CHECK(topic_query(t) == std::vector<std::string>{"half", "year", "profit"});
}

TEST_CASE("tokenizer strips punctuation") {
  CHECK(tokenize("Gewinn steigt.") == std::vector<std::string>{"Gewinn", "steigt"});
  CHECK(tokenize("Über-Rendite: 5,3%") == std::vector<std::string>{"Über", "Rendite", "5", "3"});
}
