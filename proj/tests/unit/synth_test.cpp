#include <doctest.h>

#include <set>
#include <sstream>

#include "adhoc/classify/tokenizer.hpp"
#include "adhoc/corpus/corpus.hpp"
#include "adhoc/synth/synth.hpp"

using namespace adhoc;

TEST_CASE("distinctive terms belong to one topic only") {
  const auto& tax = Taxonomy::builtin();
  const auto terms = synth::distinctive_terms(tax);
  REQUIRE(terms.size() == kNumTopics);
  for (int t = 0; t < kNumTopics; ++t) {
    CHECK_FALSE(terms[static_cast<std::size_t>(t)].empty());
    for (const auto& term : terms[static_cast<std::size_t>(t)]) {
      int owners = 0;
      for (const auto& topic : tax.topics()) {
        bool has = false;
        for (const auto& kw : topic.keywords) {
          for (const auto& tok : tokenize(kw)) has = has || tok == term;
        }
        owners += has;
      }
      CHECK(owners == 1);
    }
  }
}

TEST_CASE("weekday calendar skips weekends") {
  // 2024-01-05 is a Friday.
  const auto cal = synth::weekday_calendar(Date::from_ymd(2024, 1, 5), 3);
  REQUIRE(cal.size() == 3);
  CHECK(cal[0] == Date::from_ymd(2024, 1, 5));
  CHECK(cal[1] == Date::from_ymd(2024, 1, 8));
  CHECK(cal[2] == Date::from_ymd(2024, 1, 9));
  CHECK_FALSE(synth::is_weekday(Date::from_ymd(2024, 1, 6)));
  CHECK(synth::is_weekday(Date::from_ymd(2024, 1, 10)));
}

TEST_CASE("generated corpus ingests with every labelled sentence present") {
  synth::CorpusOptions o;
  o.announcements = 60;
  o.seed = 3;
  const auto c = synth::make_corpus(Taxonomy::builtin(), o);
  CHECK(c.records.size() == 60);
  std::istringstream in(c.jsonl());
  const auto r = ingest_corpus(in, Taxonomy::builtin());
  CHECK(r.rejections.empty());
  CHECK(r.duplicates.empty());
  CHECK(r.corpus.announcements().size() == 60);
  CHECK(r.corpus.sentence_count() == c.sentence_labels.size());
  for (const auto& [id, labels] : c.sentence_labels) CHECK(r.corpus.find_sentence(id) != nullptr);

  const auto again = synth::make_corpus(Taxonomy::builtin(), o);
  CHECK(again.jsonl() == c.jsonl());
}

TEST_CASE("reference effects carry the published magnitudes") {
  const auto& tax = Taxonomy::builtin();
  const TopicId lsp = tax.find("Large Scale Project");
  const TopicId filing = tax.find("Bankruptcy Filing");
  const TopicId proceedings = tax.find("Bankruptcy Proceedings");
  CHECK(synth::reference_effect(LabelSet::of({lsp})) == 0.0270);
  CHECK(synth::reference_effect(LabelSet::of({filing})) == -0.0875);
  CHECK(synth::reference_effect(LabelSet::of({filing, proceedings})) == doctest::Approx(-0.0875 + 0.1285));
  CHECK(synth::reference_effect(LabelSet::of({proceedings})) == 0.0);
  CHECK(synth::reference_effect({}) == 0.0);
}

TEST_CASE("annotation noise is deterministic and zero noise copies gold") {
  Ratings gold{{"a#0", LabelSet::of({1})}, {"a#1", LabelSet::of({2, 3})}};
  const std::vector<std::string> items{"a#0", "a#1"};
  const std::vector<std::string> who{"A1", "A2"};
  const auto m = synth::make_annotations(gold, items, who, {0.0, 0.0}, 1);
  REQUIRE(m.rows.size() == 4);
  for (const auto& row : m.rows) CHECK(row.labels == gold.at(row.item_id));
  const auto n1 = synth::make_annotations(gold, items, who, {}, 9);
  const auto n2 = synth::make_annotations(gold, items, who, {}, 9);
  CHECK(n1.rows == n2.rows);
}

TEST_CASE("market returns plant the effect on the event day") {
  const synth::MarketOptions o;
  const auto cal = synth::weekday_calendar(o.first_day, o.trading_days);
  const std::vector<EventSpec> ev{{"F1", cal[1000], LabelSet::of({Taxonomy::builtin().find("Bankruptcy Filing")})}};
  synth::MarketOptions quiet = o;
  quiet.noise_sd = 0.0;
  quiet.late_listing_firms = 0;
  const auto p = synth::make_market(ev, quiet);
  const auto r = run_event_study(p, ev);
  REQUIRE(r.fits.size() == 1);
  CHECK(std::abs(r.fits[0].alpha2 + 0.0875) <= 1e-10);
}
