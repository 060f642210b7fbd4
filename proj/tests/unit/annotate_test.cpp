#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "adhoc/annotate/allocation.hpp"
#include "adhoc/annotate/service.hpp"
#include "adhoc/annotate/store.hpp"
#include "adhoc/core/error.hpp"

#include <httplib.h>

using namespace adhoc;
using nlohmann::json;

namespace {

// Announcements N01..N<count>, each with `sentences` sentences.
Corpus make_corpus(int count, int sentences) {
  std::vector<Announcement> out;
  for (int i = 1; i <= count; ++i) {
    const std::string id = (i < 10 ? "N0" : "N") + std::to_string(i);
    Announcement a{id, "F" + std::to_string(i % 3), Date::parse("2019-03-01").plus_days(i),
                   Source::primary_provider, {}};
    for (int k = 0; k < sentences; ++k) {
      a.sentences.push_back({make_sentence_id(id, static_cast<std::size_t>(k)), id,
                             static_cast<std::size_t>(k), "Satz " + std::to_string(k) + " von " + id});
    }
    out.push_back(std::move(a));
  }
  return Corpus(std::move(out));
}

std::vector<Annotator> team(int n) {
  std::vector<Annotator> out;
  for (int i = 1; i <= n; ++i) out.push_back({"A" + std::to_string(i), "", false, "tok" + std::to_string(i)});
  return out;
}

std::string sid(const std::string& ann, std::size_t k) { return make_sentence_id(ann, k); }

AnnotationRecord rec(const std::string& sentence, const std::string& annotator, LabelSet labels,
                     bool irrelevant = false) {
  AnnotationRecord r;
  r.sentence_id = sentence;
  r.annotator_id = annotator;
  r.labels = labels;
  r.irrelevant = irrelevant;
  return r;
}

}  // namespace

TEST_CASE("rate 2 and target 50 give 25 announcements per annotator") {
  const Corpus c = make_corpus(60, 3);
  GoldStandard gold;
  // Topic 0 appears in two sentences of each of N01..N03.
  for (const char* a : {"N01", "N02", "N03"}) {
    gold.labels[sid(a, 0)] = LabelSet::of({0});
    gold.labels[sid(a, 1)] = LabelSet::of({0});
    gold.labels[sid(a, 2)] = {};
  }
  AnnouncementPrelabels pre;
  for (const auto& a : c.announcements()) pre[a.id] = LabelSet::of({0});
  AllocationRequest req;
  req.topics = LabelSet::of({0});
  req.exclude = {"N01", "N02", "N03"};
  const auto plan = allocate_balanced(c, pre, gold, team(2), req, Taxonomy::builtin());
  CHECK(plan.topic_rates.at(0) == 2.0);
  CHECK(plan.topic_draws.at(0) == 25);
  CHECK(plan.unique_assignments.at("A1").size() == 25);
  CHECK(plan.unique_assignments.at("A2").size() == 25);
}

TEST_CASE("rates 4 and 1 with target 8 give 2 and 8 announcements") {
  const Corpus c = make_corpus(40, 4);
  GoldStandard gold;
  for (std::size_t k = 0; k < 4; ++k) gold.labels[sid("N01", k)] = LabelSet::of({0});
  gold.labels[sid("N02", 0)] = LabelSet::of({1});
  AnnouncementPrelabels pre;
  for (const auto& a : c.announcements()) pre[a.id] = LabelSet::of({0, 1});
  AllocationRequest req;
  req.per_topic_sentence_target = 8;
  req.topics = LabelSet::of({0, 1});
  const auto plan = allocate_balanced(c, pre, gold, team(1), req, Taxonomy::builtin());
  CHECK(plan.topic_draws.at(0) == 2);
  CHECK(plan.topic_draws.at(1) == 8);
  CHECK(plan.unique_assignments.at("A1").size() == 10);
}

TEST_CASE("equal rates give equal per-topic draws") {
  const Corpus c = make_corpus(50, 2);
  GoldStandard gold;
  for (int t = 0; t < 3; ++t) gold.labels[sid(c.announcements()[static_cast<std::size_t>(t)].id, 0)] = LabelSet::of({t});
  AnnouncementPrelabels pre;
  for (std::size_t i = 0; i < c.announcements().size(); ++i) {
    pre[c.announcements()[i].id] = LabelSet::of({static_cast<TopicId>(i % 3)});
  }
  AllocationRequest req;
  req.per_topic_sentence_target = 5;
  req.topics = LabelSet::of({0, 1, 2});
  const auto plan = allocate_balanced(c, pre, gold, team(2), req, Taxonomy::builtin());
  CHECK(plan.topic_draws.at(0) == plan.topic_draws.at(1));
  CHECK(plan.topic_draws.at(1) == plan.topic_draws.at(2));
  plan.validate();
}

TEST_CASE("a short pool raises a shortage naming the topic") {
  const Corpus c = make_corpus(4, 1);
  GoldStandard gold;
  gold.labels[sid("N01", 0)] = LabelSet::of({2});
  AnnouncementPrelabels pre;
  for (const auto& a : c.announcements()) pre[a.id] = LabelSet::of({2});
  AllocationRequest req;
  req.per_topic_sentence_target = 10;
  req.topics = LabelSet::of({2});
  try {
    allocate_balanced(c, pre, gold, team(1), req, Taxonomy::builtin());
    FAIL("expected a shortage");
  } catch (const AllocationShortage& e) {
    REQUIRE(e.shortages().size() == 1);
    CHECK(e.shortages()[0].topic == 2);
    CHECK(e.shortages()[0].needed == 10);
    CHECK(e.shortages()[0].available == 4);
  }
}

TEST_CASE("shared draw is deterministic and duplicate free") {
  AnnouncementPrelabels pre;
  for (int i = 0; i < 30; ++i) pre["X" + std::to_string(i)] = LabelSet::of({i % 4, (i + 1) % 4});
  const auto a = draw_shared_set(pre, 3, 77, {}, LabelSet::of({0, 1, 2, 3}));
  const auto b = draw_shared_set(pre, 3, 77, {}, LabelSet::of({0, 1, 2, 3}));
  CHECK(a == b);
  std::set<std::string> unique(a.begin(), a.end());
  CHECK(unique.size() == a.size());
  CHECK(a.size() <= 12);
}

TEST_CASE("undercovered topics") {
  Ratings r{{"s1", LabelSet::of({0})}, {"s2", LabelSet::of({0, 1})}};
  const auto low = undercovered_topics(r, 2);
  CHECK_FALSE(low.contains(0));
  CHECK(low.contains(1));
}

TEST_CASE("irrelevant exclusivity") {
  CHECK_NOTHROW(check_irrelevant_exclusivity(rec("s", "a", LabelSet::of({0}))));
  CHECK_THROWS_AS(check_irrelevant_exclusivity(rec("s", "a", LabelSet::of({0}), true)), ValidationError);
  CHECK_NOTHROW(check_irrelevant_exclusivity(rec("s", "a", {}, true)));
}

TEST_CASE("store versions records and keeps comments") {
  const Corpus c = make_corpus(3, 2);
  std::int64_t now = 1000;
  AnnotationStore store(c, team(2), [&] { return now++; });
  PhasePlan plan;
  plan.phase = 1;
  plan.shared_announcements = {"N01"};
  plan.unique_assignments = {{"A1", {"N02"}}, {"A2", {"N03"}}};
  store.open_phase(plan);

  auto r = rec(sid("N01", 0), "A1", {});
  r.comment = "unsure";
  const auto stored = store.record_annotation(r);
  CHECK(stored.version == 1);
  CHECK(stored.comment == std::optional<std::string>("unsure"));
  CHECK(stored.recorded_at == 1000);
  CHECK(store.record_annotation(rec(sid("N01", 0), "A1", LabelSet::of({0}))).version == 2);
  CHECK(store.history(sid("N01", 0), "A1").size() == 2);

  CHECK_THROWS_AS(store.record_annotation(rec(sid("N01", 0), "A1", LabelSet::of({0}), true)), ValidationError);
  CHECK_THROWS_AS(store.record_annotation(rec(sid("N03", 0), "A1", {})), ValidationError);
  CHECK_THROWS_AS(store.record_annotation(rec("N99#0", "A1", {})), NotFoundError);
  CHECK_THROWS_AS(store.record_annotation(rec(sid("N01", 0), "A9", {})), NotFoundError);
}

TEST_CASE("document export unions a sentence labelling; empty export has a header") {
  const Corpus c = make_corpus(1, 2);
  AnnotationStore store(c, team(1));
  PhasePlan plan;
  plan.shared_announcements = {"N01"};
  store.open_phase(plan);
  const auto empty = store.export_annotations(1, Level::sentence, true);
  CHECK(empty.rows.empty());
  const std::string csv = annotation_matrix_csv(empty, Taxonomy::builtin());
  CHECK(csv.rfind("item_id,annotator_id,irrelevant,Earnings,", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1);

  store.record_annotation(rec(sid("N01", 0), "A1", LabelSet::of({0})));
  store.record_annotation(rec(sid("N01", 1), "A1", LabelSet::of({1})));
  CHECK_THROWS_AS(store.export_annotations(1, Level::document), ValidationError);
  store.close_phase(1);
  const auto doc = store.export_annotations(1, Level::document);
  REQUIRE(doc.rows.size() == 1);
  CHECK(doc.rows[0].item_id == "N01");
  CHECK(doc.rows[0].labels == LabelSet::of({0, 1}));
}

TEST_CASE("three annotators by four sentences round-trip through export and import") {
  const Corpus c = make_corpus(2, 2);
  AnnotationStore store(c, team(3));
  PhasePlan plan;
  plan.shared_announcements = {"N01", "N02"};
  store.open_phase(plan);
  int k = 0;
  for (const char* a : {"A1", "A2", "A3"}) {
    for (const char* ann : {"N01", "N02"}) {
      for (std::size_t s = 0; s < 2; ++s, ++k) {
        auto r = rec(sid(ann, s), a, k % 5 == 0 ? LabelSet{} : LabelSet::of({k % 20, (k * 7) % 20}), k % 5 == 0);
        if (k % 3 == 0) r.comment = "note, with \"quotes\"";
        store.record_annotation(r);
      }
    }
  }
  store.close_phase(1);
  const auto m = store.export_annotations(1, Level::sentence);
  CHECK(m.rows.size() == 12);
  const std::string csv = annotation_matrix_csv(m, Taxonomy::builtin());
  std::istringstream in(csv);
  const auto back = read_annotation_matrix(in, Taxonomy::builtin());
  CHECK(back.rows == m.rows);
  CHECK(annotation_matrix_csv(back, Taxonomy::builtin()) == csv);
}

TEST_CASE("gold provenance records joint authorship") {
  AnnotationMatrix m;
  m.rows.push_back({"s1", "A1+A7", LabelSet::of({0}), false, ""});
  m.rows.push_back({"s2", "A1+A7", {}, false, ""});
  const auto g = gold_from_matrix(m);
  CHECK(g.labels.size() == 2);
  CHECK(g.provenance == std::set<std::string>{"A1", "A7"});
}

TEST_CASE("journal replays accepted records") {
  const auto path = std::filesystem::temp_directory_path() / "adhoc_journal_test.jsonl";
  std::filesystem::remove(path);
  const Corpus c = make_corpus(1, 2);
  PhasePlan plan;
  plan.shared_announcements = {"N01"};
  {
    AnnotationStore store(c, team(1));
    store.open_phase(plan);
    store.attach_journal(path);
    store.record_annotation(rec(sid("N01", 0), "A1", LabelSet::of({4})));
    store.record_annotation(rec(sid("N01", 0), "A1", LabelSet::of({5})));
  }
  AnnotationStore again(c, team(1));
  again.open_phase(plan);
  again.attach_journal(path);
  const auto latest = again.latest(sid("N01", 0), "A1");
  REQUIRE(latest);
  CHECK(latest->labels == LabelSet::of({5}));
  CHECK(latest->version == 2);
  std::filesystem::remove(path);
}

TEST_CASE("concurrent writers on distinct keys all land") {
  const Corpus c = make_corpus(8, 5);
  AnnotationStore store(c, team(4));
  PhasePlan plan;
  for (const auto& a : c.announcements()) plan.shared_announcements.push_back(a.id);
  store.open_phase(plan);
  std::vector<std::thread> threads;
  for (int w = 1; w <= 4; ++w) {
    threads.emplace_back([&, w] {
      for (const auto& a : c.announcements()) {
        for (const auto& s : a.sentences) {
          for (int rep = 0; rep < 3; ++rep) store.record_annotation(rec(s.id, "A" + std::to_string(w), LabelSet::of({rep})));
        }
      }
    });
  }
  for (auto& t : threads) t.join();
  CHECK(store.latest_records().size() == 4 * 40);
  for (const auto& r : store.latest_records()) CHECK(r.version == 3);
}

TEST_CASE("service rejects Irrelevant plus topic and bad tokens") {
  const Corpus c = make_corpus(2, 2);
  AnnotationStore store(c, team(2));
  PhasePlan plan;
  plan.shared_announcements = {"N01", "N02"};
  store.open_phase(plan);
  AnnotationService svc(store, Taxonomy::builtin(), {});
  CHECK(svc.next("nope", "A1").status == 401);
  CHECK(svc.next("tok1", "A2").status == 401);
  const auto n = svc.next("tok1", "A1");
  CHECK(n.status == 200);
  CHECK(n.body.at("announcement").at("id") == "N01");
  CHECK_FALSE(n.body.at("announcement").at("sentences").at(0).contains("prelabel"));

  const json bad = {{"records", {{{"sentence_id", sid("N01", 0)}, {"labels", {0}}, {"irrelevant", true}}}}};
  CHECK(svc.submit("tok1", bad).status == 422);
  CHECK_FALSE(store.latest(sid("N01", 0), "A1"));

  const json ok = {{"records",
                    {{{"sentence_id", sid("N01", 0)}, {"labels", {0}}},
                     {{"sentence_id", sid("N01", 1)}, {"labels", json::array()}, {"comment", "unsure"}}}}};
  const auto resp = svc.submit("tok1", ok);
  CHECK(resp.status == 200);
  CHECK(resp.body.at("stored").size() == 2);
  CHECK(svc.progress("tok1", "A1").body.at("progress").at("labeled_sentences") == 2);
  CHECK(svc.next("tok1", "A1").body.at("announcement").at("id") == "N02");
}

TEST_CASE("live HTTP round trip") {
  const Corpus c = make_corpus(2, 2);
  AnnotationStore store(c, team(2));
  PhasePlan plan;
  plan.shared_announcements = {"N01", "N02"};
  store.open_phase(plan);
  GoldStandard gold;
  for (const auto& a : c.announcements()) {
    for (const auto& s : a.sentences) gold.labels[s.id] = LabelSet::of({0});
  }
  gold.provenance = {"I1"};
  ServiceOptions opts;
  opts.gold[1] = gold;
  opts.show_prelabels = true;
  opts.prelabels[sid("N01", 0)] = 3;
  AnnotationService svc(store, Taxonomy::builtin(), opts);
  auto server = make_http_server(svc);
  const int port = server->bind_to_any_port("127.0.0.1");
  REQUIRE(port > 0);
  std::thread t([&] { server->listen_after_bind(); });
  server->wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  auto tax = client.Get("/api/taxonomy");
  REQUIRE(tax);
  CHECK(tax->status == 200);
  CHECK(json::parse(tax->body).at("topics").size() == 20);

  const httplib::Headers h1{{"X-Annotator-Token", "tok1"}};
  auto next = client.Get("/api/annotators/A1/next", h1);
  REQUIRE(next);
  const json nb = json::parse(next->body);
  CHECK(nb.at("announcement").at("sentences").at(0).at("prelabel") == 3);

  for (const char* tok : {"tok1", "tok2"}) {
    json records = json::array();
    for (const auto& a : c.announcements()) {
      for (const auto& s : a.sentences) records.push_back({{"sentence_id", s.id}, {"labels", {0}}});
    }
    auto post = client.Post("/api/annotations", {{"X-Annotator-Token", tok}}, json{{"records", records}}.dump(),
                            "application/json");
    REQUIRE(post);
    CHECK(post->status == 200);
  }
  auto forced = client.Post("/api/annotations", h1,
                            json{{"records", {{{"sentence_id", sid("N01", 0)}, {"labels", {1}}, {"irrelevant", true}}}}}.dump(),
                            "application/json");
  REQUIRE(forced);
  CHECK(forced->status == 422);
  auto malformed = client.Post("/api/annotations", h1, "{oops", "application/json");
  REQUIRE(malformed);
  CHECK(malformed->status == 400);
  auto unauthorized = client.Get("/api/annotators/A1/progress");
  REQUIRE(unauthorized);
  CHECK(unauthorized->status == 401);

  auto agreement = client.Get("/api/agreement/1/sentence");
  REQUIRE(agreement);
  REQUIRE(agreement->status == 200);
  const json ab = json::parse(agreement->body);
  CHECK(ab.at("items") == 4);
  CHECK(ab.at("kappa").at("topics").at(0).at("kappa") == doctest::Approx(1.0));
  // Perfect on topic 0; the 19 topics absent from both sides score 0 (0/0 -> 0).
  CHECK(ab.at("performance").at("annotators").at("A1").at("recall") == doctest::Approx(1.0 / 20));
  server->stop();
  t.join();
}
