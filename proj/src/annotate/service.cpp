#include "adhoc/annotate/service.hpp"

#include <httplib.h>

#include "adhoc/agreement/performance.hpp"
#include "adhoc/core/error.hpp"

namespace adhoc {

using nlohmann::json;

namespace {

ApiResponse error_response(const Error& e) {
  int status = 500;
  switch (e.kind()) {
    case ErrorKind::validation:
    case ErrorKind::degenerate:
      status = 422;
      break;
    case ErrorKind::not_found:
      status = 404;
      break;
    case ErrorKind::config:
    case ErrorKind::missing_input:
      status = 400;
      break;
    case ErrorKind::internal:
      status = 500;
      break;
  }
  return {status, {{"error", e.what()}}};
}

class Unauthorized : public Error {
public:
  Unauthorized() : Error(ErrorKind::validation, "invalid annotator token") {}
};

template <typename F>
ApiResponse guarded(F&& f) {
  try {
    return f();
  } catch (const Unauthorized& e) {
    return {401, {{"error", e.what()}}};
  } catch (const Error& e) {
    return error_response(e);
  } catch (const json::exception& e) {
    return {400, {{"error", std::string("malformed request: ") + e.what()}}};
  }
}

json progress_json(const Progress& p) {
  return {{"assigned_announcements", p.assigned_announcements},
          {"completed_announcements", p.completed_announcements},
          {"assigned_sentences", p.assigned_sentences},
          {"labeled_sentences", p.labeled_sentences}};
}

json prf1_json(const Prf1& m) {
  return {{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}};
}

}  // namespace

AnnotationService::AnnotationService(AnnotationStore& store, const Taxonomy& taxonomy,
                                     ServiceOptions options)
    : store_(store), taxonomy_(taxonomy), options_(std::move(options)) {}

const Annotator& AnnotationService::authenticate(const std::string& token,
                                                 const std::string& annotator_id) const {
  const Annotator* a = store_.annotator_by_token(token);
  if (!a || (!annotator_id.empty() && a->id != annotator_id)) throw Unauthorized();
  return *a;
}

ApiResponse AnnotationService::next(const std::string& token,
                                    const std::string& annotator_id) const {
  return guarded([&]() -> ApiResponse {
    const Annotator& a = authenticate(token, annotator_id);
    auto next = store_.next_announcement(a.id);
    if (!next) return {200, {{"done", true}, {"progress", progress_json(store_.progress(a.id))}}};
    const Announcement* ann = store_.corpus().find_announcement(next->second);
    json sentences = json::array();
    for (const Sentence& s : ann->sentences) {
      json row = {{"sentence_id", s.id}, {"ordinal", s.ordinal}, {"text", s.text}};
      if (auto r = store_.latest(s.id, a.id)) row["current"] = r->to_json();
      if (options_.show_prelabels) {
        auto it = options_.prelabels.find(s.id);
        row["prelabel"] = it == options_.prelabels.end() ? json(nullptr) : json(it->second);
      }
      sentences.push_back(std::move(row));
    }
    return {200,
            {{"done", false},
             {"phase", next->first},
             {"announcement",
              {{"id", ann->id},
               {"firm_id", ann->firm_id},
               {"date", ann->published_at.to_string()},
               {"sentences", sentences}}}}};
  });
}

ApiResponse AnnotationService::submit(const std::string& token, const json& body) {
  return guarded([&]() -> ApiResponse {
    const std::string claimed = body.value("annotator_id", "");
    const Annotator& a = authenticate(token, claimed);
    const json& items = body.at("records");
    if (!items.is_array()) throw ValidationError("'records' must be an array");

    // Validate the whole batch before storing any of it.
    std::vector<AnnotationRecord> batch;
    std::vector<json> rejected;
    for (const json& item : items) {
      AnnotationRecord r;
      r.annotator_id = a.id;
      r.sentence_id = item.at("sentence_id").get<std::string>();
      for (int t : item.value("labels", std::vector<int>{})) r.labels.insert(t);
      r.irrelevant = item.value("irrelevant", false);
      if (item.contains("comment") && item.at("comment").is_string()) {
        r.comment = item.at("comment").get<std::string>();
      }
      try {
        check_irrelevant_exclusivity(r);
        if (!store_.corpus().find_sentence(r.sentence_id)) {
          throw NotFoundError("unknown sentence " + r.sentence_id);
        }
      } catch (const Error& e) {
        rejected.push_back({{"sentence_id", r.sentence_id}, {"error", e.what()}});
        continue;
      }
      batch.push_back(std::move(r));
    }
    if (!rejected.empty()) return {422, {{"error", "batch rejected"}, {"rejected", rejected}}};

    json stored = json::array();
    for (auto& r : batch) stored.push_back(store_.record_annotation(std::move(r)).to_json());
    return {200, {{"stored", stored}}};
  });
}

ApiResponse AnnotationService::progress(const std::string& token,
                                        const std::string& annotator_id) const {
  return guarded([&]() -> ApiResponse {
    const Annotator& a = authenticate(token, annotator_id);
    return {200, {{"annotator_id", a.id}, {"progress", progress_json(store_.progress(a.id))}}};
  });
}

ApiResponse AnnotationService::agreement(int phase, const std::string& level_text) const {
  return guarded([&]() -> ApiResponse {
    const Level level = parse_level(level_text);
    const PhasePlan& plan = store_.plan(phase);
    const AnnotationMatrix m = store_.export_annotations(phase, level, true);
    AnnotatorRatings ratings = to_ratings(m);

    std::vector<std::string> items;
    for (const auto& ann_id : plan.shared_announcements) {
      const Announcement* a = store_.corpus().find_announcement(ann_id);
      if (level == Level::document) {
        items.push_back(a->id);
      } else {
        for (const Sentence& s : a->sentences) items.push_back(s.id);
      }
    }
    // Kappa is defined on the items every annotator has rated.
    std::vector<std::string> complete;
    for (const auto& item : items) {
      bool all = !ratings.empty();
      for (const auto& [_, r] : ratings) all = all && r.count(item);
      if (all) complete.push_back(item);
    }

    json body = {{"phase", phase}, {"level", level_text}, {"items", complete.size()}};
    LabelSet excluded;
    auto gold_it = options_.gold.find(phase);
    if (gold_it != options_.gold.end() && phase >= 2) {
      excluded = low_coverage_topics(gold_it->second.labels, options_.min_topic_coverage);
    }
    if (ratings.size() >= 2 && !complete.empty()) {
      const KappaReport k = kappa_report(ratings, complete, excluded);
      json topics = json::array();
      for (const auto& tk : k.topics) {
        topics.push_back({{"topic", taxonomy_.name(tk.topic)},
                          {"kappa", tk.kappa},
                          {"band", band_label(tk.band)},
                          {"degenerate", tk.degenerate}});
      }
      body["kappa"] = {{"topics", topics},
                       {"average", k.average},
                       {"band", band_label(k.average_band)},
                       {"raters", k.raters}};
    }
    if (gold_it != options_.gold.end()) {
      Ratings gold = gold_it->second.labels;
      if (level == Level::document) gold = to_document_level(store_.corpus(), gold);
      AnnotatorRatings scored;
      for (auto& [annotator, r] : ratings) {
        if (gold_it->second.provenance.count(annotator)) continue;
        bool overlaps = false;
        for (const auto& [item, _] : r) overlaps = overlaps || gold.count(item);
        if (overlaps) scored[annotator] = r;
      }
      if (!scored.empty()) {
        const PerformanceTable t = annotator_performance(scored, gold, excluded);
        json rows = json::object();
        for (const auto& a : t.annotators) rows[a] = prf1_json(t.annotator_macro.at(a));
        body["performance"] = {{"annotators", rows}, {"average", prf1_json(t.average)}};
      }
    }
    return {200, body};
  });
}

ApiResponse AnnotationService::taxonomy() const { return {200, taxonomy_.to_json()}; }

std::unique_ptr<httplib::Server> make_http_server(AnnotationService& service) {
  auto server = std::make_unique<httplib::Server>();
  auto reply = [](httplib::Response& res, const ApiResponse& r) {
    res.status = r.status;
    res.set_content(r.body.dump(), "application/json");
  };
  auto token_of = [](const httplib::Request& req) {
    return req.get_header_value("X-Annotator-Token");
  };

  server->Get("/api/taxonomy", [&service, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, service.taxonomy());
  });
  server->Get(R"(/api/annotators/([^/]+)/next)",
              [&service, reply, token_of](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.next(token_of(req), req.matches[1]));
              });
  server->Get(R"(/api/annotators/([^/]+)/progress)",
              [&service, reply, token_of](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.progress(token_of(req), req.matches[1]));
              });
  server->Post("/api/annotations",
               [&service, reply, token_of](const httplib::Request& req, httplib::Response& res) {
                 json body;
                 try {
                   body = json::parse(req.body);
                 } catch (const json::exception& e) {
                   reply(res, {400, {{"error", std::string("malformed JSON: ") + e.what()}}});
                   return;
                 }
                 reply(res, service.submit(token_of(req), body));
               });
  server->Get(R"(/api/agreement/(\d+)/(sentence|document))",
              [&service, reply](const httplib::Request& req, httplib::Response& res) {
                reply(res, service.agreement(std::stoi(req.matches[1]), req.matches[2]));
              });
  return server;
}

}  // namespace adhoc
