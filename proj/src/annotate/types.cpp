#include "adhoc/annotate/types.hpp"

#include <sstream>

#include <nlohmann/json.hpp>

#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

using nlohmann::json;

std::vector<Annotator> annotators_from_json(const json& doc) {
  std::vector<Annotator> out;
  std::set<std::string> ids;
  try {
    for (const auto& a : doc) {
      Annotator an;
      an.id = a.at("id").get<std::string>();
      an.display_name = a.value("display_name", an.id);
      an.is_instructor = a.value("is_instructor", false);
      an.token = a.value("token", "");
      if (an.id.empty()) throw ConfigError("annotator with empty id");
      if (!ids.insert(an.id).second) throw ConfigError("duplicate annotator id " + an.id);
      out.push_back(std::move(an));
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("malformed annotator list: ") + e.what());
  }
  return out;
}

void PhasePlan::validate() const {
  std::set<std::string> shared(shared_announcements.begin(), shared_announcements.end());
  std::map<std::string, std::string> owner;
  for (const auto& [annotator, list] : unique_assignments) {
    for (const auto& id : list) {
      if (shared.count(id)) {
        throw ValidationError("announcement " + id + " is both shared and unique to " + annotator);
      }
      auto [it, inserted] = owner.emplace(id, annotator);
      if (!inserted) {
        throw ValidationError("announcement " + id + " assigned to both " + it->second + " and " +
                              annotator);
      }
    }
  }
}

json PhasePlan::to_json() const {
  json rates = json::object(), draws = json::object();
  for (const auto& [t, r] : topic_rates) rates[std::to_string(t)] = r;
  for (const auto& [t, n] : topic_draws) draws[std::to_string(t)] = n;
  return {{"phase", phase},
          {"shared_announcements", shared_announcements},
          {"unique_assignments", unique_assignments},
          {"per_topic_target", per_topic_target},
          {"topic_rates", rates},
          {"topic_draws", draws}};
}

PhasePlan PhasePlan::from_json(const json& doc) {
  PhasePlan p;
  try {
    p.phase = doc.at("phase").get<int>();
    p.shared_announcements = doc.at("shared_announcements").get<std::vector<std::string>>();
    p.unique_assignments =
        doc.at("unique_assignments").get<std::map<std::string, std::vector<std::string>>>();
    p.per_topic_target = doc.value("per_topic_target", 0);
    const json rates = doc.value("topic_rates", json::object());
    const json draws = doc.value("topic_draws", json::object());
    for (const auto& [k, v] : rates.items()) {
      p.topic_rates[std::stoi(k)] = v.get<double>();
    }
    for (const auto& [k, v] : draws.items()) {
      p.topic_draws[std::stoi(k)] = v.get<std::size_t>();
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed phase plan: ") + e.what());
  }
  if (p.phase < 1 || p.phase > 3) throw ValidationError("phase must be 1, 2 or 3");
  p.validate();
  return p;
}

json AnnotationRecord::to_json() const {
  json doc = {{"sentence_id", sentence_id},
              {"annotator_id", annotator_id},
              {"labels", labels.topics()},
              {"irrelevant", irrelevant},
              {"recorded_at", recorded_at},
              {"version", version}};
  doc["comment"] = comment ? json(*comment) : json(nullptr);
  return doc;
}

AnnotationRecord AnnotationRecord::from_json(const json& doc) {
  AnnotationRecord r;
  try {
    r.sentence_id = doc.at("sentence_id").get<std::string>();
    r.annotator_id = doc.at("annotator_id").get<std::string>();
    for (int t : doc.value("labels", std::vector<int>{})) r.labels.insert(t);
    r.irrelevant = doc.value("irrelevant", false);
    if (doc.contains("comment") && doc.at("comment").is_string()) {
      r.comment = doc.at("comment").get<std::string>();
    }
    r.recorded_at = doc.value("recorded_at", std::int64_t{0});
    r.version = doc.value("version", 0);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed annotation record: ") + e.what());
  }
  return r;
}

void check_irrelevant_exclusivity(const AnnotationRecord& record) {
  if (record.irrelevant && !record.labels.empty()) {
    throw ValidationError("sentence " + record.sentence_id +
                          ": the Irrelevant label cannot be combined with any topic label");
  }
}

void check_gold_covers(const GoldStandard& gold, const Corpus& corpus, const PhasePlan& plan) {
  for (const auto& ann_id : plan.shared_announcements) {
    const Announcement* a = corpus.find_announcement(ann_id);
    if (!a) throw NotFoundError("shared announcement " + ann_id + " not in corpus");
    for (const Sentence& s : a->sentences) {
      if (!gold.labels.count(s.id)) {
        throw ValidationError("gold standard misses shared sentence " + s.id);
      }
    }
  }
}

std::string annotation_matrix_csv(const AnnotationMatrix& matrix, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::Row header{"item_id", "annotator_id", "irrelevant"};
  for (const Topic& t : taxonomy.topics()) header.push_back(t.name);
  header.push_back("comment");
  csv::write_row(out, header);
  for (const auto& row : matrix.rows) {
    csv::Row r{row.item_id, row.annotator_id, row.irrelevant ? "1" : "0"};
    for (TopicId t = 0; t < kNumTopics; ++t) r.push_back(row.labels.contains(t) ? "1" : "0");
    r.push_back(row.comment);
    csv::write_row(out, r);
  }
  return out.str();
}

AnnotationMatrix read_annotation_matrix(std::istream& in, const Taxonomy& taxonomy, Level level) {
  csv::Reader reader(in);
  auto header = reader.next();
  csv::Row expected{"item_id", "annotator_id", "irrelevant"};
  for (const Topic& t : taxonomy.topics()) expected.push_back(t.name);
  expected.push_back("comment");
  if (!header || *header != expected) {
    throw ValidationError("annotation matrix header must be item_id,annotator_id,irrelevant,"
                          "<20 topic names>,comment");
  }
  AnnotationMatrix m;
  m.level = level;
  while (auto row = reader.next()) {
    const std::string where = "annotation matrix line " + std::to_string(reader.line());
    if (row->size() != expected.size()) throw ValidationError(where + ": wrong field count");
    AnnotationRow r;
    r.item_id = (*row)[0];
    r.annotator_id = (*row)[1];
    auto flag = [&](const std::string& v) {
      if (v == "1") return true;
      if (v == "0") return false;
      throw ValidationError(where + ": expected 0 or 1, got '" + v + "'");
    };
    r.irrelevant = flag((*row)[2]);
    for (TopicId t = 0; t < kNumTopics; ++t) {
      if (flag((*row)[3 + static_cast<std::size_t>(t)])) r.labels.insert(t);
    }
    r.comment = row->back();
    if (r.irrelevant && !r.labels.empty()) {
      throw ValidationError(where + ": the Irrelevant label cannot be combined with topic labels");
    }
    m.rows.push_back(std::move(r));
  }
  return m;
}

AnnotatorRatings to_ratings(const AnnotationMatrix& matrix) {
  AnnotatorRatings out;
  for (const auto& row : matrix.rows) out[row.annotator_id][row.item_id] = row.labels;
  return out;
}

GoldStandard gold_from_matrix(const AnnotationMatrix& matrix) {
  GoldStandard gold;
  for (const auto& row : matrix.rows) {
    if (!gold.labels.emplace(row.item_id, row.labels).second) {
      throw ValidationError("gold standard has two rows for item " + row.item_id);
    }
    std::stringstream ss(row.annotator_id);
    std::string author;
    while (std::getline(ss, author, '+')) {
      if (!author.empty()) gold.provenance.insert(author);
    }
  }
  return gold;
}

}  // namespace adhoc
