#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "adhoc/agreement/kappa.hpp"
#include "adhoc/corpus/corpus.hpp"
#include "adhoc/corpus/topic.hpp"

namespace adhoc {

struct Annotator {
  std::string id;  // e.g. "A1".."A9"
  std::string display_name;
  bool is_instructor = false;
  std::string token;  // static API token
};

std::vector<Annotator> annotators_from_json(const nlohmann::json& doc);

struct PhasePlan {
  int phase = 1;
  // Gold-overlap announcements labelled by every annotator.
  std::vector<std::string> shared_announcements;
  // Announcements labelled by exactly one annotator.
  std::map<std::string, std::vector<std::string>> unique_assignments;
  int per_topic_target = 0;
  // Labelled sentences per announcement, per topic, used for the draw.
  std::map<TopicId, double> topic_rates;
  // Announcements per annotator, per topic.
  std::map<TopicId, std::size_t> topic_draws;

  // Throws ValidationError if unique sets overlap each other or the shared set.
  void validate() const;
  nlohmann::json to_json() const;
  static PhasePlan from_json(const nlohmann::json& doc);
};

struct AnnotationRecord {
  std::string sentence_id;
  std::string annotator_id;
  LabelSet labels;
  bool irrelevant = false;
  std::optional<std::string> comment;
  std::int64_t recorded_at = 0;  // unix milliseconds, set by the store
  int version = 0;               // 1-based per (sentence, annotator), set by the store

  nlohmann::json to_json() const;
  static AnnotationRecord from_json(const nlohmann::json& doc);
};

// Throws ValidationError when Irrelevant is combined with topic labels.
void check_irrelevant_exclusivity(const AnnotationRecord& record);

struct GoldStandard {
  Ratings labels;  // sentence id -> labels
  std::set<std::string> provenance;
};

// Throws ValidationError naming the first shared sentence the gold misses.
void check_gold_covers(const GoldStandard& gold, const Corpus& corpus, const PhasePlan& plan);

struct AnnotationRow {
  std::string item_id;
  std::string annotator_id;
  LabelSet labels;
  bool irrelevant = false;
  std::string comment;
  friend bool operator==(const AnnotationRow&, const AnnotationRow&) = default;
};

struct AnnotationMatrix {
  Level level = Level::sentence;
  std::vector<AnnotationRow> rows;
};

// Header: item_id,annotator_id,irrelevant,<20 topic names>,comment.
std::string annotation_matrix_csv(const AnnotationMatrix& matrix, const Taxonomy& taxonomy);
AnnotationMatrix read_annotation_matrix(std::istream& in, const Taxonomy& taxonomy,
                                        Level level = Level::sentence);
AnnotatorRatings to_ratings(const AnnotationMatrix& matrix);

// Gold labels from a matrix, one row per item. annotator_id values such as
// "A1+A7" record joint authorship in the provenance set.
GoldStandard gold_from_matrix(const AnnotationMatrix& matrix);

}  // namespace adhoc
