#pragma once

#include <functional>
#include <istream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "adhoc/classify/trainer.hpp"
#include "adhoc/corpus/corpus.hpp"

namespace adhoc {

// One row of 20 topic probabilities per item.
struct ScoreMatrix {
  std::vector<std::string> ids;
  Eigen::MatrixXd scores;

  std::size_t rows() const noexcept { return ids.size(); }
};

// Throws ValidationError on a shape mismatch or a score outside [0, 1].
void validate_scores(const ScoreMatrix& m);

struct Predictions {
  std::vector<std::string> ids;
  std::vector<LabelSet> labels;
};

// A topic is predicted iff its score is strictly above the threshold.
Predictions predict(const ScoreMatrix& m, double threshold);

// Union of the sentence predictions per announcement, in corpus order.
// Sentence ids must resolve in `corpus`; announcements without a scored
// sentence are omitted.
Predictions aggregate_predictions(const Corpus& corpus, const Predictions& sentences);

ScoreMatrix score_texts(const NnModel& model, const Vocabulary& vocab,
                        std::span<const LabeledText> texts);

// Header `item_id,<20 topic names>`; values written round-trip exact.
std::string score_matrix_csv(const ScoreMatrix& m, const Taxonomy& taxonomy);
// Same layout with 0/1 cells.
std::string predictions_csv(const Predictions& p, const Taxonomy& taxonomy);

struct ScoreRejection {
  std::size_t line = 0;
  std::string item_id;
  std::string reason;
};

struct ScoreIngestResult {
  ScoreMatrix matrix;
  std::vector<ScoreRejection> rejections;
};

// Reads a score matrix produced by any model. A malformed header fails the
// whole file (ValidationError); bad rows are rejected one by one. Passing
// no `known_id` accepts every id.
ScoreIngestResult ingest_external_scores(
    std::istream& in, const Taxonomy& taxonomy,
    const std::function<bool(std::string_view)>& known_id = {});

}  // namespace adhoc
