#include "adhoc/classify/predict.hpp"

#include <cmath>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "adhoc/core/csv.hpp"
#include "adhoc/core/error.hpp"
#include "adhoc/core/format.hpp"

namespace adhoc {

void validate_scores(const ScoreMatrix& m) {
  if (m.scores.rows() != static_cast<Eigen::Index>(m.ids.size()) ||
      (m.scores.rows() > 0 && m.scores.cols() != kNumTopics)) {
    throw ValidationError("score matrix must have one row of 20 scores per item");
  }
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.scores.cols(); ++j) {
      const double v = m.scores(i, j);
      if (!(v >= 0.0 && v <= 1.0)) {
        throw ValidationError("score " + format_double(v) + " for item '" +
                              m.ids[static_cast<std::size_t>(i)] + "' topic " +
                              std::to_string(j) + " outside [0, 1]");
      }
    }
  }
}

Predictions predict(const ScoreMatrix& m, double threshold) {
  validate_scores(m);
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw ValidationError("threshold must lie in [0, 1]");
  Predictions p;
  p.ids = m.ids;
  p.labels.resize(m.ids.size());
  for (Eigen::Index i = 0; i < m.scores.rows(); ++i) {
    for (int t = 0; t < kNumTopics; ++t) {
      if (m.scores(i, t) > threshold) p.labels[static_cast<std::size_t>(i)].insert(t);
    }
  }
  return p;
}

Predictions aggregate_predictions(const Corpus& corpus, const Predictions& sentences) {
  std::unordered_map<std::string, LabelSet> per_doc;
  for (std::size_t i = 0; i < sentences.ids.size(); ++i) {
    const Announcement& a = corpus.announcement_of(sentences.ids[i]);
    per_doc[a.id] |= sentences.labels[i];
  }
  Predictions out;
  for (const Announcement& a : corpus.announcements()) {
    auto it = per_doc.find(a.id);
    if (it == per_doc.end()) continue;
    out.ids.push_back(a.id);
    out.labels.push_back(it->second);
  }
  return out;
}

ScoreMatrix score_texts(const NnModel& model, const Vocabulary& vocab,
                        std::span<const LabeledText> texts) {
  ScoreMatrix m;
  m.scores.resize(static_cast<Eigen::Index>(texts.size()), kNumTopics);
  for (std::size_t i = 0; i < texts.size(); ++i) {
    m.ids.push_back(texts[i].id);
    const auto tokens = vocab.encode(std::string_view(texts[i].text));
    m.scores.row(static_cast<Eigen::Index>(i)) = model.forward(tokens).transpose();
  }
  return m;
}

namespace {

csv::Row header_row(const Taxonomy& taxonomy) {
  csv::Row header{"item_id"};
  for (const Topic& t : taxonomy.topics()) header.push_back(t.name);
  return header;
}

}  // namespace

std::string score_matrix_csv(const ScoreMatrix& m, const Taxonomy& taxonomy) {
  validate_scores(m);
  std::ostringstream out;
  csv::write_row(out, header_row(taxonomy));
  for (std::size_t i = 0; i < m.ids.size(); ++i) {
    csv::Row row{m.ids[i]};
    for (int t = 0; t < kNumTopics; ++t) {
      row.push_back(format_double(m.scores(static_cast<Eigen::Index>(i), t)));
    }
    csv::write_row(out, row);
  }
  return out.str();
}

std::string predictions_csv(const Predictions& p, const Taxonomy& taxonomy) {
  std::ostringstream out;
  csv::write_row(out, header_row(taxonomy));
  for (std::size_t i = 0; i < p.ids.size(); ++i) {
    csv::Row row{p.ids[i]};
    for (int t = 0; t < kNumTopics; ++t) row.push_back(p.labels[i].contains(t) ? "1" : "0");
    csv::write_row(out, row);
  }
  return out.str();
}

ScoreIngestResult ingest_external_scores(std::istream& in, const Taxonomy& taxonomy,
                                         const std::function<bool(std::string_view)>& known_id) {
  csv::Reader reader(in);
  const auto header = reader.next();
  if (!header) throw ValidationError("score file is empty");
  if (*header != header_row(taxonomy)) {
    throw ValidationError("score file header must be item_id followed by the 20 topic names in "
                          "taxonomy order");
  }
  ScoreIngestResult result;
  std::vector<std::array<double, kNumTopics>> rows;
  std::unordered_set<std::string> seen;
  while (auto row = reader.next()) {
    const std::size_t line = reader.line();
    const std::string id = row->empty() ? std::string() : (*row)[0];
    auto reject = [&](std::string reason) {
      result.rejections.push_back({line, id, std::move(reason)});
    };
    if (row->size() != kNumTopics + 1) {
      reject("expected 21 fields, got " + std::to_string(row->size()));
      continue;
    }
    if (id.empty()) {
      reject("empty item id");
      continue;
    }
    if (known_id && !known_id(id)) {
      reject("unknown item id");
      continue;
    }
    if (seen.count(id)) {
      reject("duplicate item id");
      continue;
    }
    std::array<double, kNumTopics> values{};
    std::string problem;
    for (int t = 0; t < kNumTopics && problem.empty(); ++t) {
      const std::string& cell = (*row)[static_cast<std::size_t>(t) + 1];
      try {
        values[static_cast<std::size_t>(t)] = parse_double(cell);
      } catch (const ValidationError&) {
        problem = "non-numeric value '" + cell + "' for topic " + taxonomy.name(t);
        break;
      }
      const double v = values[static_cast<std::size_t>(t)];
      if (!(v >= 0.0 && v <= 1.0)) {
        problem = "value " + cell + " for topic " + taxonomy.name(t) + " outside [0, 1]";
      }
    }
    if (!problem.empty()) {
      reject(problem);
      continue;
    }
    seen.insert(id);
    result.matrix.ids.push_back(id);
    rows.push_back(values);
  }
  result.matrix.scores.resize(static_cast<Eigen::Index>(rows.size()), kNumTopics);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (int t = 0; t < kNumTopics; ++t) {
      result.matrix.scores(static_cast<Eigen::Index>(i), t) = rows[i][static_cast<std::size_t>(t)];
    }
  }
  return result;
}

}  // namespace adhoc
