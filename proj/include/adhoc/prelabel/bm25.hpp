#pragma once

#include <cstddef>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "adhoc/corpus/corpus.hpp"
#include "adhoc/corpus/topic.hpp"

namespace adhoc {

struct Bm25Params {
  double k1 = 1.2;
  double b = 0.75;
  double score_threshold = 0.0;

  // Throws ConfigError unless k1 > 0, b in [0, 1], threshold >= 0.
  void validate() const;
};

// Okapi BM25 statistics over a collection of sentences, tokenized with
// adhoc::tokenize (no vocabulary truncation).
class Bm25Index {
public:
  static Bm25Index build(const Corpus& corpus);
  // Generic entry point: (id, text) pairs in collection order.
  static Bm25Index build(std::span<const std::pair<std::string, std::string>> documents);

  std::size_t size() const noexcept { return lengths_.size(); }
  double average_length() const noexcept { return average_length_; }
  std::size_t length(std::size_t doc) const { return lengths_.at(doc); }
  const std::string& id(std::size_t doc) const { return ids_.at(doc); }
  std::size_t vocabulary_size() const noexcept { return terms_.size(); }
  std::size_t document_frequency(std::string_view term) const;
  std::size_t term_frequency(std::size_t doc, std::string_view term) const;
  // Throws NotFoundError.
  std::size_t index_of(std::string_view id) const;

  // ln((N - df + 0.5) / (df + 0.5) + 1); non-negative for every df.
  double idf(std::string_view term) const;

  // Sum over query terms (repeats included) of
  // idf * tf (k1 + 1) / (tf + k1 (1 - b + b len / avglen)).
  double score(std::span<const std::string> query, std::size_t doc,
               const Bm25Params& params) const;
  double score(std::span<const std::string> query, std::string_view id,
               const Bm25Params& params) const {
    return score(query, index_of(id), params);
  }

private:
  std::optional<int> term_id(std::string_view term) const;

  std::vector<std::string> ids_;
  std::unordered_map<std::string, std::size_t> id_index_;
  std::unordered_map<std::string, int> terms_;
  std::vector<std::size_t> df_;
  // Per document: sorted (term id, count).
  std::vector<std::vector<std::pair<int, std::size_t>>> tf_;
  std::vector<std::size_t> lengths_;
  double average_length_ = 0.0;
};

// Tokenized keyword list with duplicate terms removed, in first-seen order.
std::vector<std::string> topic_query(const Topic& topic);

struct PreLabel {
  std::string sentence_id;
  std::optional<TopicId> topic;
  // Best topic score, whether or not it cleared the threshold.
  double score = 0.0;
};

// Per sentence: the argmax topic if its score exceeds the threshold; ties go
// to the lowest topic id.
std::vector<PreLabel> prelabel_corpus(const Corpus& corpus, const Taxonomy& taxonomy,
                                      const Bm25Params& params);

// Announcement id -> topics carried by at least one of its sentences.
std::map<std::string, LabelSet> announcement_prelabels(const Corpus& corpus,
                                                       std::span<const PreLabel> prelabels);

// Rows "sentence_id,topic_id,score" with topic_id "none" when unlabelled.
std::string prelabels_csv(std::span<const PreLabel> prelabels);
std::vector<PreLabel> read_prelabels_csv(std::istream& in);

}  // namespace adhoc
