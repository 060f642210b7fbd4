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

#include "adhoc/core/date.hpp"
#include "adhoc/core/stats.hpp"
#include "adhoc/corpus/segment.hpp"
#include "adhoc/corpus/topic.hpp"

namespace adhoc {

enum class Source { primary_provider, register_ };

std::string_view to_string(Source s);
Source parse_source(std::string_view text);

struct Sentence {
  std::string id;
  std::string announcement_id;
  std::size_t ordinal = 0;
  std::string text;
};

struct Announcement {
  std::string id;
  std::string firm_id;
  Date published_at;
  Source source = Source::primary_provider;
  std::vector<Sentence> sentences;
};

std::string make_sentence_id(std::string_view announcement_id, std::size_t ordinal);

// Immutable after construction; safe for concurrent readers.
class Corpus {
public:
  Corpus() = default;
  explicit Corpus(std::vector<Announcement> announcements);

  const std::vector<Announcement>& announcements() const noexcept { return announcements_; }
  std::size_t sentence_count() const noexcept { return sentence_index_.size(); }
  bool empty() const noexcept { return announcements_.empty(); }

  const Announcement* find_announcement(std::string_view id) const;
  const Sentence* find_sentence(std::string_view id) const;
  // Throws NotFoundError.
  const Announcement& announcement_of(std::string_view sentence_id) const;

  // All sentences in corpus order.
  std::vector<const Sentence*> sentences() const;

private:
  std::vector<Announcement> announcements_;
  std::unordered_map<std::string, std::size_t> announcement_index_;
  std::unordered_map<std::string, std::pair<std::size_t, std::size_t>> sentence_index_;
};

struct IngestOptions {
  Segmenter segmenter;
  std::optional<Date> min_date;
  std::optional<Date> max_date;
};

struct Rejection {
  std::size_t line = 0;
  std::string reason;
};

struct IngestResult {
  Corpus corpus;
  std::vector<Rejection> rejections;
  // Records dropped as duplicates, as "dropped_id -> kept_id".
  std::vector<std::pair<std::string, std::string>> duplicates;
};

// Reads line-delimited JSON announcement records. Malformed records are
// rejected individually; an empty resulting corpus throws ValidationError.
IngestResult ingest_corpus(std::istream& records, const Taxonomy& taxonomy,
                           const IngestOptions& options = {});

// Canonical line format: one segmented announcement per line, keys sorted.
std::string serialize_corpus(const Corpus& corpus);
Corpus load_corpus(std::istream& canonical);

// Unit of labelling and evaluation.
enum class Level { sentence, document };
std::string_view to_string(Level level);
Level parse_level(std::string_view text);

LabelSet aggregate_to_document(std::span<const LabelSet> sentence_labels);

using SentenceLabels = std::map<std::string, LabelSet>;

// Document-level labels for every announcement (unlabelled sentences count as empty).
std::vector<LabelSet> document_labels(const Corpus& corpus, const SentenceLabels& labels);

struct LevelStats {
  stats::Summary texts_per_announcement;
  stats::Summary labels_per_text;
  stats::Summary labels_per_topic;
};

struct CorpusStats {
  LevelStats sentence;
  LevelStats document;
};

CorpusStats corpus_stats(const Corpus& corpus, const SentenceLabels& labels);
std::string corpus_stats_csv(const CorpusStats& stats);
std::string corpus_stats_json(const CorpusStats& stats);

using PairCounts = std::map<std::pair<TopicId, TopicId>, std::size_t>;

// Unordered topic pairs (first < second) counted over documents.
PairCounts cooccurrence_counts(std::span<const LabelSet> document_labels);

}  // namespace adhoc
