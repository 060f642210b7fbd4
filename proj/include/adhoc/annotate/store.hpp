#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <utility>
#include <vector>

#include "adhoc/annotate/types.hpp"

namespace adhoc {

struct Progress {
  std::size_t assigned_announcements = 0;
  std::size_t completed_announcements = 0;
  std::size_t assigned_sentences = 0;
  std::size_t labeled_sentences = 0;
};

// Versioned annotation storage keyed by (sentence, annotator). Writers to
// distinct keys do not contend; same-key writes are serialised.
class AnnotationStore {
public:
  using Clock = std::function<std::int64_t()>;

  AnnotationStore(const Corpus& corpus, std::vector<Annotator> annotators, Clock clock = {});

  const Corpus& corpus() const noexcept { return corpus_; }
  const std::vector<Annotator>& annotators() const noexcept { return annotators_; }
  // Throws NotFoundError.
  const Annotator& annotator(std::string_view id) const;
  const Annotator* annotator_by_token(std::string_view token) const;

  void open_phase(PhasePlan plan);
  void close_phase(int phase);
  bool is_open(int phase) const;
  const PhasePlan& plan(int phase) const;

  // Validates, stamps time and version, persists. Rejects Irrelevant with
  // topic labels, unknown ids, and sentences not assigned to the annotator
  // in an open phase.
  AnnotationRecord record_annotation(AnnotationRecord record);

  std::optional<AnnotationRecord> latest(std::string_view sentence_id,
                                         std::string_view annotator_id) const;
  std::vector<AnnotationRecord> history(std::string_view sentence_id,
                                        std::string_view annotator_id) const;
  std::vector<AnnotationRecord> latest_records() const;

  // Announcements of the phase in assignment order for one annotator:
  // shared set first, then the annotator's unique set.
  std::vector<std::string> assignment(int phase, std::string_view annotator_id) const;
  // First assigned announcement in an open phase with an unlabelled sentence.
  std::optional<std::pair<int, std::string>> next_announcement(std::string_view annotator_id) const;
  Progress progress(std::string_view annotator_id) const;

  // Latest records of a phase. Document level unions each annotator's
  // sentence labels per announcement. Throws ValidationError for an open
  // phase unless allow_partial is set.
  AnnotationMatrix export_annotations(int phase, Level level, bool allow_partial = false) const;

  // Appends every accepted record as a JSON line; replays existing lines first.
  void attach_journal(const std::filesystem::path& path);

private:
  using Key = std::pair<std::string, std::string>;

  std::optional<int> open_phase_of(const std::string& announcement_id,
                                   const std::string& annotator_id) const;
  AnnotationRecord store_locked(AnnotationRecord record);

  const Corpus& corpus_;
  std::vector<Annotator> annotators_;
  Clock clock_;

  mutable std::shared_mutex mutex_;
  std::map<int, PhasePlan> plans_;
  std::map<int, bool> open_;
  std::map<Key, std::vector<AnnotationRecord>> records_;
  std::ofstream journal_;
};

}  // namespace adhoc
