#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "adhoc/annotate/types.hpp"
#include "adhoc/core/error.hpp"

namespace adhoc {

using AnnouncementPrelabels = std::map<std::string, LabelSet>;

struct Shortage {
  TopicId topic = 0;
  std::string topic_name;
  std::size_t needed = 0;
  std::size_t available = 0;
};

class AllocationShortage : public ValidationError {
public:
  AllocationShortage(std::vector<Shortage> shortages, const std::string& message)
      : ValidationError(message), shortages_(std::move(shortages)) {}
  const std::vector<Shortage>& shortages() const noexcept { return shortages_; }

private:
  std::vector<Shortage> shortages_;
};

// Draws per_topic announcements for each topic among those whose pre-labels
// include it, then removes duplicates (an announcement drawn for two topics
// appears once). Draw order is kept.
std::vector<std::string> draw_shared_set(const AnnouncementPrelabels& prelabels,
                                         std::size_t per_topic, std::uint64_t seed,
                                         const std::set<std::string>& exclude = {},
                                         LabelSet topics = LabelSet::from_bits(LabelSet::kAllBits));

// rate(t): mean number of t-labelled gold sentences over the gold
// announcements that contain t. Throws ValidationError for a topic in
// `topics` with no labelled gold sentence.
std::map<TopicId, double> topic_rates(const Corpus& corpus, const GoldStandard& gold,
                                      LabelSet topics = LabelSet::from_bits(LabelSet::kAllBits));

struct AllocationRequest {
  int phase = 2;
  int per_topic_sentence_target = 50;
  std::uint64_t seed = 0;
  std::vector<std::string> shared_announcements;
  // Announcements already used in earlier phases.
  std::set<std::string> exclude;
  LabelSet topics = LabelSet::from_bits(LabelSet::kAllBits);
};

// Each annotator receives ceil(target / rate(t)) announcements of topic t,
// drawn without replacement from the t-pre-labelled pool; unique sets are
// disjoint across annotators and from the shared set. Throws
// AllocationShortage listing every topic whose pool runs out.
PhasePlan allocate_balanced(const Corpus& corpus, const AnnouncementPrelabels& prelabels,
                            const GoldStandard& phase1_gold,
                            const std::vector<Annotator>& annotators,
                            const AllocationRequest& request, const Taxonomy& taxonomy);

// Topics labelled in fewer than min_sentences sentences so far.
LabelSet undercovered_topics(const Ratings& labels, std::size_t min_sentences);

}  // namespace adhoc
