#include "adhoc/annotate/allocation.hpp"

#include <algorithm>

#include "adhoc/core/rng.hpp"

namespace adhoc {
namespace {

std::vector<std::string> pool_for(const AnnouncementPrelabels& prelabels, TopicId t,
                                  const std::set<std::string>& used) {
  std::vector<std::string> pool;
  for (const auto& [id, labels] : prelabels) {
    if (labels.contains(t) && !used.count(id)) pool.push_back(id);
  }
  return pool;
}

// Partial Fisher-Yates: the first k entries become a uniform sample.
std::vector<std::string> sample(std::vector<std::string> pool, std::size_t k, Rng& rng) {
  k = std::min(k, pool.size());
  for (std::size_t i = 0; i < k; ++i) {
    const std::size_t j = i + static_cast<std::size_t>(rng.below(pool.size() - i));
    std::swap(pool[i], pool[j]);
  }
  pool.resize(k);
  return pool;
}

}  // namespace

std::vector<std::string> draw_shared_set(const AnnouncementPrelabels& prelabels,
                                         std::size_t per_topic, std::uint64_t seed,
                                         const std::set<std::string>& exclude, LabelSet topics) {
  Rng rng(seed);
  std::vector<std::string> out;
  std::set<std::string> seen;
  for (TopicId t : topics.topics()) {
    for (auto& id : sample(pool_for(prelabels, t, exclude), per_topic, rng)) {
      if (seen.insert(id).second) out.push_back(std::move(id));
    }
  }
  return out;
}

std::map<TopicId, double> topic_rates(const Corpus& corpus, const GoldStandard& gold,
                                      LabelSet topics) {
  std::array<std::size_t, kNumTopics> sentences{}, announcements{};
  std::map<std::string, std::array<std::size_t, kNumTopics>> per_announcement;
  for (const auto& [sentence_id, labels] : gold.labels) {
    const Announcement& a = corpus.announcement_of(sentence_id);
    auto& counts = per_announcement[a.id];
    for (TopicId t : labels.topics()) ++counts[static_cast<std::size_t>(t)];
  }
  for (const auto& [id, counts] : per_announcement) {
    for (std::size_t t = 0; t < counts.size(); ++t) {
      if (counts[t]) {
        sentences[t] += counts[t];
        ++announcements[t];
      }
    }
  }
  std::map<TopicId, double> rates;
  for (TopicId t : topics.topics()) {
    const auto ti = static_cast<std::size_t>(t);
    if (announcements[ti] == 0) {
      throw ValidationError("phase-1 gold has no labelled sentence for topic " +
                            std::to_string(t) + "; its allocation rate is undefined");
    }
    rates[t] = static_cast<double>(sentences[ti]) / static_cast<double>(announcements[ti]);
  }
  return rates;
}

PhasePlan allocate_balanced(const Corpus& corpus, const AnnouncementPrelabels& prelabels,
                            const GoldStandard& phase1_gold,
                            const std::vector<Annotator>& annotators,
                            const AllocationRequest& request, const Taxonomy& taxonomy) {
  if (annotators.empty()) throw ValidationError("allocation needs at least one annotator");
  if (request.per_topic_sentence_target <= 0) {
    throw ConfigError("per-topic sentence target must be positive");
  }
  PhasePlan plan;
  plan.phase = request.phase;
  plan.per_topic_target = request.per_topic_sentence_target;
  plan.shared_announcements = request.shared_announcements;
  plan.topic_rates = topic_rates(corpus, phase1_gold, request.topics);

  // Same per-topic integers as rates, so ceil(target / rate) is exact.
  std::array<std::size_t, kNumTopics> sentences{}, announcements{};
  {
    std::map<std::string, LabelSet> seen_topics;
    for (const auto& [sentence_id, labels] : phase1_gold.labels) {
      const Announcement& a = corpus.announcement_of(sentence_id);
      for (TopicId t : labels.topics()) {
        ++sentences[static_cast<std::size_t>(t)];
        if (!seen_topics[a.id].contains(t)) {
          seen_topics[a.id].insert(t);
          ++announcements[static_cast<std::size_t>(t)];
        }
      }
    }
  }

  std::set<std::string> used = request.exclude;
  used.insert(request.shared_announcements.begin(), request.shared_announcements.end());
  for (const Annotator& a : annotators) plan.unique_assignments[a.id];

  Rng rng(request.seed);
  std::vector<Shortage> shortages;
  const auto target = static_cast<std::size_t>(request.per_topic_sentence_target);
  for (TopicId t : request.topics.topics()) {
    const auto ti = static_cast<std::size_t>(t);
    const std::size_t per_annotator =
        (target * announcements[ti] + sentences[ti] - 1) / sentences[ti];
    plan.topic_draws[t] = per_annotator;
    const std::size_t needed = per_annotator * annotators.size();
    std::vector<std::string> pool = pool_for(prelabels, t, used);
    if (pool.size() < needed) {
      shortages.push_back({t, taxonomy.name(t), needed, pool.size()});
      continue;
    }
    std::vector<std::string> drawn = sample(std::move(pool), needed, rng);
    for (std::size_t k = 0; k < annotators.size(); ++k) {
      auto& list = plan.unique_assignments[annotators[k].id];
      for (std::size_t i = 0; i < per_annotator; ++i) {
        const std::string& id = drawn[k * per_annotator + i];
        used.insert(id);
        list.push_back(id);
      }
    }
  }
  if (!shortages.empty()) {
    std::string msg = "not enough pre-labelled announcements for:";
    for (const auto& s : shortages) {
      msg += " " + s.topic_name + " (need " + std::to_string(s.needed) + ", have " +
             std::to_string(s.available) + ")";
    }
    throw AllocationShortage(std::move(shortages), msg);
  }
  plan.validate();
  return plan;
}

LabelSet undercovered_topics(const Ratings& labels, std::size_t min_sentences) {
  std::array<std::size_t, kNumTopics> counts{};
  for (const auto& [id, ls] : labels) {
    for (TopicId t : ls.topics()) ++counts[static_cast<std::size_t>(t)];
  }
  LabelSet out;
  for (TopicId t = 0; t < kNumTopics; ++t) {
    if (counts[static_cast<std::size_t>(t)] < min_sentences) out.insert(t);
  }
  return out;
}

}  // namespace adhoc
