#pragma once

#include <array>
#include <cstddef>
#include <span>

#include "adhoc/corpus/topic.hpp"

namespace adhoc {

struct BinaryCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t tn = 0;

  std::size_t total() const noexcept { return tp + fp + fn + tn; }
  std::size_t support() const noexcept { return tp + fn; }
  BinaryCounts& operator+=(const BinaryCounts& o) noexcept {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    tn += o.tn;
    return *this;
  }
  friend bool operator==(const BinaryCounts&, const BinaryCounts&) = default;
};

struct Prf1 {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

// 0/0 ratios are defined as 0, so a topic absent from both sides scores 0.
Prf1 prf1(const BinaryCounts& counts);

struct MacroMicro {
  Prf1 macro;  // unweighted mean of per-topic metrics
  Prf1 micro;  // prf1 of element-wise summed counts
  // Support-weighted mean of per-topic F1, reported next to micro F1 so the
  // two readings of "frequency weighted" can be compared.
  double support_weighted_f1 = 0.0;
};

// Throws ValidationError on an empty topic list.
MacroMicro macro_micro(std::span<const BinaryCounts> per_topic);

using TopicCounts = std::array<BinaryCounts, kNumTopics>;

// Per-topic confusion counts of predicted against reference label sets.
TopicCounts count_topics(std::span<const LabelSet> predicted, std::span<const LabelSet> reference);

}  // namespace adhoc
