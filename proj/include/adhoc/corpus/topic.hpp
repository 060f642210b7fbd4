#pragma once

#include <bit>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace adhoc {

inline constexpr int kNumTopics = 20;
using TopicId = int;

// Subset of the topic taxonomy. The empty set is a legal label.
class LabelSet {
public:
  static constexpr std::uint32_t kAllBits = (1u << kNumTopics) - 1;

  constexpr LabelSet() = default;
  // Throws ValidationError if bits outside the 20 topics are set.
  static LabelSet from_bits(std::uint32_t bits);
  static LabelSet of(std::initializer_list<TopicId> topics);

  constexpr std::uint32_t bits() const noexcept { return bits_; }
  constexpr bool empty() const noexcept { return bits_ == 0; }
  constexpr int size() const noexcept { return std::popcount(bits_); }
  bool contains(TopicId t) const;
  void insert(TopicId t);
  void erase(TopicId t);
  std::vector<TopicId> topics() const;

  LabelSet& operator|=(LabelSet other) noexcept {
    bits_ |= other.bits_;
    return *this;
  }
  friend LabelSet operator|(LabelSet a, LabelSet b) noexcept { return a |= b; }
  friend LabelSet operator&(LabelSet a, LabelSet b) noexcept {
    LabelSet r;
    r.bits_ = a.bits_ & b.bits_;
    return r;
  }
  friend constexpr bool operator==(LabelSet, LabelSet) = default;

private:
  std::uint32_t bits_ = 0;
};

struct Topic {
  TopicId id = 0;
  std::string name;
  std::string description;
  std::vector<std::string> keywords;
};

// Exactly 20 topics with dense ids 0..19 and non-empty keyword lists.
class Taxonomy {
public:
  explicit Taxonomy(std::vector<Topic> topics);

  // The 20-topic ad-hoc announcement taxonomy with its annotator keyword lists.
  static const Taxonomy& builtin();
  static Taxonomy from_json(const nlohmann::json& doc);
  static Taxonomy load(const std::filesystem::path& path);
  nlohmann::json to_json() const;

  const std::vector<Topic>& topics() const noexcept { return topics_; }
  const Topic& at(TopicId id) const;
  const std::string& name(TopicId id) const { return at(id).name; }
  // Throws NotFoundError.
  TopicId find(std::string_view name) const;

private:
  std::vector<Topic> topics_;
};

}  // namespace adhoc
