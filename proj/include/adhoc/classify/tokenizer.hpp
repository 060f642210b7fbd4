#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace adhoc {

// Case-preserving word split: a token is a maximal run of ASCII letters and
// digits or non-ASCII letters; ASCII punctuation, whitespace and the Unicode
// punctuation blocks U+00A0..U+00BF and U+2000..U+206F separate tokens.
std::vector<std::string> tokenize(std::string_view text);

inline constexpr std::size_t kDefaultVocabularySize = 20000;

// Most frequent training tokens; ties broken lexicographically. Tokens
// outside the vocabulary are dropped at encode time.
class Vocabulary {
public:
  Vocabulary() = default;

  static Vocabulary build(std::span<const std::vector<std::string>> tokenized_texts,
                          std::size_t capacity = kDefaultVocabularySize);

  std::size_t size() const noexcept { return tokens_.size(); }
  std::optional<int> id(std::string_view token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::vector<int> encode(std::span<const std::string> tokens) const;
  std::vector<int> encode(std::string_view text) const;

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& doc);

private:
  void index();

  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> ids_;
};

}  // namespace adhoc
