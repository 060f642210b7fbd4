#include "adhoc/classify/tokenizer.hpp"

#include <algorithm>
#include <map>

#include <nlohmann/json.hpp>

#include "adhoc/core/error.hpp"

namespace adhoc {

std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  for (std::size_t i = 0; i < text.size();) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (c < 0x80) {
      if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9')) {
        current += static_cast<char>(c);
      } else {
        flush();
      }
      ++i;
      continue;
    }
    std::size_t len = 1;
    if ((c & 0xE0) == 0xC0) len = 2;
    else if ((c & 0xF0) == 0xE0) len = 3;
    else if ((c & 0xF8) == 0xF0) len = 4;
    len = std::min(len, text.size() - i);
    const bool latin1_punct =
        len == 2 && c == 0xC2 && static_cast<unsigned char>(text[i + 1]) >= 0xA0;
    const bool general_punct = len == 3 && c == 0xE2 &&
                               (static_cast<unsigned char>(text[i + 1]) == 0x80 ||
                                static_cast<unsigned char>(text[i + 1]) == 0x81);
    if (latin1_punct || general_punct) {
      flush();
    } else {
      current.append(text.substr(i, len));
    }
    i += len;
  }
  flush();
  return tokens;
}

Vocabulary Vocabulary::build(std::span<const std::vector<std::string>> tokenized_texts,
                             std::size_t capacity) {
  std::map<std::string, std::size_t> freq;
  for (const auto& text : tokenized_texts) {
    for (const auto& tok : text) ++freq[tok];
  }
  std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  if (ranked.size() > capacity) ranked.resize(capacity);
  Vocabulary v;
  for (auto& [tok, _] : ranked) v.tokens_.push_back(tok);
  v.index();
  return v;
}

void Vocabulary::index() {
  ids_.clear();
  for (std::size_t i = 0; i < tokens_.size(); ++i) ids_.emplace(tokens_[i], static_cast<int>(i));
}

std::optional<int> Vocabulary::id(std::string_view token) const {
  auto it = ids_.find(std::string(token));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

std::vector<int> Vocabulary::encode(std::span<const std::string> tokens) const {
  std::vector<int> ids;
  for (const auto& t : tokens) {
    if (auto i = id(t)) ids.push_back(*i);
  }
  return ids;
}

std::vector<int> Vocabulary::encode(std::string_view text) const {
  const auto tokens = tokenize(text);
  return encode(tokens);
}

nlohmann::json Vocabulary::to_json() const { return tokens_; }

Vocabulary Vocabulary::from_json(const nlohmann::json& doc) {
  Vocabulary v;
  try {
    v.tokens_ = doc.get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("malformed vocabulary: ") + e.what());
  }
  v.index();
  if (v.ids_.size() != v.tokens_.size()) throw ValidationError("vocabulary has duplicate tokens");
  return v;
}

}  // namespace adhoc
