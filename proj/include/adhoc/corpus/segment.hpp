#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace adhoc {

// Splits raw text after '.', '!' or '?' when followed by whitespace and then
// an uppercase letter or a digit. A '.' that ends a listed abbreviation never
// splits. Uppercase covers ASCII and the Latin-1 range (Ä, Ö, Ü, ...).
class Segmenter {
public:
  Segmenter();
  explicit Segmenter(std::set<std::string> abbreviations)
      : abbreviations_(std::move(abbreviations)) {}

  static const std::set<std::string>& default_abbreviations();

  std::vector<std::string> split(std::string_view text) const;
  const std::set<std::string>& abbreviations() const noexcept { return abbreviations_; }

private:
  std::set<std::string> abbreviations_;
};

}  // namespace adhoc
