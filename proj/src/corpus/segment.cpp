#include "adhoc/corpus/segment.hpp"

#include <algorithm>

#include "adhoc/core/format.hpp"

namespace adhoc {
namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r'; }

// UTF-8 aware "starts with uppercase letter or digit".
bool starts_upper_or_digit(std::string_view s) {
  if (s.empty()) return false;
  const auto c0 = static_cast<unsigned char>(s[0]);
  if ((c0 >= 'A' && c0 <= 'Z') || (c0 >= '0' && c0 <= '9')) return true;
  if (c0 == 0xC3 && s.size() >= 2) {
    const auto c1 = static_cast<unsigned char>(s[1]);
    return c1 >= 0x80 && c1 <= 0x9E && c1 != 0x97;  // U+00C0..U+00DE minus U+00D7
  }
  return false;
}

}  // namespace

Segmenter::Segmenter() : abbreviations_(default_abbreviations()) {}

const std::set<std::string>& Segmenter::default_abbreviations() {
  static const std::set<std::string> kDefault = {
      "Abs", "Art", "bzw", "ca", "Co", "d.h", "Dr", "e.g", "etc", "evtl", "ggf", "i.e",
      "inkl", "Inc", "Ltd", "Mio", "Mr", "Mrd", "Mrs", "Ms", "No", "Nr", "Prof", "St",
      "Str", "Tsd", "u.a", "vgl", "vs", "z.B", "zzgl"};
  return kDefault;
}

std::vector<std::string> Segmenter::split(std::string_view text) const {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (c != '.' && c != '!' && c != '?') continue;
    if (i + 1 >= text.size() || !is_space(static_cast<unsigned char>(text[i + 1]))) continue;
    std::size_t next = i + 1;
    while (next < text.size() && is_space(static_cast<unsigned char>(text[next]))) ++next;
    if (!starts_upper_or_digit(text.substr(next))) continue;
    if (c == '.') {
      std::size_t w = i;
      while (w > start && !is_space(static_cast<unsigned char>(text[w - 1]))) --w;
      if (abbreviations_.count(std::string(text.substr(w, i - w)))) continue;
    }
    std::string sentence = trim(text.substr(start, i + 1 - start));
    if (!sentence.empty()) out.push_back(std::move(sentence));
    start = next;
    i = next - 1;
  }
  std::string tail = trim(text.substr(std::min(start, text.size())));
  if (!tail.empty()) out.push_back(std::move(tail));
  return out;
}

}  // namespace adhoc
