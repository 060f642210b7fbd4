#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace adhoc::csv {

using Row = std::vector<std::string>;

// RFC 4180 quoting: fields containing comma, quote, CR or LF are quoted.
std::string escape(std::string_view field);
void write_row(std::ostream& out, const Row& row);

// Reads one record, honouring quoted fields that span lines.
class Reader {
public:
  explicit Reader(std::istream& in) : in_(in) {}

  std::optional<Row> next();
  // Physical line on which the most recently returned record started (1-based).
  std::size_t line() const noexcept { return record_line_; }

private:
  std::istream& in_;
  std::size_t physical_line_ = 0;
  std::size_t record_line_ = 0;
};

std::vector<Row> read_all(std::istream& in);

}  // namespace adhoc::csv
