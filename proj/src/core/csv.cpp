#include "adhoc/core/csv.hpp"

#include "adhoc/core/error.hpp"

namespace adhoc::csv {

std::string escape(std::string_view field) {
  if (field.find_first_of(",\"\r\n") == std::string_view::npos) {
    return std::string(field);
  }
  std::string out = "\"";
  for (char c : field) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

void write_row(std::ostream& out, const Row& row) {
  for (std::size_t i = 0; i < row.size(); ++i) {
    if (i) out << ',';
    out << escape(row[i]);
  }
  out << '\n';
}

std::optional<Row> Reader::next() {
  std::string line;
  if (!std::getline(in_, line)) return std::nullopt;
  ++physical_line_;
  record_line_ = physical_line_;

  Row row;
  std::string field;
  bool quoted = false;
  std::size_t i = 0;
  while (true) {
    if (i >= line.size()) {
      if (!quoted) break;
      // Quoted field continues on the next physical line.
      std::string more;
      if (!std::getline(in_, more)) {
        throw ValidationError("unterminated quoted field starting on line " +
                              std::to_string(record_line_));
      }
      ++physical_line_;
      field += '\n';
      line = std::move(more);
      i = 0;
      continue;
    }
    const char c = line[i];
    if (quoted) {
      if (c == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
    } else if (c != '\r' || i + 1 != line.size()) {
      field += c;
    }
    ++i;
  }
  row.push_back(std::move(field));
  return row;
}

std::vector<Row> read_all(std::istream& in) {
  Reader reader(in);
  std::vector<Row> rows;
  while (auto row = reader.next()) rows.push_back(std::move(*row));
  return rows;
}

}  // namespace adhoc::csv
