#pragma once

#include <istream>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace crimetype {

// RFC 4180 reader: comma separated, double-quote quoting, "" escapes, CRLF or LF
// line ends, embedded newlines inside quoted fields.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  // Returns false at end of input. A trailing empty line is not a row.
  bool next_row(std::vector<std::string>& fields);

  std::size_t rows_consumed() const noexcept { return rows_; }

 private:
  std::istream& in_;
  std::size_t rows_ = 0;
};

std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

// Shortest decimal representation that parses back to the same double.
std::string format_number(double value);
std::optional<double> parse_number(std::string_view text);
std::optional<long long> parse_integer(std::string_view text);

std::string_view trim(std::string_view text);

}  // namespace crimetype
