#include "crimetype/probability.hpp"

#include <string>

#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"

namespace crimetype {

void write_predictions_csv(std::ostream& out, const ProbabilityMatrix& p, std::span<const int> labels) {
  std::vector<std::string> row{"label"};
  for (std::size_t c = 0; c < p.cols; ++c) row.push_back("p" + std::to_string(c));
  write_csv_row(out, row);
  for (std::size_t i = 0; i < p.rows; ++i) {
    row[0] = std::to_string(labels[i]);
    for (std::size_t c = 0; c < p.cols; ++c) row[c + 1] = format_number(p.at(i, c));
    write_csv_row(out, row);
  }
}

ProbabilityMatrix read_predictions_csv(std::istream& in, std::vector<int>& labels) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next_row(fields) || fields.size() < 2 || fields[0] != "label") {
    throw FormatError("prediction CSV header must be label,p0,...");
  }
  ProbabilityMatrix p;
  p.cols = fields.size() - 1;
  labels.clear();
  while (reader.next_row(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != p.cols + 1) {
      throw FormatError("prediction CSV row " + std::to_string(p.rows + 1) + " has the wrong width");
    }
    const auto label = parse_integer(fields[0]);
    if (!label) throw FormatError("prediction CSV row " + std::to_string(p.rows + 1) + " has a bad label");
    labels.push_back(static_cast<int>(*label));
    for (std::size_t c = 1; c < fields.size(); ++c) {
      const auto v = parse_number(fields[c]);
      if (!v) throw FormatError("prediction CSV row " + std::to_string(p.rows + 1) + " has a bad value");
      p.values.push_back(*v);
    }
    ++p.rows;
  }
  return p;
}

}  // namespace crimetype
