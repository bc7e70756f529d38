#include "crimetype/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"

namespace crimetype {

std::string_view to_string(DropCause cause) {
  switch (cause) {
    case DropCause::MalformedRow: return "malformed_row";
    case DropCause::MissingCoordinate: return "missing_coordinate";
    case DropCause::MissingTimestamp: return "missing_timestamp";
    case DropCause::MissingLabel: return "missing_label";
    case DropCause::UnknownLabel: return "unknown_label";
    case DropCause::OutOfBounds: return "out_of_bounds";
  }
  return "unknown";
}

namespace {

std::optional<std::size_t> find_column(const std::vector<std::string>& header,
                                       const std::string& name) {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (trim(header[i]) == name) return i;
  }
  return std::nullopt;
}

std::size_t require_column(const std::vector<std::string>& header, const std::string& name) {
  if (auto idx = find_column(header, name)) return *idx;
  throw SchemaError("required column '" + name + "' not found in CSV header");
}

}  // namespace

ParseResult parse_csv(const std::filesystem::path& path, const CsvColumns& columns) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open input file: " + path.string());
  return parse_csv(in, columns);
}

ParseResult parse_csv(std::istream& in, const CsvColumns& columns) {
  CsvReader reader(in);
  std::vector<std::string> header;
  if (!reader.next_row(header)) throw SchemaError("CSV input has no header row");
  if (!header.empty() && header[0].starts_with("\xEF\xBB\xBF")) header[0].erase(0, 3);

  const std::size_t ix = require_column(header, columns.x);
  const std::size_t iy = require_column(header, columns.y);
  const std::size_t idate = require_column(header, columns.date);
  const std::size_t ilabel = require_column(header, columns.label);
  const auto iaddr = find_column(header, columns.address);
  const auto idist = find_column(header, columns.district);

  ParseResult result;
  std::vector<std::string> fields;
  while (reader.next_row(fields)) {
    if (fields.size() == 1 && trim(fields[0]).empty()) continue;  // blank line
    RecordCandidate c;
    c.row = ++result.report.rows_read;
    if (fields.size() != header.size()) {
      c.issues.push_back(DropCause::MalformedRow);
      result.report.flagged[std::string(to_string(DropCause::MalformedRow))]++;
      result.rows.push_back(std::move(c));
      continue;
    }
    c.x = parse_number(fields[ix]);
    c.y = parse_number(fields[iy]);
    if (!c.x || !c.y) c.issues.push_back(DropCause::MissingCoordinate);
    c.timestamp = parse_timestamp(fields[idate]);
    if (!c.timestamp) c.issues.push_back(DropCause::MissingTimestamp);
    c.raw_label = std::string(trim(fields[ilabel]));
    if (c.raw_label.empty()) {
      c.issues.push_back(DropCause::MissingLabel);
    } else {
      try {
        c.label = encode_label(c.raw_label);
      } catch (const UnknownLabelError&) {
        c.issues.push_back(DropCause::UnknownLabel);
      }
    }
    if (iaddr) {
      auto text = trim(fields[*iaddr]);
      if (!text.empty()) c.address = std::string(text);
    }
    if (idist) {
      if (auto d = parse_integer(fields[*idist])) c.district = static_cast<int>(*d);
    }
    for (DropCause cause : c.issues) result.report.flagged[std::string(to_string(cause))]++;
    result.rows.push_back(std::move(c));
  }
  return result;
}

CleanResult clean_records(std::span<const RecordCandidate> rows, const BoundingBox& box) {
  CleanResult out;
  out.report.rows_read = rows.size();
  for (const auto& c : rows) {
    std::optional<DropCause> cause;
    if (!c.issues.empty()) {
      cause = c.issues.front();
    } else if (!c.x || !c.y || !std::isfinite(*c.x) || !std::isfinite(*c.y)) {
      cause = DropCause::MissingCoordinate;
    } else if (!c.timestamp) {
      cause = DropCause::MissingTimestamp;
    } else if (!c.label) {
      cause = DropCause::MissingLabel;
    } else if (!box.contains(*c.x, *c.y)) {
      cause = DropCause::OutOfBounds;
    }
    if (cause) {
      out.report.drops[std::string(to_string(*cause))]++;
      continue;
    }
    out.records.push_back(CrimeRecord{*c.x, *c.y, *c.timestamp, *c.label, c.address, c.district});
  }
  out.report.rows_kept = out.records.size();
  return out;
}

std::vector<RecordCandidate> to_candidates(std::span<const CrimeRecord> records) {
  std::vector<RecordCandidate> rows;
  rows.reserve(records.size());
  std::size_t n = 0;
  for (const auto& r : records) {
    RecordCandidate c;
    c.row = ++n;
    c.x = r.x;
    c.y = r.y;
    c.timestamp = r.timestamp;
    c.label = r.label;
    c.raw_label = std::string(r.label.name());
    c.address = r.address;
    c.district = r.district;
    rows.push_back(std::move(c));
  }
  return rows;
}

CleanResult clean_records(std::span<const CrimeRecord> records, const BoundingBox& box) {
  const auto rows = to_candidates(records);
  return clean_records(std::span<const RecordCandidate>(rows), box);
}

void write_records_csv(std::ostream& out, std::span<const CrimeRecord> records,
                       const CsvColumns& columns) {
  const std::vector<std::string> header = {columns.x, columns.y, columns.date, columns.label,
                                           columns.address, columns.district};
  write_csv_row(out, header);
  std::vector<std::string> row(6);
  for (const auto& r : records) {
    row[0] = format_number(r.x);
    row[1] = format_number(r.y);
    row[2] = r.timestamp.format();
    row[3] = std::string(r.label.name());
    row[4] = r.address.value_or("");
    row[5] = r.district ? std::to_string(*r.district) : "";
    write_csv_row(out, row);
  }
}

namespace {

SplitDataset split_at(std::vector<CrimeRecord> sorted, std::size_t n_train) {
  SplitDataset split;
  split.split_timestamp = sorted[n_train].timestamp;
  split.test.assign(std::make_move_iterator(sorted.begin() + static_cast<std::ptrdiff_t>(n_train)),
                    std::make_move_iterator(sorted.end()));
  sorted.resize(n_train);
  split.train = std::move(sorted);
  return split;
}

void sort_by_time(std::vector<CrimeRecord>& records) {
  std::stable_sort(records.begin(), records.end(),
                   [](const CrimeRecord& a, const CrimeRecord& b) { return a.timestamp < b.timestamp; });
}

}  // namespace

SplitDataset chronological_split(std::vector<CrimeRecord> records, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw ParameterError("split ratio must lie in (0, 1), got " + format_number(ratio));
  }
  if (records.size() < 2) {
    throw InsufficientDataError("chronological split needs at least 2 records, got " +
                                std::to_string(records.size()));
  }
  sort_by_time(records);
  const auto n = static_cast<double>(records.size());
  // The small offset keeps products such as 0.8 * 1048575 from rounding up.
  auto n_train = static_cast<std::size_t>(std::ceil(ratio * n - 1e-9));
  n_train = std::clamp<std::size_t>(n_train, 1, records.size() - 1);
  return split_at(std::move(records), n_train);
}

SplitDataset split_at_year(std::vector<CrimeRecord> records, int year) {
  sort_by_time(records);
  const auto it = std::find_if(records.begin(), records.end(),
                               [year](const CrimeRecord& r) { return r.timestamp.year >= year; });
  const auto n_train = static_cast<std::size_t>(it - records.begin());
  if (n_train == 0 || n_train == records.size()) {
    throw InsufficientDataError("split year " + std::to_string(year) +
                                " leaves an empty train or test partition");
  }
  auto split = split_at(std::move(records), n_train);
  split.split_timestamp = Timestamp{year, 1, 1, 0, 0};
  return split;
}

std::string_view to_string(Granularity g) {
  switch (g) {
    case Granularity::Hour: return "hour";
    case Granularity::Month: return "month";
    case Granularity::Year: return "year";
  }
  return "hour";
}

Granularity parse_granularity(std::string_view text) {
  if (text == "hour") return Granularity::Hour;
  if (text == "month") return Granularity::Month;
  if (text == "year") return Granularity::Year;
  throw ParameterError("granularity must be hour, month or year, got '" + std::string(text) + "'");
}

std::int64_t CountAggregate::total() const {
  std::int64_t sum = 0;
  for (const auto& [bin, count] : bins) sum += count;
  return sum;
}

CountAggregate aggregate_counts(std::span<const CrimeRecord> records, Granularity granularity,
                                std::optional<ClassLabel> label_filter) {
  CountAggregate agg{granularity, label_filter, {}};
  for (const auto& r : records) {
    if (label_filter && r.label != *label_filter) continue;
    int bin = 0;
    switch (granularity) {
      case Granularity::Hour: bin = r.timestamp.hour; break;
      case Granularity::Month: bin = r.timestamp.month; break;
      case Granularity::Year: bin = r.timestamp.year; break;
    }
    agg.bins[bin]++;
  }
  return agg;
}

void write_aggregate_csv(std::ostream& out, const CountAggregate& aggregate) {
  out << "bin,count\n";
  for (const auto& [bin, count] : aggregate.bins) out << bin << ',' << count << '\n';
}

void to_json(nlohmann::json& j, const ParseReport& r) {
  j = nlohmann::json{{"rows_read", r.rows_read}, {"flagged", r.flagged}};
}

void to_json(nlohmann::json& j, const CleanReport& r) {
  j = nlohmann::json{{"rows_read", r.rows_read}, {"rows_kept", r.rows_kept}, {"drops", r.drops}};
}

void to_json(nlohmann::json& j, const CountAggregate& a) {
  nlohmann::json bins = nlohmann::json::object();
  for (const auto& [bin, count] : a.bins) bins[std::to_string(bin)] = count;
  j = nlohmann::json{{"granularity", to_string(a.granularity)}, {"bins", bins}};
  j["label_filter"] = a.label_filter ? nlohmann::json(a.label_filter->index) : nlohmann::json();
}

}  // namespace crimetype
