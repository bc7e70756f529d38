#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crimetype/labels.hpp"
#include "crimetype/timestamp.hpp"

namespace crimetype {

struct CrimeRecord {
  double x = 0;  // longitude, decimal degrees
  double y = 0;  // latitude, decimal degrees
  Timestamp timestamp;
  ClassLabel label;
  std::optional<std::string> address;
  std::optional<int> district;

  friend bool operator==(const CrimeRecord&, const CrimeRecord&) = default;
};

// Column names in the incident CSV. Address and district are optional: when
// the header lacks them the fields stay empty.
struct CsvColumns {
  std::string x = "X";
  std::string y = "Y";
  std::string date = "Date";
  std::string label = "Description";
  std::string address = "Address";
  std::string district = "PdDistrict";
};

enum class DropCause {
  MalformedRow,
  MissingCoordinate,
  MissingTimestamp,
  MissingLabel,
  UnknownLabel,
  OutOfBounds,
};

std::string_view to_string(DropCause cause);

// A data row as read, before validation. Fields that were empty or unparsable
// are nullopt and the reason is listed in issues (in column order).
struct RecordCandidate {
  std::size_t row = 0;  // 1-based data row number
  std::optional<double> x;
  std::optional<double> y;
  std::optional<Timestamp> timestamp;
  std::optional<ClassLabel> label;
  std::optional<std::string> address;
  std::optional<int> district;
  std::string raw_label;
  std::vector<DropCause> issues;
};

struct ParseReport {
  std::size_t rows_read = 0;
  std::map<std::string, std::size_t> flagged;
};

struct ParseResult {
  std::vector<RecordCandidate> rows;
  ParseReport report;
};

/// Reads an incident CSV. Throws IoError when the file cannot be opened and
/// SchemaError naming the first required column missing from the header.
ParseResult parse_csv(const std::filesystem::path& path, const CsvColumns& columns = {});
ParseResult parse_csv(std::istream& in, const CsvColumns& columns = {});

struct BoundingBox {
  double min_x = -75.30;
  double max_x = -74.95;
  double min_y = 39.85;
  double max_y = 40.15;

  bool contains(double x, double y) const {
    return x >= min_x && x <= max_x && y >= min_y && y <= max_y;
  }
};

struct CleanReport {
  std::size_t rows_read = 0;
  std::size_t rows_kept = 0;
  std::map<std::string, std::size_t> drops;
};

struct CleanResult {
  std::vector<CrimeRecord> records;
  CleanReport report;
};

CleanResult clean_records(std::span<const RecordCandidate> rows, const BoundingBox& box = {});
CleanResult clean_records(std::span<const CrimeRecord> records, const BoundingBox& box = {});

// Writes records in the parse_csv layout, so parse then clean reproduces them.
void write_records_csv(std::ostream& out, std::span<const CrimeRecord> records,
                       const CsvColumns& columns = {});

std::vector<RecordCandidate> to_candidates(std::span<const CrimeRecord> records);

struct SplitDataset {
  std::vector<CrimeRecord> train;
  std::vector<CrimeRecord> test;
  Timestamp split_timestamp;
};

/// Stable sort by timestamp, first ceil(ratio * N) records train. Both sides
/// are kept non-empty.
SplitDataset chronological_split(std::vector<CrimeRecord> records, double ratio);

/// Train = years before `year`, test = `year` onwards.
SplitDataset split_at_year(std::vector<CrimeRecord> records, int year);

enum class Granularity { Hour, Month, Year };

std::string_view to_string(Granularity g);
Granularity parse_granularity(std::string_view text);

struct CountAggregate {
  Granularity granularity = Granularity::Hour;
  std::optional<ClassLabel> label_filter;
  std::map<int, std::int64_t> bins;

  std::int64_t total() const;
};

CountAggregate aggregate_counts(std::span<const CrimeRecord> records, Granularity granularity,
                                std::optional<ClassLabel> label_filter = std::nullopt);

void write_aggregate_csv(std::ostream& out, const CountAggregate& aggregate);

void to_json(nlohmann::json& j, const ParseReport& r);
void to_json(nlohmann::json& j, const CleanReport& r);
void to_json(nlohmann::json& j, const CountAggregate& a);

}  // namespace crimetype
