#include "crimetype/features.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <set>

#include "crimetype/centers.hpp"
#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"
#include "crimetype/random.hpp"

namespace crimetype {

namespace {

enum class Feature {
  HourZone, Hour, Minute, Day, Month, Year, DayOfWeekNum, WeekOfYear, IsWeekend, Season,
  X, Y, Radius, Angle, Rot30X, Rot30Y, Rot45X, Rot45Y, Rot60X, Rot60Y,
  Street1, Street2, IsIntersection, IsBlock, StreetType, PdDistrictNum,
  NearestClusterDistance, CenterDistance, PrincipalComponent,
};

const std::vector<std::string> kKnown = {
    "HourZone", "Hour", "Minute", "Day", "Month", "Year", "DayOfWeekNum", "WeekOfYear",
    "IsWeekend", "Season", "X", "Y", "Radius", "Angle", "Rot30X", "Rot30Y", "Rot45X",
    "Rot45Y", "Rot60X", "Rot60Y", "Street1", "Street2", "IsIntersection", "IsBlock",
    "StreetType", "PdDistrictNum", "NearestClusterDistance",
};

bool parse_suffix_index(std::string_view name, std::string_view prefix, std::size_t& index) {
  if (!name.starts_with(prefix) || name.size() == prefix.size()) return false;
  const auto digits = name.substr(prefix.size());
  if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
    return false;
  }
  const auto v = parse_integer(digits);
  if (!v) return false;
  index = static_cast<std::size_t>(*v);
  return true;
}

struct Column {
  Feature feature;
  std::size_t index = 0;  // center index for CenterDistance
};

std::optional<Column> classify(std::string_view name) {
  for (std::size_t i = 0; i < kKnown.size(); ++i) {
    if (kKnown[i] == name) return Column{static_cast<Feature>(i)};
  }
  std::size_t idx = 0;
  if (parse_suffix_index(name, "CenterDistance_", idx)) return Column{Feature::CenterDistance, idx};
  if (parse_suffix_index(name, "PC", idx) && idx >= 1) return Column{Feature::PrincipalComponent, idx};
  return std::nullopt;
}

constexpr double kPi = 3.14159265358979323846;

const std::vector<std::string> kStreetTypes = {
    "ST", "AVE", "BLVD", "RD", "DR", "LN", "PL", "CT", "PKWY", "WAY",
    "TER", "HWY", "SQ", "CIR", "PIKE", "EXPY", "ALY", "WALK", "ROW", "PLZ",
};

const std::map<std::string, std::string, std::less<>> kStreetTypeAliases = {
    {"STREET", "ST"}, {"AVENUE", "AVE"}, {"AV", "AVE"}, {"BLV", "BLVD"},
    {"BOULEVARD", "BLVD"}, {"ROAD", "RD"}, {"DRIVE", "DR"}, {"LANE", "LN"},
    {"PLACE", "PL"}, {"COURT", "CT"}, {"PARKWAY", "PKWY"}, {"TERRACE", "TER"},
};

std::string normalize_address(std::string_view text) {
  std::string out;
  bool pending_space = false;
  for (char c : text) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::toupper(static_cast<unsigned char>(c))));
  }
  return out;
}

bool all_digits(std::string_view s) {
  return !s.empty() &&
         std::all_of(s.begin(), s.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

std::string trailing_type(const std::string& street) {
  const auto space = street.rfind(' ');
  if (space == std::string::npos) return {};
  std::string token = street.substr(space + 1);
  if (auto it = kStreetTypeAliases.find(token); it != kStreetTypeAliases.end()) token = it->second;
  return street_type_code(token) >= 0 ? token : std::string{};
}

}  // namespace

const std::vector<std::string>& known_feature_names() { return kKnown; }

FeatureSchema::FeatureSchema(std::vector<std::string> names) : names_(std::move(names)) {
  std::set<std::string_view> seen;
  for (const auto& n : names_) {
    if (!classify(n)) throw SchemaError("unknown feature name '" + n + "'");
    if (!seen.insert(n).second) throw SchemaError("duplicate feature name '" + n + "'");
  }
}

FeatureSchema FeatureSchema::all_features() { return FeatureSchema(kKnown); }

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names_.size(); ++i) {
    if (names_[i] == name) return i;
  }
  return std::nullopt;
}

std::string FeatureSchema::fingerprint() const {
  std::string joined;
  for (const auto& n : names_) {
    joined += n;
    joined += '\n';
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a64(joined)));
  return buf;
}

TemporalFeatures temporal_features(const Timestamp& ts) {
  TemporalFeatures t;
  t.hour = ts.hour;
  t.minute = ts.minute;
  t.day = ts.day;
  t.month = ts.month;
  t.year = ts.year;
  t.day_of_week = ts.day_of_week();
  t.week_of_year = ts.iso_week();
  t.is_weekend = t.day_of_week >= 5 ? 1 : 0;
  t.season = (ts.month % 12) / 3;
  t.hour_zone = ts.hour / 6;
  return t;
}

SpatialReference SpatialReference::fit(std::span<const CrimeRecord> train) {
  if (train.empty()) throw InsufficientDataError("spatial reference needs training records");
  double sx = 0, sy = 0;
  for (const auto& r : train) {
    sx += r.x;
    sy += r.y;
  }
  const double n = static_cast<double>(train.size());
  return {sx / n, sy / n};
}

SpatialFeatures spatial_features(double x, double y, const SpatialReference& ref) {
  const double dx = x - ref.centroid_x;
  const double dy = y - ref.centroid_y;
  SpatialFeatures s;
  s.x = x;
  s.y = y;
  s.radius = std::hypot(dx, dy);
  s.angle = (dx == 0 && dy == 0) ? 0.0 : std::atan2(dy, dx);
  if (s.angle == -kPi) s.angle = kPi;
  auto rotate = [&](double degrees, double& rx, double& ry) {
    const double t = degrees * kPi / 180.0;
    const double c = std::cos(t), sn = std::sin(t);
    rx = dx * c + dy * sn;
    ry = dy * c - dx * sn;
  };
  rotate(30, s.rot30x, s.rot30y);
  rotate(45, s.rot45x, s.rot45y);
  rotate(60, s.rot60x, s.rot60y);
  return s;
}

AddressParts parse_address(std::string_view address) {
  AddressParts parts;
  const std::string text = normalize_address(address);
  if (text.empty()) return parts;

  if (const auto slash = text.find('/'); slash != std::string::npos) {
    const auto left = std::string(trim(std::string_view(text).substr(0, slash)));
    const auto right = std::string(trim(std::string_view(text).substr(slash + 1)));
    if (!left.empty() && !right.empty()) {
      parts.is_intersection = true;
      parts.street1 = left;
      parts.street2 = right;
      parts.street_type = trailing_type(left);
      return parts;
    }
  }

  std::string rest = text;
  const auto first_space = text.find(' ');
  if (first_space != std::string::npos && all_digits(std::string_view(text).substr(0, first_space))) {
    rest = text.substr(first_space + 1);
    if (rest.starts_with("BLOCK ") || rest == "BLOCK") {
      parts.is_block = true;
      rest = rest.size() > 6 ? rest.substr(6) : std::string{};
    }
  }
  parts.street1 = rest;
  parts.street_type = trailing_type(rest);
  return parts;
}

int street_type_code(std::string_view suffix) {
  for (std::size_t i = 0; i < kStreetTypes.size(); ++i) {
    if (kStreetTypes[i] == suffix) return static_cast<int>(i);
  }
  return -1;
}

const std::vector<std::string>& street_types() { return kStreetTypes; }

AddressVocabulary::AddressVocabulary(std::vector<std::string> streets) : streets_(std::move(streets)) {
  std::sort(streets_.begin(), streets_.end());
  streets_.erase(std::unique(streets_.begin(), streets_.end()), streets_.end());
}

AddressVocabulary AddressVocabulary::fit(std::span<const CrimeRecord> train) {
  std::vector<std::string> names;
  for (const auto& r : train) {
    if (!r.address) continue;
    auto parts = parse_address(*r.address);
    if (!parts.street1.empty()) names.push_back(std::move(parts.street1));
    if (!parts.street2.empty()) names.push_back(std::move(parts.street2));
  }
  return AddressVocabulary(std::move(names));
}

int AddressVocabulary::code(std::string_view street) const {
  if (street.empty()) return -1;
  const auto it = std::lower_bound(streets_.begin(), streets_.end(), street);
  if (it == streets_.end() || *it != street) return -1;
  return static_cast<int>(it - streets_.begin());
}

AddressFeatures address_features(const CrimeRecord& record, const AddressVocabulary& vocabulary) {
  AddressFeatures f;
  f.pd_district = record.district.value_or(-1);
  if (!record.address) return f;
  const auto parts = parse_address(*record.address);
  f.is_intersection = parts.is_intersection ? 1 : 0;
  f.is_block = parts.is_block ? 1 : 0;
  f.street1 = vocabulary.code(parts.street1);
  f.street2 = parts.is_intersection ? vocabulary.code(parts.street2) : -1;
  f.street_type = parts.street_type.empty() ? -1 : street_type_code(parts.street_type);
  return f;
}

FeatureContext FeatureContext::fit(std::span<const CrimeRecord> train) {
  FeatureContext ctx;
  ctx.reference = SpatialReference::fit(train);
  ctx.vocabulary = AddressVocabulary::fit(train);
  return ctx;
}

FeatureMatrix build_feature_matrix(std::span<const CrimeRecord> records, const FeatureSchema& schema,
                                   const FeatureContext& context) {
  std::vector<Column> columns;
  bool need_reference = false, need_vocabulary = false;
  for (const auto& name : schema.names()) {
    const Column c = *classify(name);
    switch (c.feature) {
      case Feature::Radius: case Feature::Angle: case Feature::Rot30X: case Feature::Rot30Y:
      case Feature::Rot45X: case Feature::Rot45Y: case Feature::Rot60X: case Feature::Rot60Y:
        need_reference = true;
        break;
      case Feature::Street1: case Feature::Street2:
        need_vocabulary = true;
        break;
      case Feature::NearestClusterDistance:
        if (!context.centers || context.centers->empty()) {
          throw ConfigurationError("schema includes NearestClusterDistance but no cluster centers were given");
        }
        break;
      case Feature::CenterDistance:
        if (!context.centers || c.index >= context.centers->size()) {
          throw ConfigurationError("schema includes " + name + " but only " +
                                   std::to_string(context.centers ? context.centers->size() : 0) +
                                   " centers were given");
        }
        break;
      case Feature::PrincipalComponent:
        throw ConfigurationError("principal components come from pca_transform, not from records");
      default:
        break;
    }
    columns.push_back(c);
  }
  if (need_reference && !context.reference) {
    throw StateError("spatial features requested before the spatial reference was fitted");
  }
  if (need_vocabulary && !context.vocabulary) {
    throw StateError("street features requested before the street vocabulary was fitted");
  }

  FeatureMatrix m;
  m.schema = schema;
  m.rows = records.size();
  m.values.resize(records.size() * columns.size());
  m.labels.reserve(records.size());
  const SpatialReference ref = context.reference.value_or(SpatialReference{});
  static const AddressVocabulary empty_vocabulary;
  const AddressVocabulary& vocab = context.vocabulary ? *context.vocabulary : empty_vocabulary;

  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    const auto t = temporal_features(r.timestamp);
    const auto s = spatial_features(r.x, r.y, ref);
    const auto a = address_features(r, vocab);
    double* out = &m.values[i * columns.size()];
    for (std::size_t j = 0; j < columns.size(); ++j) {
      double v = 0;
      switch (columns[j].feature) {
        case Feature::HourZone: v = t.hour_zone; break;
        case Feature::Hour: v = t.hour; break;
        case Feature::Minute: v = t.minute; break;
        case Feature::Day: v = t.day; break;
        case Feature::Month: v = t.month; break;
        case Feature::Year: v = t.year; break;
        case Feature::DayOfWeekNum: v = t.day_of_week; break;
        case Feature::WeekOfYear: v = t.week_of_year; break;
        case Feature::IsWeekend: v = t.is_weekend; break;
        case Feature::Season: v = t.season; break;
        case Feature::X: v = s.x; break;
        case Feature::Y: v = s.y; break;
        case Feature::Radius: v = s.radius; break;
        case Feature::Angle: v = s.angle; break;
        case Feature::Rot30X: v = s.rot30x; break;
        case Feature::Rot30Y: v = s.rot30y; break;
        case Feature::Rot45X: v = s.rot45x; break;
        case Feature::Rot45Y: v = s.rot45y; break;
        case Feature::Rot60X: v = s.rot60x; break;
        case Feature::Rot60Y: v = s.rot60y; break;
        case Feature::Street1: v = a.street1; break;
        case Feature::Street2: v = a.street2; break;
        case Feature::IsIntersection: v = a.is_intersection; break;
        case Feature::IsBlock: v = a.is_block; break;
        case Feature::StreetType: v = a.street_type; break;
        case Feature::PdDistrictNum: v = a.pd_district; break;
        case Feature::NearestClusterDistance:
          v = nearest_center_distance({r.x, r.y}, *context.centers);
          break;
        case Feature::CenterDistance:
          v = std::sqrt(squared_distance({r.x, r.y}, (*context.centers)[columns[j].index]));
          break;
        case Feature::PrincipalComponent: break;
      }
      out[j] = v;
    }
    m.labels.push_back(r.label.index);
  }
  return m;
}

Standardization fit_standardization(const FeatureMatrix& matrix) {
  if (matrix.rows == 0) throw InsufficientDataError("standardization needs a non-empty fit set");
  const std::size_t f = matrix.cols();
  const double n = static_cast<double>(matrix.rows);
  Standardization s{std::vector<double>(f, 0.0), std::vector<double>(f, 0.0)};
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < f; ++j) s.mean[j] += matrix.at(i, j);
  }
  for (double& m : s.mean) m /= n;
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      const double d = matrix.at(i, j) - s.mean[j];
      s.stddev[j] += d * d;
    }
  }
  for (std::size_t j = 0; j < f; ++j) {
    s.stddev[j] = std::sqrt(s.stddev[j] / n);
    // Constant up to rounding noise in the mean.
    if (s.stddev[j] <= 1e-12 * std::max(1.0, std::abs(s.mean[j]))) s.stddev[j] = 0.0;
  }
  return s;
}

FeatureMatrix apply_standardization(FeatureMatrix matrix, const Standardization& stats) {
  const std::size_t f = matrix.cols();
  if (stats.mean.size() != f || stats.stddev.size() != f) {
    throw SchemaError("standardization statistics do not match the matrix width");
  }
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      double& v = matrix.values[i * f + j];
      v = stats.stddev[j] > 0 ? (v - stats.mean[j]) / stats.stddev[j] : 0.0;
    }
  }
  matrix.standardization = stats;
  return matrix;
}

FeatureMatrix standardize(const FeatureMatrix& matrix) {
  return apply_standardization(matrix, fit_standardization(matrix));
}

void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix) {
  std::vector<std::string> row(matrix.schema.names());
  row.push_back("label");
  write_csv_row(out, row);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t j = 0; j < matrix.cols(); ++j) row[j] = format_number(matrix.at(i, j));
    row.back() = std::to_string(matrix.labels[i]);
    write_csv_row(out, row);
  }
}

FeatureMatrix read_feature_csv(std::istream& in) {
  CsvReader reader(in);
  std::vector<std::string> fields;
  if (!reader.next_row(fields) || fields.empty() || fields.back() != "label") {
    throw FormatError("feature CSV header must end with a 'label' column");
  }
  fields.pop_back();
  FeatureMatrix m;
  m.schema = FeatureSchema(fields);
  const std::size_t width = m.schema.size() + 1;
  while (reader.next_row(fields)) {
    if (fields.size() == 1 && fields[0].empty()) continue;
    if (fields.size() != width) {
      throw FormatError("feature CSV row " + std::to_string(m.rows + 1) + " has " +
                        std::to_string(fields.size()) + " fields, expected " + std::to_string(width));
    }
    for (std::size_t j = 0; j + 1 < width; ++j) {
      const auto v = parse_number(fields[j]);
      if (!v) throw FormatError("feature CSV row " + std::to_string(m.rows + 1) + " has a non-numeric value");
      m.values.push_back(*v);
    }
    const auto label = parse_integer(fields.back());
    if (!label) throw FormatError("feature CSV row " + std::to_string(m.rows + 1) + " has a bad label");
    m.labels.push_back(static_cast<int>(*label));
    ++m.rows;
  }
  return m;
}

void to_json(nlohmann::json& j, const Standardization& s) {
  j = nlohmann::json{{"mean", s.mean}, {"stddev", s.stddev}};
}

void from_json(const nlohmann::json& j, Standardization& s) {
  s.mean = j.at("mean").get<std::vector<double>>();
  s.stddev = j.at("stddev").get<std::vector<double>>();
}

nlohmann::json featurizer_json(const FeatureSchema& schema, const FeatureContext& context,
                               const std::optional<Standardization>& standardization) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["schema"] = schema.names();
  j["schema_fingerprint"] = schema.fingerprint();
  j["spatial_reference"] =
      context.reference ? nlohmann::json{{"centroid_x", context.reference->centroid_x},
                                         {"centroid_y", context.reference->centroid_y}}
                        : nlohmann::json();
  j["street_vocabulary"] = context.vocabulary ? nlohmann::json(context.vocabulary->streets())
                                              : nlohmann::json();
  j["street_types"] = street_types();
  j["center_count"] = context.centers ? context.centers->size() : 0;
  j["standardization"] = standardization ? nlohmann::json(*standardization) : nlohmann::json();
  return j;
}

}  // namespace crimetype
