#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "crimetype/ingest.hpp"
#include "crimetype/kmeans.hpp"

namespace crimetype {

/// Feature names the builder knows, in their default order. Besides these,
/// "CenterDistance_<j>" (distance to stacked center j) and "PC<n>" (PCA
/// outputs) are accepted.
const std::vector<std::string>& known_feature_names();

// Ordered, immutable list of unique feature names.
class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Throws SchemaError on duplicates or unknown names.
  explicit FeatureSchema(std::vector<std::string> names);

  static FeatureSchema all_features();

  const std::vector<std::string>& names() const noexcept { return names_; }
  std::size_t size() const noexcept { return names_.size(); }
  bool contains(std::string_view name) const { return index_of(name).has_value(); }
  std::optional<std::size_t> index_of(std::string_view name) const;
  // Stable hash of the ordered names; models refuse matrices with another one.
  std::string fingerprint() const;

  friend bool operator==(const FeatureSchema&, const FeatureSchema&) = default;

 private:
  std::vector<std::string> names_;
};

struct Standardization {
  std::vector<double> mean;
  std::vector<double> stddev;  // population; 0 marks a constant column
};

struct FeatureMatrix {
  FeatureSchema schema;
  std::size_t rows = 0;
  std::vector<double> values;  // row-major rows x schema.size()
  std::vector<int> labels;
  std::optional<Standardization> standardization;

  std::size_t cols() const noexcept { return schema.size(); }
  std::span<const double> row(std::size_t i) const {
    return {values.data() + i * cols(), cols()};
  }
  double at(std::size_t i, std::size_t j) const { return values[i * cols() + j]; }
};

struct TemporalFeatures {
  int hour = 0;
  int minute = 0;
  int day = 1;
  int month = 1;
  int year = 1970;
  int day_of_week = 0;  // Monday = 0
  int week_of_year = 1; // ISO-8601
  int is_weekend = 0;
  int season = 0;       // DJF = 0, MAM = 1, JJA = 2, SON = 3
  int hour_zone = 0;    // hour / 6
};

TemporalFeatures temporal_features(const Timestamp& ts);

// Anchor for the polar and rotated coordinates: mean training position.
struct SpatialReference {
  double centroid_x = 0;
  double centroid_y = 0;

  static SpatialReference fit(std::span<const CrimeRecord> train);
};

struct SpatialFeatures {
  double x = 0, y = 0;
  double radius = 0, angle = 0;
  double rot30x = 0, rot30y = 0;
  double rot45x = 0, rot45y = 0;
  double rot60x = 0, rot60y = 0;
};

SpatialFeatures spatial_features(double x, double y, const SpatialReference& ref);

struct AddressParts {
  bool is_intersection = false;
  bool is_block = false;
  std::string street1;
  std::string street2;
  std::string street_type;  // trailing suffix token, empty if not recognised
};

/// Upper-cases, collapses whitespace, splits "A / B" intersections and strips
/// "<n> BLOCK" or leading house numbers.
AddressParts parse_address(std::string_view address);

/// Fixed code of a street suffix such as "ST" or "AVE"; -1 when unknown.
int street_type_code(std::string_view suffix);
const std::vector<std::string>& street_types();

// Street names seen in training, coded by sorted position.
class AddressVocabulary {
 public:
  AddressVocabulary() = default;
  explicit AddressVocabulary(std::vector<std::string> streets);
  static AddressVocabulary fit(std::span<const CrimeRecord> train);

  int code(std::string_view street) const;  // -1 when unseen or empty
  const std::vector<std::string>& streets() const noexcept { return streets_; }

 private:
  std::vector<std::string> streets_;
};

struct AddressFeatures {
  int street1 = -1;
  int street2 = -1;
  int is_intersection = 0;
  int is_block = 0;
  int street_type = -1;
  int pd_district = -1;
};

AddressFeatures address_features(const CrimeRecord& record, const AddressVocabulary& vocabulary);

// Fitted state needed to build rows. Members left empty make the matching
// features unavailable.
struct FeatureContext {
  std::optional<SpatialReference> reference;
  std::optional<AddressVocabulary> vocabulary;
  std::optional<std::vector<Point2>> centers;

  static FeatureContext fit(std::span<const CrimeRecord> train);
};

/// Row i holds record i's features in schema order, labels alongside.
/// Throws ConfigurationError when distance features lack centers and
/// StateError when spatial or street features lack their fitted state.
FeatureMatrix build_feature_matrix(std::span<const CrimeRecord> records, const FeatureSchema& schema,
                                   const FeatureContext& context);

/// Column z-scores with population stddev. Throws InsufficientDataError on an empty matrix.
Standardization fit_standardization(const FeatureMatrix& matrix);
FeatureMatrix apply_standardization(FeatureMatrix matrix, const Standardization& stats);
FeatureMatrix standardize(const FeatureMatrix& matrix);

/// Header is the schema followed by "label".
void write_feature_csv(std::ostream& out, const FeatureMatrix& matrix);
FeatureMatrix read_feature_csv(std::istream& in);

void to_json(nlohmann::json& j, const Standardization& s);
void from_json(const nlohmann::json& j, Standardization& s);

// Versioned sidecar holding everything fitted on the training set.
nlohmann::json featurizer_json(const FeatureSchema& schema, const FeatureContext& context,
                               const std::optional<Standardization>& standardization);

}  // namespace crimetype
