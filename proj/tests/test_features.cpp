#include <doctest.h>

#include <cmath>
#include <numbers>
#include <sstream>

#include "crimetype/centers.hpp"
#include "crimetype/error.hpp"
#include "crimetype/features.hpp"
#include "crimetype/pca.hpp"
#include "crimetype/random.hpp"
#include "support/synthetic.hpp"

using namespace crimetype;
using doctest::Approx;

namespace {

CrimeRecord record(double x, double y, Timestamp ts, std::optional<std::string> address = std::nullopt,
                   std::optional<int> district = std::nullopt) {
  CrimeRecord r;
  r.x = x;
  r.y = y;
  r.timestamp = ts;
  r.label = ClassLabel{19};
  r.address = std::move(address);
  r.district = district;
  return r;
}

FeatureMatrix matrix_from_columns(const std::vector<std::string>& names, const std::vector<std::vector<double>>& cols) {
  FeatureMatrix m;
  m.schema = FeatureSchema(names);
  m.rows = cols.front().size();
  for (std::size_t i = 0; i < m.rows; ++i) {
    for (const auto& c : cols) m.values.push_back(c[i]);
    m.labels.push_back(0);
  }
  return m;
}

}  // namespace

TEST_CASE("schema accepts the named features and rejects others") {
  CHECK(known_feature_names().size() == 27);
  CHECK(FeatureSchema::all_features().size() == 27);
  CHECK_NOTHROW(FeatureSchema({"Hour", "CenterDistance_3", "X"}));
  CHECK_THROWS_AS(FeatureSchema({"Hour", "Hour"}), SchemaError);
  CHECK_THROWS_AS(FeatureSchema({"Temperature"}), SchemaError);
  const FeatureSchema a({"Hour", "X"}), b({"X", "Hour"});
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() == FeatureSchema({"Hour", "X"}).fingerprint());
}

TEST_CASE("temporal features follow the calendar definitions") {
  auto t = temporal_features({2009, 4, 3, 8, 46});
  CHECK(t.hour == 8);
  CHECK(t.minute == 46);
  CHECK(t.month == 4);
  CHECK(t.year == 2009);
  CHECK(t.day == 3);
  CHECK(t.hour_zone == 1);
  CHECK(t.season == 1);
  CHECK(t.day_of_week == 4);
  CHECK(t.is_weekend == 0);
  CHECK(t.week_of_year == 14);

  t = temporal_features({2006, 1, 1, 0, 0});
  CHECK(t.hour == 0);
  CHECK(t.hour_zone == 0);
  CHECK(t.season == 0);
  CHECK(t.month == 1);
  CHECK(t.is_weekend == 1);  // a Sunday

  t = temporal_features({2006, 7, 26, 13, 35});
  CHECK(t.hour == 13);
  CHECK(t.hour_zone == 2);
  CHECK(t.season == 2);

  CHECK(temporal_features({2006, 12, 1, 23, 0}).season == 0);
  CHECK(temporal_features({2006, 11, 1, 23, 0}).season == 3);
  CHECK(temporal_features({2006, 11, 1, 23, 0}).hour_zone == 3);
}

TEST_CASE("temporal invariants over random timestamps") {
  Rng rng(5);
  for (int i = 0; i < 5000; ++i) {
    const Timestamp ts{2000 + static_cast<int>(uniform_index(rng, 20)), 1 + static_cast<int>(uniform_index(rng, 12)),
                       1 + static_cast<int>(uniform_index(rng, 28)), static_cast<int>(uniform_index(rng, 24)),
                       static_cast<int>(uniform_index(rng, 60))};
    const auto t = temporal_features(ts);
    CHECK(t.hour_zone == t.hour / 6);
    CHECK(t.is_weekend == (t.day_of_week >= 5 ? 1 : 0));
    CHECK((t.week_of_year >= 1 && t.week_of_year <= 53));
  }
}

TEST_CASE("spatial features from centroid offsets") {
  const SpatialReference ref{0, 0};
  auto s = spatial_features(1, 0, ref);
  CHECK(s.radius == Approx(1));
  CHECK(s.angle == Approx(0));
  CHECK(s.rot30x == Approx(0.866025).epsilon(1e-6));
  CHECK(s.rot30y == Approx(-0.5));

  s = spatial_features(0, 0, ref);
  CHECK(s.radius == 0);
  CHECK(s.angle == 0);
  CHECK(s.rot30x == 0);
  CHECK(s.rot45y == 0);
  CHECK(s.rot60x == 0);

  s = spatial_features(-75.03, 40.04, SpatialReference{-75.06, 40.0});
  CHECK(s.radius == Approx(0.05).epsilon(1e-9));
  CHECK(s.rot45x == Approx(0.049497).epsilon(1e-5));
  CHECK(s.rot45y == Approx(0.007071).epsilon(1e-4));
  CHECK(s.x == -75.03);
  CHECK(s.y == 40.04);

  CHECK(spatial_features(-1, 0, ref).angle == Approx(std::numbers::pi));
  CHECK(spatial_features(-1, -0.0, ref).angle == Approx(std::numbers::pi));
}

TEST_CASE("rotation isometry and polar consistency on random coordinates") {
  Rng rng(42);
  const SpatialReference ref{-75.13, 39.99};
  double worst = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = uniform(rng, -75.30, -74.95), y = uniform(rng, 39.85, 40.15);
    const auto s = spatial_features(x, y, ref);
    const double dx = x - ref.centroid_x, dy = y - ref.centroid_y;
    const double r2 = s.radius * s.radius;
    worst = std::max({worst, std::abs(s.rot30x * s.rot30x + s.rot30y * s.rot30y - r2),
                      std::abs(s.rot45x * s.rot45x + s.rot45y * s.rot45y - r2),
                      std::abs(s.rot60x * s.rot60x + s.rot60y * s.rot60y - r2),
                      std::abs(dx - s.radius * std::cos(s.angle)), std::abs(dy - s.radius * std::sin(s.angle))});
    CHECK(s.angle > -std::numbers::pi);
    CHECK(s.angle <= std::numbers::pi);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("address parsing") {
  auto p = parse_address("MARKET ST / 15TH ST");
  CHECK(p.is_intersection);
  CHECK_FALSE(p.is_block);
  CHECK(p.street1 == "MARKET ST");
  CHECK(p.street2 == "15TH ST");

  p = parse_address("3200 block chestnut st");
  CHECK(p.is_block);
  CHECK_FALSE(p.is_intersection);
  CHECK(p.street1 == "CHESTNUT ST");
  CHECK(p.street_type == "ST");

  p = parse_address("1500 N BROAD STREET");
  CHECK_FALSE(p.is_block);
  CHECK(p.street_type == "ST");

  CHECK(street_type_code("ST") >= 0);
  CHECK(street_type_code("AVE") != street_type_code("ST"));
  CHECK(street_type_code("XYZ") == -1);
}

TEST_CASE("address features use a vocabulary fitted on training rows") {
  const std::vector<CrimeRecord> train{
      record(-75.1, 40.0, {2009, 1, 1, 0, 0}, "MARKET ST / 15TH ST", 6),
      record(-75.1, 40.0, {2009, 1, 1, 0, 0}, "3200 BLOCK CHESTNUT ST"),
  };
  const auto vocab = AddressVocabulary::fit(train);
  CHECK(vocab.streets() == std::vector<std::string>{"15TH ST", "CHESTNUT ST", "MARKET ST"});

  auto a = address_features(train[0], vocab);
  CHECK(a.is_intersection == 1);
  CHECK(a.is_block == 0);
  CHECK(a.street1 != a.street2);
  CHECK(a.street1 >= 0);
  CHECK(a.street2 >= 0);
  CHECK(a.pd_district == 6);

  a = address_features(train[1], vocab);
  CHECK(a.is_block == 1);
  CHECK(a.is_intersection == 0);
  CHECK(a.street_type == street_type_code("ST"));
  CHECK(a.street2 == -1);

  a = address_features(record(-75.1, 40.0, {2009, 1, 1, 0, 0}), vocab);
  CHECK(a.is_intersection == 0);
  CHECK(a.is_block == 0);
  CHECK(a.street1 == -1);
  CHECK(a.street2 == -1);
  CHECK(a.street_type == -1);
  CHECK(a.pd_district == -1);

  CHECK(address_features(record(-75.1, 40.0, {2009, 1, 1, 0, 0}, "100 BLOCK UNSEEN RD"), vocab).street1 == -1);
}

TEST_CASE("build_feature_matrix") {
  const std::vector<CrimeRecord> rows{record(-75.174324, 39.986978, {2009, 4, 3, 8, 46})};
  const auto ctx = FeatureContext::fit(rows);
  const auto m = build_feature_matrix(rows, FeatureSchema({"Hour", "X", "Y"}), ctx);
  REQUIRE(m.rows == 1);
  CHECK(m.at(0, 0) == 8);
  CHECK(m.at(0, 1) == -75.174324);
  CHECK(m.at(0, 2) == 39.986978);
  CHECK(m.labels == std::vector<int>{19});

  const auto empty = build_feature_matrix(std::vector<CrimeRecord>{}, FeatureSchema({"Hour", "X"}), ctx);
  CHECK(empty.rows == 0);
  CHECK(empty.cols() == 2);

  FeatureContext with_centers;
  with_centers.centers = std::vector<Point2>{{0, 0}};
  const std::vector<CrimeRecord> p{record(3, 4, {2009, 4, 3, 8, 46})};
  const auto d = build_feature_matrix(p, FeatureSchema({"Hour", "NearestClusterDistance"}), with_centers);
  CHECK(d.at(0, 1) == Approx(5.0));

  with_centers.centers = std::vector<Point2>{{0, 0}, {3, 0}};
  const auto per = build_feature_matrix(p, FeatureSchema({"CenterDistance_0", "CenterDistance_1"}), with_centers);
  CHECK(per.at(0, 0) == Approx(5.0));
  CHECK(per.at(0, 1) == Approx(4.0));

  CHECK_THROWS_AS(build_feature_matrix(p, FeatureSchema({"NearestClusterDistance"}), FeatureContext{}),
                  ConfigurationError);
  CHECK_THROWS_AS(build_feature_matrix(p, FeatureSchema({"CenterDistance_5"}), with_centers), ConfigurationError);
  CHECK_THROWS_AS(build_feature_matrix(p, FeatureSchema({"Street1"}), FeatureContext{}), StateError);
  CHECK_THROWS_AS(build_feature_matrix(p, FeatureSchema({"Radius"}), FeatureContext{}), StateError);
  CHECK_THROWS_AS(build_feature_matrix(p, FeatureSchema({"PC1"}), FeatureContext{}), ConfigurationError);
}

TEST_CASE("standardization") {
  auto m = matrix_from_columns({"Hour", "Day"}, {{1, 2, 3}, {5, 5, 5}});
  const auto z = standardize(m);
  CHECK(z.at(0, 0) == Approx(-1.224745).epsilon(1e-6));
  CHECK(z.at(1, 0) == Approx(0).scale(1));
  CHECK(z.at(2, 0) == Approx(1.224745).epsilon(1e-6));
  for (std::size_t i = 0; i < 3; ++i) CHECK(z.at(i, 1) == 0.0);
  REQUIRE(z.standardization);
  CHECK(z.standardization->stddev[1] == 0.0);

  const auto again = standardize(z);
  for (std::size_t k = 0; k < z.values.size(); ++k) CHECK(std::abs(again.values[k] - z.values[k]) < 1e-9);

  CHECK_THROWS_AS(fit_standardization(FeatureMatrix{}), InsufficientDataError);
}

TEST_CASE("standardized synthetic features have zero mean and unit spread") {
  testing::SyntheticCrimeOptions o;
  o.records = 800;
  const auto recs = testing::synthetic_crimes(o);
  const std::span<const CrimeRecord> all(recs);
  const auto train = all.first(600), test = all.subspan(600);
  auto ctx = FeatureContext::fit(train);
  ctx.centers = std::vector<Point2>{{-75.1, 40.0}, {-75.2, 39.95}};
  const auto schema = FeatureSchema::all_features();
  const auto m = build_feature_matrix(train, schema, ctx);
  const auto stats = fit_standardization(m);
  const auto z = apply_standardization(m, stats);
  for (std::size_t j = 0; j < z.cols(); ++j) {
    double mean = 0, sq = 0;
    for (std::size_t i = 0; i < z.rows; ++i) mean += z.at(i, j);
    mean /= static_cast<double>(z.rows);
    for (std::size_t i = 0; i < z.rows; ++i) sq += (z.at(i, j) - mean) * (z.at(i, j) - mean);
    const double sd = std::sqrt(sq / static_cast<double>(z.rows));
    CHECK(std::abs(mean) < 1e-9);
    if (stats.stddev[j] > 0) CHECK(std::abs(sd - 1.0) < 1e-9);
  }
  const auto zt = apply_standardization(build_feature_matrix(test, schema, ctx), stats);
  for (double v : zt.values) CHECK(std::isfinite(v));
}

TEST_CASE("feature CSV round trip") {
  auto m = matrix_from_columns({"Hour", "Radius"}, {{1, 2}, {0.125, -3.5e-7}});
  m.labels = {4, 32};
  std::stringstream buf;
  write_feature_csv(buf, m);
  const auto back = read_feature_csv(buf);
  CHECK(back.schema == m.schema);
  CHECK(back.values == m.values);
  CHECK(back.labels == m.labels);

  std::istringstream bad("Hour,X\n1,2\n");
  CHECK_THROWS_AS(read_feature_csv(bad), FormatError);
}

TEST_CASE("PCA on rank-one data") {
  std::vector<double> xs;
  for (int i = 0; i < 50; ++i) xs.push_back(i * 0.1 - 2.0);
  const auto m = matrix_from_columns({"X", "Y"}, {xs, xs});
  const auto model = pca_fit(m);
  CHECK(model.explained_variance_ratio[0] == Approx(1.0).epsilon(1e-12));
  CHECK(std::abs(model.explained_variance_ratio[1]) < 1e-12);
  CHECK(model.components[0][0] == Approx(std::sqrt(0.5)));
  CHECK(model.components[0][1] == Approx(std::sqrt(0.5)));
  CHECK_THROWS_AS(pca_transform(model, m, 3), ParameterError);
  CHECK_THROWS_AS(pca_fit(matrix_from_columns({"X"}, {{1.0}})), InsufficientDataError);
}

TEST_CASE("PCA on an isotropic Gaussian sample") {
  Rng rng(2024);
  std::vector<double> a, b;
  for (int i = 0; i < 10000; ++i) {
    a.push_back(standard_normal(rng));
    b.push_back(standard_normal(rng));
  }
  const auto model = pca_fit(standardize(matrix_from_columns({"X", "Y"}, {a, b})));
  CHECK(model.explained_variance_ratio[0] == Approx(0.5).epsilon(0.04));
  CHECK(model.explained_variance_ratio[1] == Approx(0.5).epsilon(0.04));
}

TEST_CASE("PCA properties on synthetic features") {
  testing::SyntheticCrimeOptions o;
  o.records = 600;
  const auto recs = testing::synthetic_crimes(o);
  std::vector<std::string> names = known_feature_names();
  names.pop_back();  // no centers here
  const auto z = standardize(build_feature_matrix(recs, FeatureSchema(names), FeatureContext::fit(recs)));
  const auto model = pca_fit(z);
  const std::size_t f = z.cols();

  double sum = 0;
  for (std::size_t c = 0; c < f; ++c) {
    sum += model.explained_variance_ratio[c];
    CHECK(model.explained_variance_ratio[c] >= 0);
    if (c > 0) CHECK(model.explained_variance_ratio[c] <= model.explained_variance_ratio[c - 1]);
  }
  CHECK(std::abs(sum - 1.0) < 1e-9);

  double worst = 0;
  for (std::size_t a = 0; a < f; ++a) {
    for (std::size_t b = 0; b < f; ++b) {
      double dot = 0;
      for (std::size_t j = 0; j < f; ++j) dot += model.components[a][j] * model.components[b][j];
      worst = std::max(worst, std::abs(dot - (a == b ? 1.0 : 0.0)));
    }
  }
  CHECK(worst < 1e-9);

  const auto projected = pca_transform(model, z, f);
  CHECK(projected.schema.names().front() == "PC1");
  CHECK(projected.labels == z.labels);
  const auto back = pca_inverse_transform(model, projected);
  double err = 0;
  for (std::size_t k = 0; k < z.values.size(); ++k) err = std::max(err, std::abs(back.values[k] - z.values[k]));
  CHECK(err < 1e-6);
}
