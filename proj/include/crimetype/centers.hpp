#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "crimetype/ingest.hpp"
#include "crimetype/kmeans.hpp"

namespace crimetype {

struct YearCenter {
  int year = 0;
  Point2 center;
};

// Per-year k-means centers concatenated in ascending year order.
struct StackedCenters {
  int k = 0;
  std::vector<YearCenter> entries;
  std::vector<int> skipped_years;

  std::vector<Point2> points() const;
  std::vector<int> years() const;
};

enum class ShortYearPolicy { Fail, Skip };

/// Clusters each calendar year's (x, y) separately with the same options (so
/// identical years give identical centers) and stacks the results. A year
/// that cannot support k centers throws InsufficientDataError naming it, or
/// is listed in skipped_years under ShortYearPolicy::Skip.
StackedCenters stack_yearly_centers(std::span<const CrimeRecord> records, int k,
                                    const KMeansOptions& options = {},
                                    ShortYearPolicy policy = ShortYearPolicy::Fail);

/// Euclidean distance to the closest center. Throws StateError when empty.
double nearest_center_distance(const Point2& p, std::span<const Point2> centers);
double nearest_center_distance(const Point2& p, const StackedCenters& centers);

void to_json(nlohmann::json& j, const StackedCenters& s);
void from_json(const nlohmann::json& j, StackedCenters& s);

}  // namespace crimetype
