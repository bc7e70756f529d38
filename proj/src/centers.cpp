#include "crimetype/centers.hpp"

#include <cmath>
#include <limits>
#include <map>

#include "crimetype/error.hpp"
#include "crimetype/parallel.hpp"

namespace crimetype {

std::vector<Point2> StackedCenters::points() const {
  std::vector<Point2> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.center);
  return out;
}

std::vector<int> StackedCenters::years() const {
  std::vector<int> out;
  for (const auto& e : entries) {
    if (out.empty() || out.back() != e.year) out.push_back(e.year);
  }
  return out;
}

StackedCenters stack_yearly_centers(std::span<const CrimeRecord> records, int k,
                                    const KMeansOptions& options, ShortYearPolicy policy) {
  if (k < 1) throw ParameterError("k must be at least 1, got " + std::to_string(k));
  std::map<int, std::vector<Point2>> by_year;
  for (const auto& r : records) by_year[r.timestamp.year].push_back({r.x, r.y});
  if (by_year.empty()) throw InsufficientDataError("no records to cluster");

  std::vector<int> years;
  std::vector<const std::vector<Point2>*> groups;
  StackedCenters stacked;
  stacked.k = k;
  for (const auto& [year, pts] : by_year) {
    if (pts.size() < static_cast<std::size_t>(k) ||
        count_distinct(pts) < static_cast<std::size_t>(k)) {
      if (policy == ShortYearPolicy::Skip) {
        stacked.skipped_years.push_back(year);
        continue;
      }
      throw InsufficientDataError("year " + std::to_string(year) + " has too few distinct points (" +
                                  std::to_string(count_distinct(pts)) + ") for k = " +
                                  std::to_string(k));
    }
    years.push_back(year);
    groups.push_back(&pts);
  }
  if (groups.empty()) throw InsufficientDataError("every year was skipped for k = " + std::to_string(k));

  std::vector<ClusterModel> fits(groups.size());
  KMeansOptions per_year = options;
  per_year.threads = 1;
  parallel_for(groups.size(), options.threads,
               [&](std::size_t i) { fits[i] = kmeans_fit(*groups[i], k, per_year); });
  for (std::size_t i = 0; i < fits.size(); ++i) {
    for (const auto& c : fits[i].centers) stacked.entries.push_back({years[i], c});
  }
  return stacked;
}

double nearest_center_distance(const Point2& p, std::span<const Point2> centers) {
  if (centers.empty()) throw StateError("nearest-center distance requested with no centers");
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : centers) best = std::min(best, squared_distance(p, c));
  return std::sqrt(best);
}

double nearest_center_distance(const Point2& p, const StackedCenters& centers) {
  return nearest_center_distance(p, centers.points());
}

void to_json(nlohmann::json& j, const StackedCenters& s) {
  nlohmann::json entries = nlohmann::json::array();
  for (const auto& e : s.entries) entries.push_back({{"year", e.year}, {"center", e.center}});
  j = nlohmann::json{{"format_version", 1}, {"k", s.k}, {"entries", entries},
                     {"skipped_years", s.skipped_years}};
}

void from_json(const nlohmann::json& j, StackedCenters& s) {
  if (j.value("format_version", 0) != 1) throw FormatError("unsupported centers format_version");
  s.k = j.at("k").get<int>();
  s.entries.clear();
  for (const auto& e : j.at("entries")) {
    s.entries.push_back({e.at("year").get<int>(), e.at("center").get<Point2>()});
  }
  s.skipped_years = j.value("skipped_years", std::vector<int>{});
}

}  // namespace crimetype
