#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

namespace crimetype {

struct Point2 {
  double x = 0;
  double y = 0;

  friend bool operator==(const Point2&, const Point2&) = default;
};

inline double squared_distance(const Point2& a, const Point2& b) {
  const double dx = a.x - b.x;
  const double dy = a.y - b.y;
  return dx * dx + dy * dy;
}

struct KMeansOptions {
  int n_init = 10;
  int max_iter = 300;
  double tol = 1e-6;  // total squared center shift, coordinate units squared
  std::uint64_t seed = 0;
  int threads = 1;
};

struct ClusterModel {
  int k = 0;
  std::vector<Point2> centers;
  double inertia = 0;
  std::vector<int> assignments;
  int iterations_run = 0;
  std::uint64_t seed = 0;
  // Inertia after every assignment step of the winning restart, final one last.
  std::vector<double> inertia_history;
};

/// Lloyd's algorithm with k-means++ seeding, best of n_init restarts by inertia
/// (ties go to the earlier restart). Restart r is seeded from (seed, r).
/// Throws ParameterError when k < 1, k > N, or k exceeds the distinct points.
ClusterModel kmeans_fit(std::span<const Point2> points, int k, const KMeansOptions& options = {});

/// Index of the nearest center; ties go to the lowest index.
int nearest_center(const Point2& p, std::span<const Point2> centers);

/// Sum of squared distances from each point to its nearest center.
double inertia(std::span<const Point2> points, std::span<const Point2> centers);

std::size_t count_distinct(std::span<const Point2> points);

void to_json(nlohmann::json& j, const Point2& p);
void from_json(const nlohmann::json& j, Point2& p);
void to_json(nlohmann::json& j, const ClusterModel& m);

}  // namespace crimetype
