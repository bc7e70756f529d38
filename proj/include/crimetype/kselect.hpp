#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include <json.hpp>

#include "crimetype/kmeans.hpp"

namespace crimetype {

struct ElbowResult {
  int k_elbow = 1;
  std::vector<double> inertia;         // inertia[k - 1]
  std::vector<double> chord_distance;  // distance[k - 1], normalized axes
};

/// Fits k = 1..kmax and picks the k whose normalized (k, inertia) point lies
/// farthest from the chord between the first and last point. Ties and a
/// straight curve resolve to the smallest k. Requires kmax >= 3.
ElbowResult elbow_select(std::span<const Point2> points, int kmax, const KMeansOptions& options = {});

/// Chord-distance knee of an arbitrary decreasing curve, values[i] at k = i + 1.
ElbowResult elbow_from_curve(std::vector<double> values);

struct GapRow {
  int k = 0;
  double log_wk = 0;
  std::vector<double> log_wkb;  // one per reference set
  double expected_log_wkb = 0;
  double gap = 0;
  double sd = 0;
  double s = 0;  // sd * sqrt(1 + 1/B)
  bool floored = false;
};

struct GapReport {
  std::vector<GapRow> rows;  // rows[k - 1]
  int chosen_k_onesd = 1;
  int chosen_k_max = 1;
  int B = 0;
  std::uint64_t seed = 0;
};

inline constexpr double kLogFloor = 1e-12;

/// Gap(k) = mean_b log(W_kb) - log(W_k), with reference sets drawn uniformly
/// over the bounding box of the points. Requires kmax >= 2 and B >= 1.
GapReport gap_statistic(std::span<const Point2> points, int kmax, int B,
                        const KMeansOptions& options = {});

/// Smallest k with Gap(k) >= Gap(k+1) - s(k+1); kmax when none qualifies.
int select_onesd(const std::vector<GapRow>& rows);
/// Index of the largest gap; ties go to the smaller k.
int select_max(const std::vector<GapRow>& rows);

void to_json(nlohmann::json& j, const ElbowResult& r);
void to_json(nlohmann::json& j, const GapReport& r);

}  // namespace crimetype
