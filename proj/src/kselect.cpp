#include "crimetype/kselect.hpp"

#include <algorithm>
#include <cmath>

#include "crimetype/error.hpp"
#include "crimetype/parallel.hpp"
#include "crimetype/random.hpp"

namespace crimetype {

ElbowResult elbow_from_curve(std::vector<double> values) {
  ElbowResult r;
  r.inertia = std::move(values);
  const std::size_t n = r.inertia.size();
  r.chord_distance.assign(n, 0.0);
  if (n < 3) return r;

  const auto [lo, hi] = std::minmax_element(r.inertia.begin(), r.inertia.end());
  const double span_y = *hi - *lo;
  auto ny = [&](std::size_t i) { return span_y > 0 ? (r.inertia[i] - *lo) / span_y : 0.0; };
  auto nx = [&](std::size_t i) { return static_cast<double>(i) / static_cast<double>(n - 1); };

  const double x0 = nx(0), y0 = ny(0), x1 = nx(n - 1), y1 = ny(n - 1);
  const double len = std::hypot(x1 - x0, y1 - y0);
  double best = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double cross = (x1 - x0) * (y0 - ny(i)) - (x0 - nx(i)) * (y1 - y0);
    r.chord_distance[i] = len > 0 ? std::abs(cross) / len : 0.0;
    if (r.chord_distance[i] > best + 1e-12) {
      best = r.chord_distance[i];
      r.k_elbow = static_cast<int>(i) + 1;
    }
  }
  return r;
}

ElbowResult elbow_select(std::span<const Point2> points, int kmax, const KMeansOptions& options) {
  if (kmax < 3) throw ParameterError("elbow selection needs kmax >= 3");
  std::vector<double> curve(kmax);
  parallel_for(curve.size(), options.threads, [&](std::size_t i) {
    KMeansOptions o = options;
    o.threads = 1;
    o.seed = derive_seed(options.seed, "elbow", i + 1);
    curve[i] = kmeans_fit(points, static_cast<int>(i) + 1, o).inertia;
  });
  return elbow_from_curve(std::move(curve));
}

int select_onesd(const std::vector<GapRow>& rows) {
  for (std::size_t i = 0; i + 1 < rows.size(); ++i) {
    if (rows[i].gap >= rows[i + 1].gap - rows[i + 1].s) return rows[i].k;
  }
  return rows.empty() ? 1 : rows.back().k;
}

int select_max(const std::vector<GapRow>& rows) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (rows[i].gap > rows[best].gap) best = i;
  }
  return rows.empty() ? 1 : rows[best].k;
}

GapReport gap_statistic(std::span<const Point2> points, int kmax, int B,
                        const KMeansOptions& options) {
  if (kmax < 2) throw ParameterError("gap statistic needs kmax >= 2");
  if (B < 1) throw ParameterError("gap statistic needs at least one reference set");
  if (points.empty()) throw ParameterError("gap statistic needs at least one point");

  double min_x = points[0].x, max_x = points[0].x, min_y = points[0].y, max_y = points[0].y;
  for (const auto& p : points) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  std::vector<std::vector<Point2>> references(B);
  for (int b = 0; b < B; ++b) {
    Rng rng(derive_seed(options.seed, "gap_reference", b));
    auto& ref = references[b];
    ref.resize(points.size());
    for (auto& p : ref) {
      p.x = uniform(rng, min_x, max_x);
      p.y = uniform(rng, min_y, max_y);
    }
  }

  // Task t = b * kmax + (k - 1); b == B is the observed data.
  const std::size_t tasks = static_cast<std::size_t>(B + 1) * kmax;
  std::vector<double> w(tasks);
  parallel_for(tasks, options.threads, [&](std::size_t t) {
    const int b = static_cast<int>(t / kmax);
    const int k = static_cast<int>(t % kmax) + 1;
    KMeansOptions o = options;
    o.threads = 1;
    o.seed = derive_seed(options.seed, b == B ? "gap_data" : "gap_reference_fit",
                         static_cast<std::uint64_t>(b) * 1000 + k);
    std::span<const Point2> data = b == B ? points : std::span<const Point2>(references[b]);
    w[t] = kmeans_fit(data, k, o).inertia;
  });

  GapReport report;
  report.B = B;
  report.seed = options.seed;
  auto safe_log = [](double v, bool& floored) {
    if (v <= kLogFloor) floored = true;
    return std::log(std::max(v, kLogFloor));
  };
  for (int k = 1; k <= kmax; ++k) {
    GapRow row;
    row.k = k;
    row.log_wk = safe_log(w[static_cast<std::size_t>(B) * kmax + (k - 1)], row.floored);
    double sum = 0;
    for (int b = 0; b < B; ++b) {
      row.log_wkb.push_back(safe_log(w[static_cast<std::size_t>(b) * kmax + (k - 1)], row.floored));
      sum += row.log_wkb.back();
    }
    row.expected_log_wkb = sum / B;
    row.gap = row.expected_log_wkb - row.log_wk;
    double var = 0;
    for (double v : row.log_wkb) var += (v - row.expected_log_wkb) * (v - row.expected_log_wkb);
    row.sd = std::sqrt(var / B);
    row.s = row.sd * std::sqrt(1.0 + 1.0 / B);
    report.rows.push_back(std::move(row));
  }
  report.chosen_k_onesd = select_onesd(report.rows);
  report.chosen_k_max = select_max(report.rows);
  return report;
}

void to_json(nlohmann::json& j, const ElbowResult& r) {
  j = nlohmann::json{{"format_version", 1},
                     {"k_elbow", r.k_elbow},
                     {"inertia", r.inertia},
                     {"chord_distance", r.chord_distance}};
}

void to_json(nlohmann::json& j, const GapReport& r) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : r.rows) {
    rows.push_back({{"k", row.k},
                    {"log_wk", row.log_wk},
                    {"log_wkb", row.log_wkb},
                    {"expected_log_wkb", row.expected_log_wkb},
                    {"gap", row.gap},
                    {"sd", row.sd},
                    {"s", row.s},
                    {"floored", row.floored}});
  }
  j = nlohmann::json{{"format_version", 1}, {"rows", rows},
                     {"chosen_k_onesd", r.chosen_k_onesd}, {"chosen_k_max", r.chosen_k_max},
                     {"B", r.B}, {"seed", r.seed}};
}

}  // namespace crimetype
