#include "crimetype/kmeans.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "crimetype/error.hpp"
#include "crimetype/parallel.hpp"
#include "crimetype/random.hpp"

namespace crimetype {

int nearest_center(const Point2& p, std::span<const Point2> centers) {
  int best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centers.size(); ++j) {
    const double d = squared_distance(p, centers[j]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<int>(j);
    }
  }
  return best;
}

double inertia(std::span<const Point2> points, std::span<const Point2> centers) {
  double total = 0;
  for (const auto& p : points) total += squared_distance(p, centers[nearest_center(p, centers)]);
  return total;
}

std::size_t count_distinct(std::span<const Point2> points) {
  std::vector<Point2> sorted(points.begin(), points.end());
  auto less = [](const Point2& a, const Point2& b) { return a.x < b.x || (a.x == b.x && a.y < b.y); };
  std::sort(sorted.begin(), sorted.end(), less);
  return static_cast<std::size_t>(std::unique(sorted.begin(), sorted.end()) - sorted.begin());
}

namespace {

std::vector<Point2> kmeans_plus_plus(std::span<const Point2> points, int k, Rng& rng) {
  const std::size_t n = points.size();
  std::vector<Point2> centers;
  centers.reserve(k);
  centers.push_back(points[uniform_index(rng, n)]);
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(points[i], centers[0]);
  while (static_cast<int>(centers.size()) < k) {
    double total = 0;
    for (double d : d2) total += d;
    const double target = uniform01(rng) * total;
    std::size_t chosen = n;
    double cumulative = 0;
    for (std::size_t i = 0; i < n; ++i) {
      if (d2[i] <= 0) continue;
      chosen = i;
      cumulative += d2[i];
      if (cumulative > target) break;
    }
    centers.push_back(points[chosen]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(points[i], centers.back()));
    }
  }
  return centers;
}

struct Assignment {
  std::vector<int> labels;
  std::vector<double> d2;
  double inertia = 0;
};

void assign(std::span<const Point2> points, std::span<const Point2> centers, Assignment& a) {
  a.inertia = 0;
  for (std::size_t i = 0; i < points.size(); ++i) {
    const int j = nearest_center(points[i], centers);
    a.labels[i] = j;
    a.d2[i] = squared_distance(points[i], centers[j]);
    a.inertia += a.d2[i];
  }
}

// Single-point moves that lower the total even after both affected means shift.
// Runs after Lloyd converges; every stable state here is also a Lloyd fixed point.
// Returns true when some point moved.
bool hartigan_refine(std::span<const Point2> points, int k, std::vector<int>& labels, int max_passes) {
  const std::size_t n = points.size();
  std::vector<double> sx(k, 0.0), sy(k, 0.0);
  std::vector<std::size_t> count(k, 0);
  for (std::size_t i = 0; i < n; ++i) {
    sx[labels[i]] += points[i].x;
    sy[labels[i]] += points[i].y;
    count[labels[i]]++;
  }
  auto mean = [&](int j) { return Point2{sx[j] / count[j], sy[j] / count[j]}; };
  bool moved_any = false;
  for (int pass = 0; pass < max_passes; ++pass) {
    bool moved = false;
    for (std::size_t i = 0; i < n; ++i) {
      const int a = labels[i];
      if (count[a] < 2) continue;
      const double na = static_cast<double>(count[a]);
      const double leave = na / (na - 1) * squared_distance(points[i], mean(a));
      int best = a;
      double best_cost = leave;
      for (int b = 0; b < k; ++b) {
        if (b == a || count[b] == 0) continue;
        const double nb = static_cast<double>(count[b]);
        const double join = nb / (nb + 1) * squared_distance(points[i], mean(b));
        if (join < best_cost) {
          best_cost = join;
          best = b;
        }
      }
      // Relative margin so rounding noise cannot cycle a point back and forth.
      if (best == a || best_cost >= leave * (1 - 1e-12)) continue;
      sx[a] -= points[i].x;
      sy[a] -= points[i].y;
      count[a]--;
      sx[best] += points[i].x;
      sy[best] += points[i].y;
      count[best]++;
      labels[i] = best;
      moved = true;
    }
    if (!moved) break;
    moved_any = true;
  }
  return moved_any;
}

ClusterModel lloyd(std::span<const Point2> points, int k, const KMeansOptions& opt, Rng& rng) {
  const std::size_t n = points.size();
  ClusterModel m;
  m.k = k;
  m.centers = kmeans_plus_plus(points, k, rng);
  Assignment a{std::vector<int>(n), std::vector<double>(n), 0};

  std::vector<double> sx(k), sy(k);
  std::vector<std::size_t> count(k);
  for (int iter = 0; iter < opt.max_iter; ++iter) {
    assign(points, m.centers, a);
    m.inertia_history.push_back(a.inertia);

    std::fill(sx.begin(), sx.end(), 0.0);
    std::fill(sy.begin(), sy.end(), 0.0);
    std::fill(count.begin(), count.end(), 0);
    for (std::size_t i = 0; i < n; ++i) {
      sx[a.labels[i]] += points[i].x;
      sy[a.labels[i]] += points[i].y;
      count[a.labels[i]]++;
    }
    std::vector<Point2> next(k);
    for (int j = 0; j < k; ++j) {
      if (count[j] > 0) next[j] = {sx[j] / count[j], sy[j] / count[j]};
    }
    // Empty cluster: move its center onto the point worst served by its own center.
    for (int j = 0; j < k; ++j) {
      if (count[j] > 0) continue;
      std::size_t far = 0;
      for (std::size_t i = 1; i < n; ++i) {
        if (a.d2[i] > a.d2[far]) far = i;
      }
      next[j] = points[far];
      a.d2[far] = 0;
    }
    double shift = 0;
    for (int j = 0; j < k; ++j) shift += squared_distance(next[j], m.centers[j]);
    m.centers = std::move(next);
    m.iterations_run = iter + 1;
    if (shift < opt.tol) break;
  }
  assign(points, m.centers, a);
  m.inertia_history.push_back(a.inertia);
  if (hartigan_refine(points, k, a.labels, opt.max_iter)) {
    for (int j = 0; j < k; ++j) {
      Point2 sum{};
      std::size_t c = 0;
      for (std::size_t i = 0; i < n; ++i) {
        if (a.labels[i] != j) continue;
        sum.x += points[i].x;
        sum.y += points[i].y;
        ++c;
      }
      if (c > 0) m.centers[j] = {sum.x / c, sum.y / c};
    }
    assign(points, m.centers, a);
    m.inertia_history.push_back(a.inertia);
  }
  m.inertia = a.inertia;
  m.assignments = std::move(a.labels);
  return m;
}

}  // namespace

ClusterModel kmeans_fit(std::span<const Point2> points, int k, const KMeansOptions& options) {
  if (k < 1) throw ParameterError("k must be at least 1, got " + std::to_string(k));
  if (static_cast<std::size_t>(k) > points.size()) {
    throw ParameterError("k = " + std::to_string(k) + " exceeds the number of points (" +
                         std::to_string(points.size()) + ")");
  }
  if (options.n_init < 1 || options.max_iter < 1 || !(options.tol >= 0)) {
    throw ParameterError("k-means needs n_init >= 1, max_iter >= 1 and tol >= 0");
  }
  for (const auto& p : points) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) {
      throw ParameterError("k-means input contains a non-finite coordinate");
    }
  }
  const std::size_t distinct = count_distinct(points);
  if (static_cast<std::size_t>(k) > distinct) {
    throw ParameterError("k = " + std::to_string(k) + " exceeds the number of distinct points (" +
                         std::to_string(distinct) + ")");
  }

  std::vector<ClusterModel> runs(options.n_init);
  parallel_for(runs.size(), options.threads, [&](std::size_t r) {
    Rng rng(derive_seed(options.seed, "kmeans_init", r));
    runs[r] = lloyd(points, k, options, rng);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < runs.size(); ++r) {
    if (runs[r].inertia < runs[best].inertia) best = r;
  }
  ClusterModel m = std::move(runs[best]);
  m.seed = options.seed;
  return m;
}

void to_json(nlohmann::json& j, const Point2& p) { j = nlohmann::json::array({p.x, p.y}); }

void from_json(const nlohmann::json& j, Point2& p) {
  if (!j.is_array() || j.size() != 2) throw FormatError("point must be a two-element array");
  p.x = j[0].get<double>();
  p.y = j[1].get<double>();
}

void to_json(nlohmann::json& j, const ClusterModel& m) {
  j = nlohmann::json{{"format_version", 1},
                     {"k", m.k},
                     {"centers", m.centers},
                     {"inertia", m.inertia},
                     {"iterations_run", m.iterations_run},
                     {"seed", m.seed},
                     {"assignments", m.assignments}};
}

}  // namespace crimetype
