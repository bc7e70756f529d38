#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "crimetype/centers.hpp"
#include "crimetype/error.hpp"
#include "crimetype/kde.hpp"
#include "crimetype/kmeans.hpp"
#include "crimetype/kselect.hpp"
#include "crimetype/random.hpp"
#include "support/synthetic.hpp"

using namespace crimetype;
using doctest::Approx;

namespace {

// Exhaustive optimum over every 2-partition (point 0 fixed in part A).
double best_two_partition(std::span<const Point2> pts) {
  const std::size_t n = pts.size();
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t mask = 0; mask < (1u << (n - 1)); ++mask) {
    Point2 c[2]{};
    double cnt[2]{};
    for (std::size_t i = 0; i < n; ++i) {
      const int part = i == 0 ? 0 : (mask >> (i - 1)) & 1;
      c[part].x += pts[i].x;
      c[part].y += pts[i].y;
      cnt[part] += 1;
    }
    if (cnt[1] == 0) continue;
    for (int p = 0; p < 2; ++p) {
      c[p].x /= cnt[p];
      c[p].y /= cnt[p];
    }
    double w = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const int part = i == 0 ? 0 : (mask >> (i - 1)) & 1;
      w += squared_distance(pts[i], c[part]);
    }
    best = std::min(best, w);
  }
  return best;
}

CrimeRecord rec(double x, double y, int year) {
  CrimeRecord r;
  r.x = x;
  r.y = y;
  r.timestamp = Timestamp{year, 6, 1, 12, 0};
  return r;
}

}  // namespace

TEST_CASE("k-means on the unit square") {
  const std::vector<Point2> sq{{0, 0}, {1, 0}, {0, 1}, {1, 1}};
  const auto m = kmeans_fit(sq, 1);
  CHECK(m.centers[0].x == Approx(0.5));
  CHECK(m.centers[0].y == Approx(0.5));
  CHECK(m.inertia == Approx(2.0));

  const auto full = kmeans_fit(sq, 4);
  CHECK(full.inertia == 0.0);
  for (std::size_t i = 0; i < sq.size(); ++i) CHECK(full.centers[full.assignments[i]] == sq[i]);
}

TEST_CASE("k-means parameter errors") {
  const std::vector<Point2> pts{{0, 0}, {0, 0}, {1, 1}};
  CHECK_THROWS_AS(kmeans_fit(pts, 0), ParameterError);
  CHECK_THROWS_AS(kmeans_fit(pts, 4), ParameterError);
  CHECK_THROWS_AS(kmeans_fit(pts, 3), ParameterError);  // only two distinct points
  CHECK_NOTHROW(kmeans_fit(pts, 2));
}

TEST_CASE("k-means matches the exhaustive 2-partition optimum") {
  Rng rng(99);
  for (int trial = 0; trial < 60; ++trial) {
    const std::size_t n = 2 + uniform_index(rng, 7);
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({uniform01(rng), uniform01(rng)});
    KMeansOptions o;
    o.seed = derive_seed(5, "test", static_cast<std::uint64_t>(trial));
    CHECK(kmeans_fit(pts, 2, o).inertia == Approx(best_two_partition(pts)).epsilon(1e-9));
  }
}

TEST_CASE("k-means model invariants") {
  const auto centers = testing::circle_centers(4, 1.0, 0.3);
  const auto pts = testing::gaussian_blobs(centers, 60, 0.2, 17);
  KMeansOptions o;
  o.seed = 3;
  const auto m = kmeans_fit(pts, 4, o);
  CHECK(inertia(pts, m.centers) == Approx(m.inertia).epsilon(1e-9));
  for (std::size_t i = 0; i < pts.size(); ++i) CHECK(m.assignments[i] == nearest_center(pts[i], m.centers));
  for (std::size_t c = 0; c < m.centers.size(); ++c) {
    Point2 mean{};
    double n = 0;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      if (m.assignments[i] == static_cast<int>(c)) {
        mean.x += pts[i].x;
        mean.y += pts[i].y;
        n += 1;
      }
    }
    REQUIRE(n > 0);
    CHECK(squared_distance({mean.x / n, mean.y / n}, m.centers[c]) < 1e-6);
  }
  for (std::size_t i = 1; i < m.inertia_history.size(); ++i) {
    CHECK(m.inertia_history[i] <= m.inertia_history[i - 1] * (1 + 1e-12));
  }
}

TEST_CASE("k-means is deterministic across runs and thread counts") {
  const auto pts = testing::gaussian_blobs(testing::circle_centers(5, 1.0, 0.0), 80, 0.3, 8);
  KMeansOptions o;
  o.seed = 12345;
  const auto a = kmeans_fit(pts, 5, o);
  o.threads = 4;
  const auto b = kmeans_fit(pts, 5, o);
  CHECK(a.centers == b.centers);
  CHECK(a.assignments == b.assignments);
  CHECK(a.inertia == b.inertia);
  CHECK(a.inertia_history == b.inertia_history);
}

TEST_CASE("nearest center ties go to the lowest index") {
  const std::vector<Point2> c{{-1, 0}, {1, 0}};
  CHECK(nearest_center({0, 0}, c) == 0);
  CHECK(nearest_center({0.5, 0}, c) == 1);
}

TEST_CASE("elbow finds three blobs") {
  const auto pts = testing::gaussian_blobs(testing::circle_centers(3, 1.0, 0.7), 200, 0.01, 21);
  KMeansOptions o;
  o.seed = 4;
  const auto e = elbow_select(pts, 10, o);
  CHECK(e.k_elbow == 3);
  CHECK(e.inertia.size() == 10);
  CHECK_THROWS_AS(elbow_select(pts, 2, o), ParameterError);
}

TEST_CASE("elbow on a straight curve returns the smallest k") {
  CHECK(elbow_from_curve({10, 8, 6, 4, 2}).k_elbow == 1);
  CHECK(elbow_from_curve({100, 20, 10, 8, 7}).k_elbow == 2);
}

TEST_CASE("gap statistic finds seven blobs") {
  const auto pts = testing::gaussian_blobs(testing::circle_centers(7, 1.5, 0.2), 200, 0.01, 77);
  KMeansOptions o;
  o.seed = 6;
  o.n_init = 3;
  const auto g = gap_statistic(pts, 16, 10, o);
  CHECK(g.chosen_k_max == 7);
  CHECK(g.rows.size() == 16);
  CHECK(g.B == 10);
  for (const auto& row : g.rows) {
    double mean = 0;
    for (double v : row.log_wkb) mean += v;
    mean /= static_cast<double>(row.log_wkb.size());
    CHECK(row.expected_log_wkb == Approx(mean).epsilon(1e-12));
    CHECK(row.gap == row.expected_log_wkb - row.log_wk);
    CHECK(row.s == Approx(row.sd * std::sqrt(1.0 + 1.0 / 10)).epsilon(1e-12));
  }
  CHECK(g.chosen_k_onesd == select_onesd(g.rows));
  CHECK(g.chosen_k_max == select_max(g.rows));
}

TEST_CASE("gap statistic on a single blob prefers one cluster") {
  Rng rng(8);
  std::vector<Point2> pts;
  for (int i = 0; i < 400; ++i) pts.push_back({standard_normal(rng), standard_normal(rng)});
  KMeansOptions o;
  o.seed = 10;
  o.n_init = 3;
  CHECK(gap_statistic(pts, 8, 10, o).chosen_k_onesd == 1);
}

TEST_CASE("gap selection rules on hand-built rows") {
  auto row = [](int k, double gap, double s) {
    GapRow r;
    r.k = k;
    r.gap = gap;
    r.s = s;
    return r;
  };
  std::vector<GapRow> rows{row(1, 0.1, 0.05), row(2, 0.5, 0.05), row(3, 0.52, 0.05), row(4, 0.4, 0.05)};
  CHECK(select_onesd(rows) == 2);
  CHECK(select_max(rows) == 3);
  std::vector<GapRow> rising{row(1, 0.1, 0.01), row(2, 0.2, 0.01), row(3, 0.3, 0.01)};
  CHECK(select_onesd(rising) == 3);
  std::vector<GapRow> tied{row(1, 0.3, 0.01), row(2, 0.3, 0.01)};
  CHECK(select_max(tied) == 1);
}

TEST_CASE("gap statistic floors zero inertia") {
  const std::vector<Point2> pts{{0, 0}, {1, 0}, {0, 1}};
  const auto g = gap_statistic(pts, 3, 2, KMeansOptions{});
  CHECK(g.rows[2].floored);
  CHECK(g.rows[2].log_wk == Approx(std::log(kLogFloor)));
  CHECK_THROWS_AS(gap_statistic(pts, 1, 2, KMeansOptions{}), ParameterError);
  CHECK_THROWS_AS(gap_statistic(pts, 2, 0, KMeansOptions{}), ParameterError);
}

TEST_CASE("yearly centers stack k per year") {
  std::vector<CrimeRecord> recs;
  Rng rng(1);
  for (int year = 2006; year <= 2015; ++year) {
    for (int i = 0; i < 40; ++i) recs.push_back(rec(uniform01(rng), uniform01(rng), year));
  }
  const auto s = stack_yearly_centers(recs, 7);
  CHECK(s.entries.size() == 70);
  CHECK(s.years().size() == 10);
  for (int year = 2006; year <= 2015; ++year) {
    CHECK(std::count_if(s.entries.begin(), s.entries.end(), [&](const YearCenter& e) { return e.year == year; }) == 7);
  }
}

TEST_CASE("yearly centers: single year and duplicated years") {
  std::vector<CrimeRecord> one, two;
  std::vector<Point2> pts;
  Rng rng(2);
  for (int i = 0; i < 50; ++i) {
    const double x = uniform01(rng), y = uniform01(rng);
    one.push_back(rec(x, y, 2010));
    two.push_back(rec(x, y, 2010));
    two.push_back(rec(x, y, 2011));
    pts.push_back({x, y});
  }
  KMeansOptions o;
  o.seed = 31;
  const auto s1 = stack_yearly_centers(one, 3, o);
  CHECK(s1.points() == kmeans_fit(pts, 3, o).centers);

  const auto s2 = stack_yearly_centers(two, 3, o);
  REQUIRE(s2.entries.size() == 6);
  for (int c = 0; c < 3; ++c) CHECK(s2.entries[c].center == s2.entries[c + 3].center);
}

TEST_CASE("short years fail or are skipped") {
  std::vector<CrimeRecord> recs{rec(0, 0, 2010), rec(1, 1, 2010), rec(2, 2, 2010), rec(0, 0, 2011)};
  CHECK_THROWS_AS(stack_yearly_centers(recs, 2), InsufficientDataError);
  const auto s = stack_yearly_centers(recs, 2, {}, ShortYearPolicy::Skip);
  CHECK(s.entries.size() == 2);
  CHECK(s.skipped_years == std::vector<int>{2011});
}

TEST_CASE("stacked centers JSON round trip") {
  std::vector<CrimeRecord> recs{rec(0, 0, 2010), rec(1, 1, 2010), rec(2, 2, 2011), rec(3, 1, 2011)};
  const auto s = stack_yearly_centers(recs, 2);
  const nlohmann::json j = s;
  const auto back = j.get<StackedCenters>();
  CHECK(back.points() == s.points());
  CHECK(back.years() == s.years());
}

TEST_CASE("nearest center distance") {
  const std::vector<Point2> c{{0, 0}, {10, 0}};
  CHECK(nearest_center_distance({10, 0}, c) == 0.0);
  CHECK(nearest_center_distance({3, 4}, std::vector<Point2>{{0, 0}}) == Approx(5.0));
  CHECK(nearest_center_distance({6, 0}, c) == Approx(4.0));
  CHECK_THROWS_AS(nearest_center_distance({0, 0}, std::vector<Point2>{}), StateError);

  Rng rng(4);
  for (int i = 0; i < 200; ++i) {
    std::vector<Point2> a, b;
    for (int j = 0; j < 3; ++j) a.push_back({uniform01(rng), uniform01(rng)});
    for (int j = 0; j < 4; ++j) b.push_back({uniform01(rng), uniform01(rng)});
    std::vector<Point2> u = a;
    u.insert(u.end(), b.begin(), b.end());
    const Point2 p{uniform01(rng), uniform01(rng)};
    CHECK(nearest_center_distance(p, u) == std::min(nearest_center_distance(p, a), nearest_center_distance(p, b)));
  }
}

TEST_CASE("KDE grid of a single point peaks at its cell") {
  const std::vector<Point2> p{{0.3, -0.2}};
  const auto g = kde_density_grid(p, 0.1, 41, 41);
  int bx = 0, by = 0;
  for (int iy = 0; iy < g.ny; ++iy) {
    for (int ix = 0; ix < g.nx; ++ix) {
      if (g.at(ix, iy) > g.at(bx, by)) {
        bx = ix;
        by = iy;
      }
    }
  }
  CHECK(std::abs(g.cell_x(bx) - 0.3) <= g.cell_width() / 2 + 1e-12);
  CHECK(std::abs(g.cell_y(by) + 0.2) <= g.cell_height() / 2 + 1e-12);
  CHECK_THROWS_AS(kde_density_grid(p, 0.0, 10, 10), ParameterError);
  CHECK_THROWS_AS(kde_density_grid(p, -1.0, 10, 10), ParameterError);
  CHECK_THROWS_AS(kde_density_grid(p, 0.1, 0, 10), ParameterError);
  CHECK_THROWS_AS(kde_density_grid(std::vector<Point2>{}, 0.1, 10, 10), ParameterError);
}

TEST_CASE("KDE grid of two distant points has two equal peaks") {
  const std::vector<Point2> p{{0, 0}, {1, 0}};
  const auto g = kde_density_grid(p, 0.05, 101, 11);
  std::vector<double> maxima;
  for (int ix = 1; ix + 1 < g.nx; ++ix) {
    const double v = g.at(ix, 5);
    if (v > g.at(ix - 1, 5) && v > g.at(ix + 1, 5)) maxima.push_back(v);
  }
  REQUIRE(maxima.size() == 2);
  CHECK(std::abs(maxima[0] - maxima[1]) < 1e-6);
}

TEST_CASE("KDE grid integrates to one") {
  Rng rng(12);
  std::vector<Point2> p;
  for (int i = 0; i < 1000; ++i) p.push_back({uniform01(rng), uniform01(rng)});
  const auto g = kde_density_grid(p, std::nullopt);
  CHECK(g.bandwidth == Approx(scott_bandwidth(p)));
  CHECK(std::abs(g.integral() - 1.0) < 1e-3);
  for (double v : g.values) CHECK(v >= 0);
}

TEST_CASE("no single point move lowers a fitted k-means inertia") {
  Rng rng(123);
  for (int trial = 0; trial < 40; ++trial) {
    const std::size_t n = 6 + uniform_index(rng, 30);
    const int k = 2 + static_cast<int>(uniform_index(rng, 3));
    std::vector<Point2> pts;
    for (std::size_t i = 0; i < n; ++i) pts.push_back({uniform01(rng), uniform01(rng)});
    KMeansOptions o;
    o.n_init = 1;
    o.seed = static_cast<std::uint64_t>(trial);
    const auto m = kmeans_fit(pts, k, o);

    auto total = [&](const std::vector<int>& labels) {
      double sum = 0;
      for (int c = 0; c < k; ++c) {
        Point2 mean{};
        double count = 0;
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] != c) continue;
          mean.x += pts[i].x;
          mean.y += pts[i].y;
          count += 1;
        }
        if (count == 0) continue;
        mean = {mean.x / count, mean.y / count};
        for (std::size_t i = 0; i < n; ++i) {
          if (labels[i] == c) sum += squared_distance(pts[i], mean);
        }
      }
      return sum;
    };
    const double base = total(m.assignments);
    CHECK(base == Approx(m.inertia).epsilon(1e-12));
    for (std::size_t i = 0; i < n; ++i) {
      for (int c = 0; c < k; ++c) {
        if (c == m.assignments[i]) continue;
        auto moved = m.assignments;
        moved[i] = c;
        CHECK(total(moved) >= base * (1 - 1e-9));
      }
    }
  }
}
