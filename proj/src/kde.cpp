#include "crimetype/kde.hpp"

#include <algorithm>
#include <cmath>

#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"

namespace crimetype {

namespace {
constexpr double kPadBandwidths = 5.0;
constexpr double kCutoffBandwidths = 8.0;
constexpr double kTwoPi = 6.283185307179586;
}  // namespace

double DensityGrid::integral() const {
  double sum = 0;
  for (double v : values) sum += v;
  return sum * cell_width() * cell_height();
}

double scott_bandwidth(std::span<const Point2> points) {
  const double n = static_cast<double>(points.size());
  if (points.size() < 2) return 0.0;
  double mx = 0, my = 0;
  for (const auto& p : points) {
    mx += p.x;
    my += p.y;
  }
  mx /= n;
  my /= n;
  double vx = 0, vy = 0;
  for (const auto& p : points) {
    vx += (p.x - mx) * (p.x - mx);
    vy += (p.y - my) * (p.y - my);
  }
  return std::sqrt((vx + vy) / (2.0 * (n - 1))) * std::pow(n, -1.0 / 6.0);
}

DensityGrid kde_density_grid(std::span<const Point2> points, std::optional<double> bandwidth,
                             int nx, int ny) {
  if (points.empty()) throw ParameterError("density grid needs at least one point");
  if (nx < 1 || ny < 1) throw ParameterError("density grid resolution must be positive");
  const double h = bandwidth ? *bandwidth : scott_bandwidth(points);
  if (!(h > 0) || !std::isfinite(h)) {
    throw ParameterError(bandwidth ? "bandwidth must be positive"
                                   : "cannot derive a bandwidth from degenerate points; pass one");
  }

  DensityGrid g;
  g.bandwidth = h;
  g.nx = nx;
  g.ny = ny;
  g.min_x = g.max_x = points[0].x;
  g.min_y = g.max_y = points[0].y;
  for (const auto& p : points) {
    g.min_x = std::min(g.min_x, p.x);
    g.max_x = std::max(g.max_x, p.x);
    g.min_y = std::min(g.min_y, p.y);
    g.max_y = std::max(g.max_y, p.y);
  }
  g.min_x -= kPadBandwidths * h;
  g.max_x += kPadBandwidths * h;
  g.min_y -= kPadBandwidths * h;
  g.max_y += kPadBandwidths * h;
  g.values.assign(static_cast<std::size_t>(nx) * ny, 0.0);

  const double dx = g.cell_width(), dy = g.cell_height();
  const double inv2h2 = 1.0 / (2.0 * h * h);
  const double reach = kCutoffBandwidths * h;
  for (const auto& p : points) {
    const int ix0 = std::max(0, static_cast<int>(std::floor((p.x - reach - g.min_x) / dx)));
    const int ix1 = std::min(nx - 1, static_cast<int>(std::floor((p.x + reach - g.min_x) / dx)));
    const int iy0 = std::max(0, static_cast<int>(std::floor((p.y - reach - g.min_y) / dy)));
    const int iy1 = std::min(ny - 1, static_cast<int>(std::floor((p.y + reach - g.min_y) / dy)));
    for (int iy = iy0; iy <= iy1; ++iy) {
      const double ddy = g.cell_y(iy) - p.y;
      double* row = &g.values[static_cast<std::size_t>(iy) * nx];
      for (int ix = ix0; ix <= ix1; ++ix) {
        const double ddx = g.cell_x(ix) - p.x;
        row[ix] += std::exp(-(ddx * ddx + ddy * ddy) * inv2h2);
      }
    }
  }
  const double norm = 1.0 / (static_cast<double>(points.size()) * kTwoPi * h * h);
  for (double& v : g.values) v *= norm;
  return g;
}

void write_density_csv(std::ostream& out, const DensityGrid& grid) {
  out << "x,y,density\n";
  for (int iy = 0; iy < grid.ny; ++iy) {
    for (int ix = 0; ix < grid.nx; ++ix) {
      out << format_number(grid.cell_x(ix)) << ',' << format_number(grid.cell_y(iy)) << ','
          << format_number(grid.at(ix, iy)) << '\n';
    }
  }
}

}  // namespace crimetype
