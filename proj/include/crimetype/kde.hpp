#pragma once

#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include "crimetype/kmeans.hpp"

namespace crimetype {

// Density sampled at cell centers of a regular nx x ny grid, row-major in y.
struct DensityGrid {
  double min_x = 0, max_x = 0, min_y = 0, max_y = 0;
  int nx = 0, ny = 0;
  double bandwidth = 0;
  std::vector<double> values;

  double cell_width() const { return (max_x - min_x) / nx; }
  double cell_height() const { return (max_y - min_y) / ny; }
  double cell_x(int ix) const { return min_x + (ix + 0.5) * cell_width(); }
  double cell_y(int iy) const { return min_y + (iy + 0.5) * cell_height(); }
  double at(int ix, int iy) const { return values[static_cast<std::size_t>(iy) * nx + ix]; }
  double integral() const;
};

/// Scott's rule for an isotropic 2-D kernel: sqrt((var_x + var_y) / 2) * N^(-1/6).
double scott_bandwidth(std::span<const Point2> points);

/// Isotropic Gaussian KDE over the points' bounding box padded by five
/// bandwidths. Bandwidth defaults to scott_bandwidth.
DensityGrid kde_density_grid(std::span<const Point2> points, std::optional<double> bandwidth,
                             int nx = 100, int ny = 100);

void write_density_csv(std::ostream& out, const DensityGrid& grid);

}  // namespace crimetype
