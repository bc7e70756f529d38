#pragma once

#include <istream>
#include <ostream>
#include <span>
#include <vector>

namespace crimetype {

// Row-major N x C matrix of class scores; rows need not be normalized.
struct ProbabilityMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  ProbabilityMatrix() = default;
  ProbabilityMatrix(std::size_t n, std::size_t c) : rows(n), cols(c), values(n * c, 0.0) {}

  std::span<double> row(std::size_t i) { return {values.data() + i * cols, cols}; }
  std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
  double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
  double& at(std::size_t i, std::size_t j) { return values[i * cols + j]; }
};

// CSV layout: header "label,p0,...,p{C-1}", one row per sample.
void write_predictions_csv(std::ostream& out, const ProbabilityMatrix& p, std::span<const int> labels);
ProbabilityMatrix read_predictions_csv(std::istream& in, std::vector<int>& labels);

}  // namespace crimetype
