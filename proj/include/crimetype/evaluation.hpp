#pragma once

#include <ostream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "crimetype/probability.hpp"

namespace crimetype {

inline constexpr double kProbabilityClip = 1e-15;

/// Fixed-order pairwise summation, so totals do not depend on how rows were produced.
double pairwise_sum(std::span<const double> values);
/// Mean built on pairwise_sum; returns 0 for an empty input and exactly v for n copies of v.
double fixed_order_mean(std::span<const double> values);

/// -log(max(p[i, y_i] / sum(row i), clip)) for every row. Throws
/// DegenerateRowError for a row whose sum is not positive and LabelError for
/// labels outside [0, C).
std::vector<double> row_log_losses(const ProbabilityMatrix& p, std::span<const int> labels);

/// fixed_order_mean of row_log_losses.
double multiclass_log_loss(const ProbabilityMatrix& p, std::span<const int> labels);

/// Argmax per row, ties to the lower class index.
std::vector<int> argmax_predictions(const ProbabilityMatrix& p);

double accuracy(const ProbabilityMatrix& p, std::span<const int> labels);

struct LabelDiagnostics {
  int label = 0;
  std::size_t mispredictions = 0;
  double mean_log_loss = 0;  // over the mispredicted rows only
};

/// One entry per true label with at least one misprediction, ascending label.
std::vector<LabelDiagnostics> per_label_diagnostics(const ProbabilityMatrix& p, std::span<const int> labels);

double baseline_uniform_loss(int class_count);

struct SmoothingResult {
  std::vector<double> epsilon_grid;
  std::vector<double> losses;
  double best_epsilon = 0;
  double best_loss = 0;
  double improvement_percent = 0;  // relative to epsilon = 0
};

/// 0 followed by 60 log-spaced values over [1e-7, 1e-1].
std::vector<double> default_smoothing_grid();

/// Log loss of P + epsilon for each grid value (renormalization absorbs the
/// inflated row sums). Ties keep the earlier grid entry. Throws
/// ParameterError for a negative epsilon.
SmoothingResult smoothing_search(const ProbabilityMatrix& p, std::span<const int> labels,
                                 std::span<const double> grid);

struct EvaluationReport {
  std::string model_kind;
  std::size_t n = 0;
  std::size_t class_count = 0;
  double log_loss = 0;
  double accuracy = 0;
  double baseline_log_loss = 0;
  std::vector<LabelDiagnostics> per_label;
};

EvaluationReport evaluate(const ProbabilityMatrix& p, std::span<const int> labels, std::string model_kind);

void to_json(nlohmann::json& j, const LabelDiagnostics& d);
void to_json(nlohmann::json& j, const EvaluationReport& r);
void to_json(nlohmann::json& j, const SmoothingResult& r);

// label,mispredictions,mean_log_loss
void write_per_label_csv(std::ostream& out, std::span<const LabelDiagnostics> table);
// epsilon,log_loss
void write_smoothing_csv(std::ostream& out, const SmoothingResult& r);

}  // namespace crimetype
