#include "crimetype/evaluation.hpp"

#include <cmath>
#include <map>

#include "crimetype/csv.hpp"
#include "crimetype/error.hpp"

namespace crimetype {

double pairwise_sum(std::span<const double> values) {
  if (values.size() <= 8) {
    double s = 0;
    for (double v : values) s += v;
    return s;
  }
  const std::size_t half = values.size() / 2;
  return pairwise_sum(values.first(half)) + pairwise_sum(values.subspan(half));
}

double fixed_order_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  // Summing deviations from the first value keeps a constant input exact.
  const double shift = values.front();
  std::vector<double> centered(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) centered[i] = values[i] - shift;
  return shift + pairwise_sum(centered) / static_cast<double>(values.size());
}

namespace {

void validate(const ProbabilityMatrix& p, std::span<const int> labels) {
  if (labels.size() != p.rows) {
    throw ParameterError("label count " + std::to_string(labels.size()) + " does not match " +
                         std::to_string(p.rows) + " prediction rows");
  }
  for (std::size_t i = 0; i < p.rows; ++i) {
    if (labels[i] < 0 || static_cast<std::size_t>(labels[i]) >= p.cols) {
      throw LabelError("label " + std::to_string(labels[i]) + " at row " + std::to_string(i) +
                       " outside [0, " + std::to_string(p.cols) + ")");
    }
    double sum = 0;
    for (double v : p.row(i)) {
      if (!(v >= 0) || !std::isfinite(v)) {
        throw ParameterError("probability row " + std::to_string(i) + " has a negative or non-finite entry");
      }
      sum += v;
    }
    if (!(sum > 0)) throw DegenerateRowError(i);
  }
}

double row_loss(std::span<const double> row, int label, double epsilon) {
  double sum = 0;
  for (double v : row) sum += v + epsilon;
  const double p = (row[static_cast<std::size_t>(label)] + epsilon) / sum;
  return -std::log(std::max(p, kProbabilityClip));
}

}  // namespace

std::vector<double> row_log_losses(const ProbabilityMatrix& p, std::span<const int> labels) {
  validate(p, labels);
  std::vector<double> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) out[i] = row_loss(p.row(i), labels[i], 0.0);
  return out;
}

double multiclass_log_loss(const ProbabilityMatrix& p, std::span<const int> labels) {
  const auto losses = row_log_losses(p, labels);
  return fixed_order_mean(losses);
}

std::vector<int> argmax_predictions(const ProbabilityMatrix& p) {
  std::vector<int> out(p.rows);
  for (std::size_t i = 0; i < p.rows; ++i) {
    const auto row = p.row(i);
    std::size_t best = 0;
    for (std::size_t c = 1; c < row.size(); ++c) {
      if (row[c] > row[best]) best = c;
    }
    out[i] = static_cast<int>(best);
  }
  return out;
}

double accuracy(const ProbabilityMatrix& p, std::span<const int> labels) {
  validate(p, labels);
  if (p.rows == 0) return 0.0;
  const auto pred = argmax_predictions(p);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.rows; ++i) correct += pred[i] == labels[i] ? 1 : 0;
  return static_cast<double>(correct) / static_cast<double>(p.rows);
}

std::vector<LabelDiagnostics> per_label_diagnostics(const ProbabilityMatrix& p, std::span<const int> labels) {
  const auto losses = row_log_losses(p, labels);
  const auto pred = argmax_predictions(p);
  std::map<int, std::vector<double>> wrong;
  for (std::size_t i = 0; i < p.rows; ++i) {
    if (pred[i] != labels[i]) wrong[labels[i]].push_back(losses[i]);
  }
  std::vector<LabelDiagnostics> table;
  for (const auto& [label, values] : wrong) {
    table.push_back({label, values.size(), fixed_order_mean(values)});
  }
  return table;
}

double baseline_uniform_loss(int class_count) {
  if (class_count < 1) throw ParameterError("class count must be at least 1");
  return std::log(static_cast<double>(class_count));
}

std::vector<double> default_smoothing_grid() {
  std::vector<double> grid{0.0};
  constexpr int kSteps = 60;
  for (int i = 0; i < kSteps; ++i) {
    grid.push_back(std::pow(10.0, -7.0 + 6.0 * i / (kSteps - 1)));
  }
  return grid;
}

SmoothingResult smoothing_search(const ProbabilityMatrix& p, std::span<const int> labels,
                                 std::span<const double> grid) {
  if (grid.empty()) throw ParameterError("smoothing grid is empty");
  for (double e : grid) {
    if (!(e >= 0) || !std::isfinite(e)) throw ParameterError("smoothing epsilon must be >= 0, got " + format_number(e));
  }
  validate(p, labels);
  SmoothingResult r;
  r.epsilon_grid.assign(grid.begin(), grid.end());
  std::vector<double> row(p.rows);
  double loss_at_zero = NAN;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (std::size_t i = 0; i < p.rows; ++i) row[i] = row_loss(p.row(i), labels[i], grid[g]);
    const double loss = fixed_order_mean(row);
    r.losses.push_back(loss);
    if (grid[g] == 0.0 && std::isnan(loss_at_zero)) loss_at_zero = loss;
    if (g == 0 || loss < r.best_loss) {
      r.best_loss = loss;
      r.best_epsilon = grid[g];
    }
  }
  if (std::isfinite(loss_at_zero) && loss_at_zero > 0) {
    r.improvement_percent = 100.0 * (loss_at_zero - r.best_loss) / loss_at_zero;
  }
  return r;
}

EvaluationReport evaluate(const ProbabilityMatrix& p, std::span<const int> labels, std::string model_kind) {
  EvaluationReport r;
  r.model_kind = std::move(model_kind);
  r.n = p.rows;
  r.class_count = p.cols;
  r.log_loss = multiclass_log_loss(p, labels);
  r.accuracy = accuracy(p, labels);
  r.baseline_log_loss = baseline_uniform_loss(static_cast<int>(p.cols));
  r.per_label = per_label_diagnostics(p, labels);
  return r;
}

void to_json(nlohmann::json& j, const LabelDiagnostics& d) {
  j = nlohmann::json{{"label", d.label}, {"mispredictions", d.mispredictions}, {"mean_log_loss", d.mean_log_loss}};
}

void to_json(nlohmann::json& j, const EvaluationReport& r) {
  j = nlohmann::json{{"format_version", 1},
                     {"model_kind", r.model_kind},
                     {"n", r.n},
                     {"class_count", r.class_count},
                     {"log_loss", r.log_loss},
                     {"accuracy", r.accuracy},
                     {"baseline_log_loss", r.baseline_log_loss},
                     {"per_label", r.per_label}};
}

void to_json(nlohmann::json& j, const SmoothingResult& r) {
  j = nlohmann::json{{"format_version", 1},
                     {"epsilon_grid", r.epsilon_grid},
                     {"losses", r.losses},
                     {"best_epsilon", r.best_epsilon},
                     {"best_loss", r.best_loss},
                     {"improvement_percent", r.improvement_percent}};
}

void write_per_label_csv(std::ostream& out, std::span<const LabelDiagnostics> table) {
  out << "label,mispredictions,mean_log_loss\n";
  for (const auto& d : table) out << d.label << ',' << d.mispredictions << ',' << format_number(d.mean_log_loss) << '\n';
}

void write_smoothing_csv(std::ostream& out, const SmoothingResult& r) {
  out << "epsilon,log_loss\n";
  for (std::size_t i = 0; i < r.losses.size(); ++i) {
    out << format_number(r.epsilon_grid[i]) << ',' << format_number(r.losses[i]) << '\n';
  }
}

}  // namespace crimetype
