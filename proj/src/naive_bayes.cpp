#include <cmath>
#include <limits>

#include "crimetype/error.hpp"
#include "crimetype/models.hpp"
#include "model_common.hpp"

namespace crimetype {

std::unique_ptr<GaussianNbClassifier> train_gaussian_nb(const FeatureMatrix& matrix, int class_count) {
  validate_training_matrix(matrix, class_count);
  if (matrix.rows < 2) throw InsufficientDataError("gaussian naive bayes needs at least two rows");
  const std::size_t f = matrix.cols();
  const std::size_t c_count = static_cast<std::size_t>(class_count);

  std::vector<double> counts(c_count, 0.0);
  std::vector<double> means(c_count * f, 0.0);
  std::vector<double> vars(c_count * f, 0.0);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    const auto c = static_cast<std::size_t>(matrix.labels[i]);
    counts[c] += 1;
    for (std::size_t j = 0; j < f; ++j) means[c * f + j] += matrix.at(i, j);
  }
  for (std::size_t c = 0; c < c_count; ++c) {
    if (counts[c] == 0) continue;
    for (std::size_t j = 0; j < f; ++j) means[c * f + j] /= counts[c];
  }
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    const auto c = static_cast<std::size_t>(matrix.labels[i]);
    for (std::size_t j = 0; j < f; ++j) {
      const double d = matrix.at(i, j) - means[c * f + j];
      vars[c * f + j] += d * d;
    }
  }
  auto model = std::unique_ptr<GaussianNbClassifier>(new GaussianNbClassifier());
  model->set_header(matrix.schema, class_count);
  model->priors_.resize(c_count);
  for (std::size_t c = 0; c < c_count; ++c) {
    model->priors_[c] = counts[c] / static_cast<double>(matrix.rows);
    for (std::size_t j = 0; j < f; ++j) {
      vars[c * f + j] = (counts[c] > 0 ? vars[c * f + j] / counts[c] : 0.0) + kVarianceFloor;
    }
  }
  model->means_ = std::move(means);
  model->variances_ = std::move(vars);
  return model;
}

void GaussianNbClassifier::predict_row(std::span<const double> x, std::span<double> out) const {
  constexpr double kLog2Pi = 1.8378770664093453;
  const std::size_t f = x.size();
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < priors_.size(); ++c) {
    if (priors_[c] <= 0) {
      out[c] = -std::numeric_limits<double>::infinity();
      continue;
    }
    double lp = std::log(priors_[c]);
    for (std::size_t j = 0; j < f; ++j) {
      const double var = variances_[c * f + j];
      const double d = x[j] - means_[c * f + j];
      lp -= 0.5 * (kLog2Pi + std::log(var) + d * d / var);
    }
    out[c] = lp;
    top = std::max(top, lp);
  }
  double sum = 0;
  for (double& v : out) {
    v = std::isinf(v) && v < 0 ? 0.0 : std::exp(v - top);
    sum += v;
  }
  for (double& v : out) v /= sum;
}

nlohmann::json GaussianNbClassifier::hyperparameters() const {
  return {{"variance_floor", kVarianceFloor}};
}

nlohmann::json GaussianNbClassifier::state() const {
  return {{"priors", priors_}, {"means", means_}, {"variances", variances_}};
}

std::unique_ptr<GaussianNbClassifier> GaussianNbClassifier::from_json(const nlohmann::json& j) {
  auto model = std::unique_ptr<GaussianNbClassifier>(new GaussianNbClassifier());
  model->load_header(j);
  const auto& s = j.at("state");
  model->priors_ = s.at("priors").get<std::vector<double>>();
  model->means_ = s.at("means").get<std::vector<double>>();
  model->variances_ = s.at("variances").get<std::vector<double>>();
  const std::size_t expected = model->priors_.size() * model->feature_names().size();
  if (static_cast<int>(model->priors_.size()) != model->class_count() || model->means_.size() != expected ||
      model->variances_.size() != expected) {
    throw FormatError("gaussian_nb state has inconsistent sizes");
  }
  return model;
}

}  // namespace crimetype
