#include <algorithm>
#include <cmath>

#include "crimetype/error.hpp"
#include "crimetype/models.hpp"
#include "model_common.hpp"

namespace crimetype {

namespace {

// logits = W x + b, then in-place log-sum-exp softmax. Returns log(sum exp).
double softmax_row(std::span<const double> params, std::size_t c_count, std::span<const double> x,
                   std::span<double> probs) {
  const std::size_t f = x.size();
  const double* bias = params.data() + c_count * f;
  double top = -INFINITY;
  for (std::size_t c = 0; c < c_count; ++c) {
    double z = bias[c];
    const double* w = params.data() + c * f;
    for (std::size_t j = 0; j < f; ++j) z += w[j] * x[j];
    probs[c] = z;
    top = std::max(top, z);
  }
  double sum = 0;
  for (std::size_t c = 0; c < c_count; ++c) sum += std::exp(probs[c] - top);
  const double lse = top + std::log(sum);
  for (std::size_t c = 0; c < c_count; ++c) probs[c] = std::exp(probs[c] - lse);
  return lse;
}

}  // namespace

double softmax_objective(const FeatureMatrix& matrix, std::span<const double> parameters, int class_count,
                         double l2, std::span<double> gradient) {
  const std::size_t f = matrix.cols();
  const auto c_count = static_cast<std::size_t>(class_count);
  if (parameters.size() != c_count * (f + 1) || gradient.size() != parameters.size()) {
    throw ParameterError("softmax parameter vector has the wrong size");
  }
  std::fill(gradient.begin(), gradient.end(), 0.0);
  std::vector<double> probs(c_count);
  std::vector<double> logits(c_count);
  double loss = 0;
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    const auto x = matrix.row(i);
    const auto y = static_cast<std::size_t>(matrix.labels[i]);
    const double lse = softmax_row(parameters, c_count, x, probs);
    double zy = parameters[c_count * f + y];
    for (std::size_t j = 0; j < f; ++j) zy += parameters[y * f + j] * x[j];
    loss += lse - zy;
    for (std::size_t c = 0; c < c_count; ++c) {
      const double r = probs[c] - (c == y ? 1.0 : 0.0);
      double* g = gradient.data() + c * f;
      for (std::size_t j = 0; j < f; ++j) g[j] += r * x[j];
      gradient[c_count * f + c] += r;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(matrix.rows, 1));
  loss /= n;
  for (double& g : gradient) g /= n;
  double penalty = 0;
  for (std::size_t k = 0; k < c_count * f; ++k) {
    penalty += parameters[k] * parameters[k];
    gradient[k] += l2 * parameters[k];
  }
  return loss + 0.5 * l2 * penalty;
}

std::unique_ptr<LogisticRegressionClassifier> train_logistic_regression(const FeatureMatrix& matrix,
                                                                        const LogisticParams& params,
                                                                        int class_count) {
  if (!(params.l2 >= 0) || !(params.learning_rate > 0) || params.epochs < 0) {
    throw ParameterError("logistic regression needs l2 >= 0, learning_rate > 0 and epochs >= 0");
  }
  validate_training_matrix(matrix, class_count);
  auto model = std::unique_ptr<LogisticRegressionClassifier>(new LogisticRegressionClassifier());
  model->set_header(matrix.schema, class_count);
  model->params_ = params;
  const std::size_t size = static_cast<std::size_t>(class_count) * (matrix.cols() + 1);
  model->parameters_.assign(size, 0.0);
  std::vector<double> grad(size);
  for (int epoch = 1; epoch <= params.epochs; ++epoch) {
    const double loss = softmax_objective(matrix, model->parameters_, class_count, params.l2, grad);
    if (!std::isfinite(loss)) throw DivergenceError(epoch);
    model->loss_history_.push_back(loss);
    for (std::size_t k = 0; k < size; ++k) model->parameters_[k] -= params.learning_rate * grad[k];
  }
  for (double w : model->parameters_) {
    if (!std::isfinite(w)) throw DivergenceError(params.epochs);
  }
  return model;
}

void LogisticRegressionClassifier::predict_row(std::span<const double> x, std::span<double> out) const {
  softmax_row(parameters_, out.size(), x, out);
}

nlohmann::json LogisticRegressionClassifier::hyperparameters() const {
  return {{"l2", params_.l2}, {"learning_rate", params_.learning_rate}, {"epochs", params_.epochs}};
}

nlohmann::json LogisticRegressionClassifier::state() const {
  return {{"parameters", parameters_}, {"final_loss", loss_history_.empty() ? 0.0 : loss_history_.back()}};
}

std::unique_ptr<LogisticRegressionClassifier> LogisticRegressionClassifier::from_json(const nlohmann::json& j) {
  auto model = std::unique_ptr<LogisticRegressionClassifier>(new LogisticRegressionClassifier());
  model->load_header(j);
  const auto& h = j.at("hyperparameters");
  model->params_.l2 = h.at("l2").get<double>();
  model->params_.learning_rate = h.at("learning_rate").get<double>();
  model->params_.epochs = h.at("epochs").get<int>();
  model->parameters_ = j.at("state").at("parameters").get<std::vector<double>>();
  const std::size_t expected = static_cast<std::size_t>(model->class_count()) * (model->feature_names().size() + 1);
  if (model->parameters_.size() != expected) throw FormatError("logistic_regression state has the wrong size");
  // Zero epochs means the objective was never evaluated.
  if (const auto it = j.at("state").find("final_loss"); it != j.at("state").end() && model->params_.epochs > 0) {
    model->loss_history_.push_back(it->get<double>());
  }
  return model;
}

}  // namespace crimetype
