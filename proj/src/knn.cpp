#include <algorithm>
#include <utility>

#include "crimetype/error.hpp"
#include "crimetype/models.hpp"
#include "model_common.hpp"

namespace crimetype {

std::unique_ptr<KnnClassifier> train_knn(const FeatureMatrix& matrix, const KnnParams& params,
                                         int class_count) {
  validate_training_matrix(matrix, class_count);
  if (params.k_neighbors < 1 || static_cast<std::size_t>(params.k_neighbors) > matrix.rows) {
    throw ParameterError("k_neighbors must lie in [1, " + std::to_string(matrix.rows) + "], got " +
                         std::to_string(params.k_neighbors));
  }
  auto model = std::unique_ptr<KnnClassifier>(new KnnClassifier());
  model->set_header(matrix.schema, class_count);
  model->params_ = params;
  model->rows_ = matrix.rows;
  model->values_ = matrix.values;
  model->labels_ = matrix.labels;
  return model;
}

void KnnClassifier::predict_row(std::span<const double> x, std::span<double> out) const {
  const std::size_t f = x.size();
  const std::size_t k = static_cast<std::size_t>(params_.k_neighbors);
  // Max-heap on (distance, row): the worst kept neighbour sits on top, and a
  // larger row index counts as farther on equal distance.
  std::vector<std::pair<double, std::size_t>> heap;
  heap.reserve(k + 1);
  for (std::size_t i = 0; i < rows_; ++i) {
    const double* r = &values_[i * f];
    double d = 0;
    for (std::size_t j = 0; j < f; ++j) {
      const double diff = r[j] - x[j];
      d += diff * diff;
    }
    if (heap.size() < k) {
      heap.emplace_back(d, i);
      std::push_heap(heap.begin(), heap.end());
    } else if (std::make_pair(d, i) < heap.front()) {
      std::pop_heap(heap.begin(), heap.end());
      heap.back() = {d, i};
      std::push_heap(heap.begin(), heap.end());
    }
  }
  for (const auto& [d, i] : heap) out[labels_[i]] += 1.0;
  for (double& v : out) v /= static_cast<double>(k);
}

nlohmann::json KnnClassifier::hyperparameters() const { return {{"k_neighbors", params_.k_neighbors}}; }

nlohmann::json KnnClassifier::state() const {
  return {{"rows", rows_}, {"values", values_}, {"labels", labels_}};
}

std::unique_ptr<KnnClassifier> KnnClassifier::from_json(const nlohmann::json& j) {
  auto model = std::unique_ptr<KnnClassifier>(new KnnClassifier());
  model->load_header(j);
  model->params_.k_neighbors = j.at("hyperparameters").at("k_neighbors").get<int>();
  const auto& s = j.at("state");
  model->rows_ = s.at("rows").get<std::size_t>();
  model->values_ = s.at("values").get<std::vector<double>>();
  model->labels_ = s.at("labels").get<std::vector<int>>();
  if (model->values_.size() != model->rows_ * model->feature_names().size() ||
      model->labels_.size() != model->rows_) {
    throw FormatError("knn state has inconsistent sizes");
  }
  return model;
}

}  // namespace crimetype
