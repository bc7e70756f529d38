#include "crimetype/pca.hpp"

#include <cmath>

#include <Eigen/Dense>

#include "crimetype/error.hpp"

namespace crimetype {

PcaModel pca_fit(const FeatureMatrix& matrix) {
  if (matrix.rows < 2) throw InsufficientDataError("PCA needs at least two rows");
  const auto n = static_cast<Eigen::Index>(matrix.rows);
  const auto f = static_cast<Eigen::Index>(matrix.cols());
  if (f == 0) throw ParameterError("PCA needs at least one column");

  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> x(
      matrix.values.data(), n, f);
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centered = x.rowwise() - mean;
  const Eigen::MatrixXd cov = (centered.transpose() * centered) / static_cast<double>(n);

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(cov);
  if (solver.info() != Eigen::Success) throw StateError("PCA eigendecomposition failed");

  PcaModel model;
  model.input_names = matrix.schema.names();
  model.mean.assign(mean.data(), mean.data() + f);
  double total = 0;
  for (Eigen::Index c = f - 1; c >= 0; --c) {
    Eigen::VectorXd v = solver.eigenvectors().col(c);
    Eigen::Index arg = 0;
    v.cwiseAbs().maxCoeff(&arg);
    if (v(arg) < 0) v = -v;
    model.components.emplace_back(v.data(), v.data() + f);
    const double lambda = std::max(0.0, solver.eigenvalues()(c));
    model.explained_variance.push_back(lambda);
    total += lambda;
  }
  for (double lambda : model.explained_variance) {
    model.explained_variance_ratio.push_back(total > 0 ? lambda / total : 1.0 / static_cast<double>(f));
  }
  return model;
}

FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& matrix, std::size_t n_components) {
  const std::size_t f = model.mean.size();
  if (n_components == 0 || n_components > f) {
    throw ParameterError("n_components must lie in [1, " + std::to_string(f) + "], got " +
                         std::to_string(n_components));
  }
  if (matrix.cols() != f) throw SchemaError("PCA input width does not match the fitted model");
  std::vector<std::string> names;
  for (std::size_t c = 0; c < n_components; ++c) names.push_back("PC" + std::to_string(c + 1));
  FeatureMatrix out;
  out.schema = FeatureSchema(std::move(names));
  out.rows = matrix.rows;
  out.labels = matrix.labels;
  out.values.resize(matrix.rows * n_components);
  for (std::size_t i = 0; i < matrix.rows; ++i) {
    for (std::size_t c = 0; c < n_components; ++c) {
      double acc = 0;
      for (std::size_t j = 0; j < f; ++j) acc += (matrix.at(i, j) - model.mean[j]) * model.components[c][j];
      out.values[i * n_components + c] = acc;
    }
  }
  return out;
}

FeatureMatrix pca_inverse_transform(const PcaModel& model, const FeatureMatrix& projected) {
  const std::size_t f = model.mean.size();
  const std::size_t k = projected.cols();
  if (k == 0 || k > f) throw ParameterError("projected matrix width does not fit the PCA model");
  FeatureMatrix out;
  out.schema = FeatureSchema(model.input_names);
  out.rows = projected.rows;
  out.labels = projected.labels;
  out.values.resize(projected.rows * f);
  for (std::size_t i = 0; i < projected.rows; ++i) {
    for (std::size_t j = 0; j < f; ++j) {
      double acc = model.mean[j];
      for (std::size_t c = 0; c < k; ++c) acc += projected.at(i, c) * model.components[c][j];
      out.values[i * f + j] = acc;
    }
  }
  return out;
}

void to_json(nlohmann::json& j, const PcaModel& m) {
  j = nlohmann::json{{"format_version", 1},
                     {"input_names", m.input_names},
                     {"mean", m.mean},
                     {"components", m.components},
                     {"explained_variance", m.explained_variance},
                     {"explained_variance_ratio", m.explained_variance_ratio}};
}

}  // namespace crimetype
