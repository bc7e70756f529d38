#pragma once

#include <vector>

#include <json.hpp>

#include "crimetype/features.hpp"

namespace crimetype {

struct PcaModel {
  std::vector<std::string> input_names;
  std::vector<double> mean;
  // Row c is component c (unit length), ordered by decreasing variance. The
  // largest-magnitude entry of every component is positive.
  std::vector<std::vector<double>> components;
  std::vector<double> explained_variance;
  std::vector<double> explained_variance_ratio;
};

/// Eigendecomposition of the population covariance of the columns.
/// Throws InsufficientDataError when fewer than two rows are given.
PcaModel pca_fit(const FeatureMatrix& matrix);

/// Projects onto the first n_components; output columns are PC1..PCn.
/// Throws ParameterError when n_components is 0 or exceeds the width.
FeatureMatrix pca_transform(const PcaModel& model, const FeatureMatrix& matrix, std::size_t n_components);

/// Maps projected rows back into the input space.
FeatureMatrix pca_inverse_transform(const PcaModel& model, const FeatureMatrix& projected);

void to_json(nlohmann::json& j, const PcaModel& m);

}  // namespace crimetype
