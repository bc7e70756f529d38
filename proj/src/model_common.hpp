#pragma once

#include "crimetype/models.hpp"

namespace crimetype {

// Rows >= 1, labels inside [0, class_count), finite values.
void validate_training_matrix(const FeatureMatrix& matrix, int class_count);

}  // namespace crimetype
