#include "crimetype/models.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "crimetype/error.hpp"
#include "crimetype/parallel.hpp"
#include "model_common.hpp"

namespace crimetype {

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Knn: return "knn";
    case ModelKind::GaussianNb: return "gaussian_nb";
    case ModelKind::DecisionTree: return "decision_tree";
    case ModelKind::RandomForest: return "random_forest";
    case ModelKind::LogisticRegression: return "logistic_regression";
    case ModelKind::Svm: return "svm";
    case ModelKind::Mlp: return "mlp";
  }
  return "unknown";
}

ModelKind parse_model_kind(std::string_view text) {
  for (auto kind : {ModelKind::Knn, ModelKind::GaussianNb, ModelKind::DecisionTree, ModelKind::RandomForest,
                    ModelKind::LogisticRegression, ModelKind::Svm, ModelKind::Mlp}) {
    if (to_string(kind) == text) return kind;
  }
  throw ParameterError("unknown model kind '" + std::string(text) + "'");
}

void Classifier::set_header(const FeatureSchema& schema, int class_count) {
  feature_names_ = schema.names();
  fingerprint_ = schema.fingerprint();
  class_count_ = class_count;
}

void Classifier::load_header(const nlohmann::json& j) {
  feature_names_ = j.at("feature_names").get<std::vector<std::string>>();
  fingerprint_ = j.at("schema_fingerprint").get<std::string>();
  class_count_ = j.at("class_count").get<int>();
  if (FeatureSchema(feature_names_).fingerprint() != fingerprint_) {
    throw FormatError("model schema_fingerprint does not match its feature_names");
  }
}

ProbabilityMatrix Classifier::predict_proba(const FeatureMatrix& matrix, int threads) const {
  if (matrix.schema.fingerprint() != fingerprint_) {
    throw SchemaError("feature schema " + matrix.schema.fingerprint() +
                      " does not match the schema the model was trained on (" + fingerprint_ + ")");
  }
  ProbabilityMatrix p(matrix.rows, static_cast<std::size_t>(class_count_));
  constexpr std::size_t kChunk = 256;
  const std::size_t chunks = (matrix.rows + kChunk - 1) / kChunk;
  parallel_for(chunks, threads, [&](std::size_t c) {
    const std::size_t end = std::min(matrix.rows, (c + 1) * kChunk);
    for (std::size_t i = c * kChunk; i < end; ++i) {
      auto out = p.row(i);
      predict_row(matrix.row(i), out);
      double sum = 0;
      for (double v : out) sum += v;
      if (sum > 0 && std::isfinite(sum)) {
        for (double& v : out) v /= sum;
      } else {
        std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
      }
    }
  });
  return p;
}

nlohmann::json Classifier::to_json() const {
  return nlohmann::json{{"format_version", kModelFormatVersion},
                        {"kind", to_string(kind())},
                        {"hyperparameters", hyperparameters()},
                        {"schema_fingerprint", fingerprint_},
                        {"feature_names", feature_names_},
                        {"class_count", class_count_},
                        {"state", state()}};
}

std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j) {
  try {
    if (!j.is_object() || !j.contains("format_version")) throw FormatError("model document has no format_version");
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw FormatError("unsupported model format_version " + std::to_string(version));
    }
    const auto kind_text = j.at("kind").get<std::string>();
    ModelKind kind;
    try {
      kind = parse_model_kind(kind_text);
    } catch (const ParameterError&) {
      throw FormatError("unknown model kind '" + kind_text + "'");
    }
    switch (kind) {
      case ModelKind::Knn: return KnnClassifier::from_json(j);
      case ModelKind::GaussianNb: return GaussianNbClassifier::from_json(j);
      case ModelKind::DecisionTree: return DecisionTreeClassifier::from_json(j);
      case ModelKind::RandomForest: return RandomForestClassifier::from_json(j);
      case ModelKind::LogisticRegression: return LogisticRegressionClassifier::from_json(j);
      case ModelKind::Svm:
      case ModelKind::Mlp: break;
    }
    throw FormatError("model kind '" + kind_text + "' has no serialized form");
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed model document: ") + e.what());
  }
}

void validate_training_matrix(const FeatureMatrix& matrix, int class_count) {
  if (class_count < 1) throw ParameterError("class count must be positive");
  if (matrix.rows == 0) throw InsufficientDataError("cannot train on an empty matrix");
  if (matrix.labels.size() != matrix.rows) throw SchemaError("label count does not match row count");
  for (int label : matrix.labels) {
    if (label < 0 || label >= class_count) {
      throw LabelError("training label " + std::to_string(label) + " outside [0, " +
                       std::to_string(class_count) + ")");
    }
  }
  for (double v : matrix.values) {
    if (!std::isfinite(v)) throw ParameterError("training matrix contains a non-finite value");
  }
}

std::unique_ptr<Classifier> train_classifier(ModelKind kind, const FeatureMatrix& matrix,
                                             const nlohmann::json& hp, const TrainOptions& options) {
  const nlohmann::json h = hp.is_object() ? hp : nlohmann::json::object();
  static const std::map<ModelKind, std::set<std::string>> kAllowed{
      {ModelKind::Knn, {"k_neighbors"}},
      {ModelKind::GaussianNb, {}},
      {ModelKind::DecisionTree, {"max_depth", "min_samples_leaf", "prune", "confidence_factor"}},
      {ModelKind::RandomForest,
       {"n_trees", "features_per_split", "bootstrap", "seed", "max_depth", "min_samples_leaf", "prune",
        "confidence_factor"}},
      {ModelKind::LogisticRegression, {"l2", "learning_rate", "epochs"}},
  };
  if (const auto it = kAllowed.find(kind); it != kAllowed.end()) {
    for (const auto& item : h.items()) {
      if (!it->second.count(item.key())) {
        throw ParameterError("unknown hyperparameter '" + item.key() + "' for " + std::string(to_string(kind)));
      }
    }
  }
  try {
    switch (kind) {
      case ModelKind::Knn: {
        KnnParams p;
        p.k_neighbors = h.value("k_neighbors", p.k_neighbors);
        return train_knn(matrix, p, options.class_count);
      }
      case ModelKind::GaussianNb:
        return train_gaussian_nb(matrix, options.class_count);
      case ModelKind::DecisionTree: {
        TreeParams p;
        p.max_depth = h.value("max_depth", p.max_depth);
        p.min_samples_leaf = h.value("min_samples_leaf", p.min_samples_leaf);
        p.prune = h.value("prune", p.prune);
        p.confidence_factor = h.value("confidence_factor", p.confidence_factor);
        return train_decision_tree(matrix, p, options.class_count);
      }
      case ModelKind::RandomForest: {
        ForestParams p;
        p.n_trees = h.value("n_trees", p.n_trees);
        p.features_per_split = h.value("features_per_split", p.features_per_split);
        p.bootstrap = h.value("bootstrap", p.bootstrap);
        p.seed = h.value("seed", options.seed);
        p.tree.max_depth = h.value("max_depth", p.tree.max_depth);
        p.tree.min_samples_leaf = h.value("min_samples_leaf", p.tree.min_samples_leaf);
        p.tree.prune = h.value("prune", p.tree.prune);
        p.tree.confidence_factor = h.value("confidence_factor", p.tree.confidence_factor);
        return train_random_forest(matrix, p, options.class_count, options.threads);
      }
      case ModelKind::LogisticRegression: {
        LogisticParams p;
        p.l2 = h.value("l2", p.l2);
        p.learning_rate = h.value("learning_rate", p.learning_rate);
        p.epochs = h.value("epochs", p.epochs);
        return train_logistic_regression(matrix, p, options.class_count);
      }
      case ModelKind::Svm:
      case ModelKind::Mlp:
        break;
    }
  } catch (const nlohmann::json::exception& e) {
    throw ParameterError(std::string("bad hyperparameter: ") + e.what());
  }
  throw UnsupportedModelError(std::string(to_string(kind)) +
                              " training is not supported: it did not finish on the reference data");
}

}  // namespace crimetype
