#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <json.hpp>

#include "crimetype/features.hpp"
#include "crimetype/labels.hpp"
#include "crimetype/probability.hpp"
#include "crimetype/random.hpp"

namespace crimetype {

enum class ModelKind { Knn, GaussianNb, DecisionTree, RandomForest, LogisticRegression, Svm, Mlp };

std::string_view to_string(ModelKind kind);
/// Accepts the snake_case names used in configs. Throws ParameterError.
ModelKind parse_model_kind(std::string_view text);

inline constexpr int kModelFormatVersion = 1;

// Shared contract: a fitted model maps feature rows onto class_count()
// probabilities in label-index order. Fitted models are immutable.
class Classifier {
 public:
  virtual ~Classifier() = default;

  virtual ModelKind kind() const = 0;
  int class_count() const noexcept { return class_count_; }
  const std::vector<std::string>& feature_names() const noexcept { return feature_names_; }
  const std::string& schema_fingerprint() const noexcept { return fingerprint_; }

  /// Row-stochastic N x class_count() matrix. Throws SchemaError when the
  /// matrix schema differs from the training schema.
  ProbabilityMatrix predict_proba(const FeatureMatrix& matrix, int threads = 1) const;

  /// {format_version, kind, hyperparameters, schema_fingerprint, feature_names, class_count, state}
  nlohmann::json to_json() const;

  virtual nlohmann::json hyperparameters() const = 0;

 protected:
  Classifier() = default;
  void set_header(const FeatureSchema& schema, int class_count);
  void load_header(const nlohmann::json& j);

  // `out` has class_count() slots and arrives zeroed.
  virtual void predict_row(std::span<const double> x, std::span<double> out) const = 0;
  virtual nlohmann::json state() const = 0;

 private:
  int class_count_ = kLabelCount;
  std::vector<std::string> feature_names_;
  std::string fingerprint_;
};

/// Rebuilds any model written by Classifier::to_json. Throws FormatError on an
/// unknown format_version, kind, or malformed state.
std::unique_ptr<Classifier> load_classifier(const nlohmann::json& j);

// ---------------------------------------------------------------- knn

struct KnnParams {
  int k_neighbors = 5;
};

class KnnClassifier final : public Classifier {
 public:
  ModelKind kind() const override { return ModelKind::Knn; }
  nlohmann::json hyperparameters() const override;

  static std::unique_ptr<KnnClassifier> from_json(const nlohmann::json& j);

 protected:
  void predict_row(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const override;

 private:
  friend std::unique_ptr<KnnClassifier> train_knn(const FeatureMatrix&, const KnnParams&, int);
  KnnParams params_;
  std::size_t rows_ = 0;
  std::vector<double> values_;
  std::vector<int> labels_;
};

/// Stores the training rows; probabilities are vote fractions among the k
/// nearest rows (Euclidean, distance ties to the lower row index).
std::unique_ptr<KnnClassifier> train_knn(const FeatureMatrix& matrix, const KnnParams& params = {},
                                         int class_count = kLabelCount);

// ---------------------------------------------------------------- gaussian naive bayes

inline constexpr double kVarianceFloor = 1e-9;

class GaussianNbClassifier final : public Classifier {
 public:
  ModelKind kind() const override { return ModelKind::GaussianNb; }
  nlohmann::json hyperparameters() const override;

  const std::vector<double>& priors() const noexcept { return priors_; }

  static std::unique_ptr<GaussianNbClassifier> from_json(const nlohmann::json& j);

 protected:
  void predict_row(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const override;

 private:
  friend std::unique_ptr<GaussianNbClassifier> train_gaussian_nb(const FeatureMatrix&, int);
  std::vector<double> priors_;     // C
  std::vector<double> means_;      // C x F
  std::vector<double> variances_;  // C x F, floor included
};

std::unique_ptr<GaussianNbClassifier> train_gaussian_nb(const FeatureMatrix& matrix,
                                                        int class_count = kLabelCount);

// ---------------------------------------------------------------- trees

struct TreeParams {
  int max_depth = 0;  // 0 = unbounded
  int min_samples_leaf = 1;
  bool prune = true;
  double confidence_factor = 0.3;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;  // x[feature] <= threshold goes left
  int left = -1;
  int right = -1;
  std::vector<double> histogram;  // class counts of the training rows reaching the node
  double samples = 0;
  double impurity = 0;  // Gini

  bool is_leaf() const noexcept { return feature < 0; }
};

// CART tree over flat node storage; node 0 is the root.
class DecisionTree {
 public:
  std::vector<TreeNode> nodes;
  int class_count = 0;

  const TreeNode& leaf_for(std::span<const double> x) const;
  void predict_row(std::span<const double> x, std::span<double> out) const;
  // Adds (samples / root samples) * impurity decrease per split feature.
  void accumulate_importance(std::span<double> importance) const;
  std::size_t leaf_count() const;
  int depth() const;

  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j, int class_count);
};

/// Gini impurity of a class-count histogram.
double gini(std::span<const double> histogram);

/// One-sided Wilson upper bound on a leaf's error rate, at the normal quantile
/// of (1 - confidence_factor).
double wilson_upper_bound(double errors, double n, double confidence_factor);

struct GrowOptions {
  TreeParams params;
  int features_per_split = 0;  // 0 = every feature
  Rng* rng = nullptr;          // required when features_per_split < F
};

/// Grows a Gini CART tree over the given (possibly repeated) row indices,
/// then applies pessimistic pruning when params.prune is set.
DecisionTree grow_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows,
                       int class_count, const GrowOptions& options);

/// Collapses subtrees whose summed Wilson error bound is not below the bound
/// of the collapsed node.
void prune_tree(DecisionTree& tree, double confidence_factor);

class DecisionTreeClassifier final : public Classifier {
 public:
  ModelKind kind() const override { return ModelKind::DecisionTree; }
  nlohmann::json hyperparameters() const override;
  const DecisionTree& tree() const noexcept { return tree_; }

  static std::unique_ptr<DecisionTreeClassifier> from_json(const nlohmann::json& j);

 protected:
  void predict_row(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const override;

 private:
  friend std::unique_ptr<DecisionTreeClassifier> train_decision_tree(const FeatureMatrix&,
                                                                      const TreeParams&, int);
  TreeParams params_;
  DecisionTree tree_;
};

std::unique_ptr<DecisionTreeClassifier> train_decision_tree(const FeatureMatrix& matrix,
                                                            const TreeParams& params = {},
                                                            int class_count = kLabelCount);

struct ForestParams {
  int n_trees = 10;
  int features_per_split = 0;  // 0 = ceil(sqrt(F))
  bool bootstrap = true;
  std::uint64_t seed = 0;
  TreeParams tree{0, 1, false, 0.3};
};

class RandomForestClassifier final : public Classifier {
 public:
  ModelKind kind() const override { return ModelKind::RandomForest; }
  nlohmann::json hyperparameters() const override;
  const std::vector<DecisionTree>& trees() const noexcept { return trees_; }

  static std::unique_ptr<RandomForestClassifier> from_json(const nlohmann::json& j);

 protected:
  void predict_row(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const override;

 private:
  friend std::unique_ptr<RandomForestClassifier> train_random_forest(const FeatureMatrix&,
                                                                      const ForestParams&, int, int);
  ForestParams params_;
  std::vector<DecisionTree> trees_;
};

/// Tree t is grown from sub-seed (seed, t), so results do not depend on threads.
std::unique_ptr<RandomForestClassifier> train_random_forest(const FeatureMatrix& matrix,
                                                            const ForestParams& params = {},
                                                            int class_count = kLabelCount,
                                                            int threads = 1);

// ---------------------------------------------------------------- logistic regression

struct LogisticParams {
  double l2 = 1e-4;
  double learning_rate = 0.1;
  int epochs = 500;
};

/// Mean softmax cross-entropy plus (l2 / 2) * |W|^2, bias unpenalized.
/// `parameters` holds W (C x F, row-major) followed by the C biases; the
/// gradient is written to `gradient` with the same layout.
double softmax_objective(const FeatureMatrix& matrix, std::span<const double> parameters, int class_count,
                         double l2, std::span<double> gradient);

class LogisticRegressionClassifier final : public Classifier {
 public:
  ModelKind kind() const override { return ModelKind::LogisticRegression; }
  nlohmann::json hyperparameters() const override;

  // Objective value before each gradient step.
  const std::vector<double>& loss_history() const noexcept { return loss_history_; }
  const std::vector<double>& parameters() const noexcept { return parameters_; }

  static std::unique_ptr<LogisticRegressionClassifier> from_json(const nlohmann::json& j);

 protected:
  void predict_row(std::span<const double> x, std::span<double> out) const override;
  nlohmann::json state() const override;

 private:
  friend std::unique_ptr<LogisticRegressionClassifier> train_logistic_regression(
      const FeatureMatrix&, const LogisticParams&, int);
  LogisticParams params_;
  std::vector<double> parameters_;
  std::vector<double> loss_history_;
};

/// Full-batch gradient descent from zero weights. Throws DivergenceError when
/// the objective stops being finite.
std::unique_ptr<LogisticRegressionClassifier> train_logistic_regression(
    const FeatureMatrix& matrix, const LogisticParams& params = {}, int class_count = kLabelCount);

// ---------------------------------------------------------------- dispatch

struct TrainOptions {
  std::uint64_t seed = 0;
  int threads = 1;
  int class_count = kLabelCount;
};

/// Builds a classifier of the given kind from a JSON object of
/// hyperparameters (missing keys take defaults). SVM and MLP throw
/// UnsupportedModelError.
std::unique_ptr<Classifier> train_classifier(ModelKind kind, const FeatureMatrix& matrix,
                                             const nlohmann::json& hyperparameters,
                                             const TrainOptions& options = {});

// ---------------------------------------------------------------- importance

struct ImportanceRanking {
  std::vector<std::pair<std::string, double>> entries;  // sorted by weight, descending
};

/// Mean decrease in Gini impurity, normalized to sum to one. Only tree and
/// forest models qualify; others throw UnsupportedModelError.
ImportanceRanking feature_importance(const Classifier& model);

void to_json(nlohmann::json& j, const ImportanceRanking& r);
void write_importance_csv(std::ostream& out, const ImportanceRanking& r);

}  // namespace crimetype
