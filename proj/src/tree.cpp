#include <algorithm>
#include <cmath>
#include <numeric>

#include "crimetype/error.hpp"
#include "crimetype/parallel.hpp"
#include "crimetype/models.hpp"
#include "model_common.hpp"

namespace crimetype {

double gini(std::span<const double> histogram) {
  double n = 0, sq = 0;
  for (double c : histogram) {
    n += c;
    sq += c * c;
  }
  return n > 0 ? 1.0 - sq / (n * n) : 0.0;
}

namespace {

// Normal quantile by bisection on erfc; accurate to ~1e-15.
double normal_quantile(double p) {
  double lo = -40, hi = 40;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

struct Split {
  bool valid = false;
  int feature = -1;
  double threshold = 0;
  double decrease = 0;
};

void scan_feature(const FeatureMatrix& m, std::span<const std::size_t> rows, int feature,
                  std::span<const double> parent_hist, double parent_gini, int min_leaf,
                  std::vector<std::pair<double, int>>& scratch, std::vector<double>& left,
                  Split& best) {
  scratch.clear();
  for (std::size_t r : rows) scratch.emplace_back(m.at(r, static_cast<std::size_t>(feature)), m.labels[r]);
  std::sort(scratch.begin(), scratch.end());
  const double n = static_cast<double>(rows.size());
  if (scratch.front().first == scratch.back().first) return;

  std::fill(left.begin(), left.end(), 0.0);
  double sq_left = 0, sq_right = 0;
  for (double c : parent_hist) sq_right += c * c;
  std::vector<double> right(parent_hist.begin(), parent_hist.end());
  for (std::size_t i = 0; i + 1 < scratch.size(); ++i) {
    const int y = scratch[i].second;
    sq_left += 2 * left[y] + 1;
    left[y] += 1;
    sq_right -= 2 * right[y] - 1;
    right[y] -= 1;
    const double a = scratch[i].first, b = scratch[i + 1].first;
    if (a == b) continue;
    const double n_left = static_cast<double>(i + 1);
    const double n_right = n - n_left;
    if (n_left < min_leaf || n_right < min_leaf) continue;
    const double g_left = 1.0 - sq_left / (n_left * n_left);
    const double g_right = 1.0 - sq_right / (n_right * n_right);
    const double decrease = parent_gini - (n_left / n) * g_left - (n_right / n) * g_right;
    if (!best.valid || decrease > best.decrease + 1e-12) {
      double threshold = 0.5 * (a + b);
      if (!(threshold < b)) threshold = a;
      best = {true, feature, threshold, decrease};
    }
  }
}

struct Pending {
  int node;
  std::vector<std::size_t> rows;
  int depth;
};

}  // namespace

double wilson_upper_bound(double errors, double n, double confidence_factor) {
  if (n <= 0) return 0.0;
  const double z = normal_quantile(1.0 - confidence_factor);
  const double f = errors / n;
  const double z2 = z * z;
  const double centre = f + z2 / (2 * n);
  const double spread = z * std::sqrt(std::max(0.0, f * (1 - f) / n + z2 / (4 * n * n)));
  return (centre + spread) / (1 + z2 / n);
}

DecisionTree grow_tree(const FeatureMatrix& matrix, std::span<const std::size_t> rows, int class_count,
                       const GrowOptions& options) {
  const auto& p = options.params;
  const int f_count = static_cast<int>(matrix.cols());
  const int per_split = options.features_per_split > 0 && options.features_per_split < f_count
                            ? options.features_per_split
                            : f_count;
  if (per_split < f_count && options.rng == nullptr) {
    throw StateError("feature subsampling needs a random generator");
  }

  DecisionTree tree;
  tree.class_count = class_count;
  auto make_node = [&](std::span<const std::size_t> idx) {
    TreeNode node;
    node.histogram.assign(static_cast<std::size_t>(class_count), 0.0);
    for (std::size_t r : idx) node.histogram[matrix.labels[r]] += 1;
    node.samples = static_cast<double>(idx.size());
    node.impurity = gini(node.histogram);
    tree.nodes.push_back(std::move(node));
    return static_cast<int>(tree.nodes.size()) - 1;
  };

  std::vector<Pending> stack;
  stack.push_back({make_node(rows), std::vector<std::size_t>(rows.begin(), rows.end()), 0});
  std::vector<std::pair<double, int>> scratch;
  std::vector<double> left_hist(static_cast<std::size_t>(class_count));
  std::vector<int> order(static_cast<std::size_t>(f_count));

  while (!stack.empty()) {
    Pending item = std::move(stack.back());
    stack.pop_back();
    const TreeNode& node = tree.nodes[item.node];
    if (node.impurity <= 0 || (p.max_depth > 0 && item.depth >= p.max_depth) ||
        item.rows.size() < 2 * static_cast<std::size_t>(p.min_samples_leaf)) {
      continue;
    }

    std::iota(order.begin(), order.end(), 0);
    if (per_split < f_count) {
      for (int i = 0; i < per_split; ++i) {
        const auto j = static_cast<int>(i + uniform_index(*options.rng, static_cast<std::size_t>(f_count - i)));
        std::swap(order[i], order[j]);
      }
      std::sort(order.begin(), order.begin() + per_split);
      std::sort(order.begin() + per_split, order.end());
    }

    Split best;
    const std::vector<double> parent_hist = node.histogram;
    const double parent_gini = node.impurity;
    for (int i = 0; i < f_count; ++i) {
      // Features past the sampled subset are only consulted when it had no usable split.
      if (i >= per_split && best.valid) break;
      scan_feature(matrix, item.rows, order[i], parent_hist, parent_gini, p.min_samples_leaf, scratch,
                   left_hist, best);
    }
    if (!best.valid) continue;

    std::vector<std::size_t> left_rows, right_rows;
    for (std::size_t r : item.rows) {
      (matrix.at(r, static_cast<std::size_t>(best.feature)) <= best.threshold ? left_rows : right_rows).push_back(r);
    }
    const int l = make_node(left_rows);
    const int r = make_node(right_rows);
    TreeNode& parent = tree.nodes[item.node];
    parent.feature = best.feature;
    parent.threshold = best.threshold;
    parent.left = l;
    parent.right = r;
    stack.push_back({r, std::move(right_rows), item.depth + 1});
    stack.push_back({l, std::move(left_rows), item.depth + 1});
  }

  if (p.prune) prune_tree(tree, p.confidence_factor);
  return tree;
}

namespace {

double leaf_bound(const TreeNode& node, double cf) {
  const double majority = *std::max_element(node.histogram.begin(), node.histogram.end());
  return node.samples * wilson_upper_bound(node.samples - majority, node.samples, cf);
}

double prune_node(DecisionTree& tree, int index, double cf) {
  TreeNode& node = tree.nodes[index];
  const double collapsed = leaf_bound(node, cf);
  if (node.is_leaf()) return collapsed;
  const double subtree = prune_node(tree, node.left, cf) + prune_node(tree, node.right, cf);
  TreeNode& again = tree.nodes[index];
  if (subtree >= collapsed - 1e-12) {
    again.feature = -1;
    again.left = again.right = -1;
    again.threshold = 0;
    return collapsed;
  }
  return subtree;
}

void copy_reachable(const DecisionTree& from, int index, DecisionTree& to) {
  const int at = static_cast<int>(to.nodes.size());
  to.nodes.push_back(from.nodes[index]);
  if (from.nodes[index].is_leaf()) return;
  to.nodes[at].left = static_cast<int>(to.nodes.size());
  copy_reachable(from, from.nodes[index].left, to);
  to.nodes[at].right = static_cast<int>(to.nodes.size());
  copy_reachable(from, from.nodes[index].right, to);
}

}  // namespace

void prune_tree(DecisionTree& tree, double confidence_factor) {
  if (!(confidence_factor > 0 && confidence_factor < 1)) {
    throw ParameterError("confidence_factor must lie in (0, 1)");
  }
  if (tree.nodes.empty()) return;
  prune_node(tree, 0, confidence_factor);
  DecisionTree compact;
  compact.class_count = tree.class_count;
  copy_reachable(tree, 0, compact);
  tree = std::move(compact);
}

const TreeNode& DecisionTree::leaf_for(std::span<const double> x) const {
  const TreeNode* node = &nodes[0];
  while (!node->is_leaf()) {
    node = &nodes[x[static_cast<std::size_t>(node->feature)] <= node->threshold ? node->left : node->right];
  }
  return *node;
}

void DecisionTree::predict_row(std::span<const double> x, std::span<double> out) const {
  const TreeNode& leaf = leaf_for(x);
  for (std::size_t c = 0; c < out.size(); ++c) out[c] = leaf.histogram[c] / leaf.samples;
}

void DecisionTree::accumulate_importance(std::span<double> importance) const {
  if (nodes.empty() || nodes[0].samples <= 0) return;
  const double root = nodes[0].samples;
  for (const auto& node : nodes) {
    if (node.is_leaf()) continue;
    const auto& l = nodes[node.left];
    const auto& r = nodes[node.right];
    const double decrease = node.impurity - (l.samples / node.samples) * l.impurity -
                            (r.samples / node.samples) * r.impurity;
    importance[static_cast<std::size_t>(node.feature)] += (node.samples / root) * std::max(0.0, decrease);
  }
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int DecisionTree::depth() const {
  if (nodes.empty()) return 0;
  int deepest = 0;
  std::vector<std::pair<int, int>> stack{{0, 0}};
  while (!stack.empty()) {
    auto [i, d] = stack.back();
    stack.pop_back();
    deepest = std::max(deepest, d);
    if (!nodes[i].is_leaf()) {
      stack.emplace_back(nodes[i].left, d + 1);
      stack.emplace_back(nodes[i].right, d + 1);
    }
  }
  return deepest;
}

namespace {

nlohmann::json node_json(const DecisionTree& tree, int index) {
  const TreeNode& n = tree.nodes[index];
  nlohmann::json j{{"samples", n.samples}, {"impurity", n.impurity}, {"histogram", n.histogram}};
  if (!n.is_leaf()) {
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = node_json(tree, n.left);
    j["right"] = node_json(tree, n.right);
  }
  return j;
}

int node_from_json(const nlohmann::json& j, DecisionTree& tree) {
  TreeNode n;
  n.samples = j.at("samples").get<double>();
  n.impurity = j.at("impurity").get<double>();
  n.histogram = j.at("histogram").get<std::vector<double>>();
  if (static_cast<int>(n.histogram.size()) != tree.class_count) throw FormatError("tree histogram has the wrong width");
  const int at = static_cast<int>(tree.nodes.size());
  const bool split = j.contains("feature");
  if (split) {
    n.feature = j.at("feature").get<int>();
    n.threshold = j.at("threshold").get<double>();
  }
  tree.nodes.push_back(std::move(n));
  if (split) {
    const int l = node_from_json(j.at("left"), tree);
    const int r = node_from_json(j.at("right"), tree);
    tree.nodes[at].left = l;
    tree.nodes[at].right = r;
  }
  return at;
}

}  // namespace

nlohmann::json DecisionTree::to_json() const { return node_json(*this, 0); }

DecisionTree DecisionTree::from_json(const nlohmann::json& j, int class_count) {
  DecisionTree tree;
  tree.class_count = class_count;
  node_from_json(j, tree);
  return tree;
}

namespace {

void validate_tree_params(const TreeParams& p) {
  if (p.max_depth < 0) throw ParameterError("max_depth must be >= 0 (0 = unbounded)");
  if (p.min_samples_leaf < 1) throw ParameterError("min_samples_leaf must be >= 1");
  if (!(p.confidence_factor > 0 && p.confidence_factor < 1)) {
    throw ParameterError("confidence_factor must lie in (0, 1)");
  }
}

nlohmann::json tree_params_json(const TreeParams& p) {
  return {{"max_depth", p.max_depth},
          {"min_samples_leaf", p.min_samples_leaf},
          {"prune", p.prune},
          {"confidence_factor", p.confidence_factor}};
}

TreeParams tree_params_from_json(const nlohmann::json& j) {
  TreeParams p;
  p.max_depth = j.at("max_depth").get<int>();
  p.min_samples_leaf = j.at("min_samples_leaf").get<int>();
  p.prune = j.at("prune").get<bool>();
  p.confidence_factor = j.at("confidence_factor").get<double>();
  return p;
}

}  // namespace

std::unique_ptr<DecisionTreeClassifier> train_decision_tree(const FeatureMatrix& matrix, const TreeParams& params,
                                                            int class_count) {
  validate_tree_params(params);
  validate_training_matrix(matrix, class_count);
  std::vector<std::size_t> rows(matrix.rows);
  std::iota(rows.begin(), rows.end(), 0);
  auto model = std::unique_ptr<DecisionTreeClassifier>(new DecisionTreeClassifier());
  model->set_header(matrix.schema, class_count);
  model->params_ = params;
  model->tree_ = grow_tree(matrix, rows, class_count, GrowOptions{params, 0, nullptr});
  return model;
}

void DecisionTreeClassifier::predict_row(std::span<const double> x, std::span<double> out) const {
  tree_.predict_row(x, out);
}

nlohmann::json DecisionTreeClassifier::hyperparameters() const { return tree_params_json(params_); }

nlohmann::json DecisionTreeClassifier::state() const { return {{"tree", tree_.to_json()}}; }

std::unique_ptr<DecisionTreeClassifier> DecisionTreeClassifier::from_json(const nlohmann::json& j) {
  auto model = std::unique_ptr<DecisionTreeClassifier>(new DecisionTreeClassifier());
  model->load_header(j);
  model->params_ = tree_params_from_json(j.at("hyperparameters"));
  model->tree_ = DecisionTree::from_json(j.at("state").at("tree"), model->class_count());
  return model;
}

std::unique_ptr<RandomForestClassifier> train_random_forest(const FeatureMatrix& matrix, const ForestParams& params,
                                                            int class_count, int threads) {
  validate_tree_params(params.tree);
  if (params.n_trees < 1) throw ParameterError("n_trees must be >= 1");
  if (params.features_per_split < 0) throw ParameterError("features_per_split must be >= 0");
  validate_training_matrix(matrix, class_count);

  const int f_count = static_cast<int>(matrix.cols());
  const int per_split = params.features_per_split > 0
                            ? std::min(params.features_per_split, f_count)
                            : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(f_count))));
  auto model = std::unique_ptr<RandomForestClassifier>(new RandomForestClassifier());
  model->set_header(matrix.schema, class_count);
  model->params_ = params;
  model->params_.features_per_split = per_split;
  model->trees_.resize(static_cast<std::size_t>(params.n_trees));

  parallel_for(model->trees_.size(), threads, [&](std::size_t t) {
    Rng rng(derive_seed(params.seed, "forest_tree", t));
    std::vector<std::size_t> rows(matrix.rows);
    if (params.bootstrap) {
      for (auto& r : rows) r = uniform_index(rng, matrix.rows);
    } else {
      std::iota(rows.begin(), rows.end(), 0);
    }
    model->trees_[t] = grow_tree(matrix, rows, class_count, GrowOptions{params.tree, per_split, &rng});
  });
  return model;
}

void RandomForestClassifier::predict_row(std::span<const double> x, std::span<double> out) const {
  std::vector<double> tmp(out.size());
  for (const auto& tree : trees_) {
    tree.predict_row(x, tmp);
    for (std::size_t c = 0; c < out.size(); ++c) out[c] += tmp[c];
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
}

nlohmann::json RandomForestClassifier::hyperparameters() const {
  return {{"n_trees", params_.n_trees},
          {"features_per_split", params_.features_per_split},
          {"bootstrap", params_.bootstrap},
          {"seed", params_.seed},
          {"tree", tree_params_json(params_.tree)}};
}

nlohmann::json RandomForestClassifier::state() const {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : trees_) trees.push_back(t.to_json());
  return {{"trees", trees}};
}

std::unique_ptr<RandomForestClassifier> RandomForestClassifier::from_json(const nlohmann::json& j) {
  auto model = std::unique_ptr<RandomForestClassifier>(new RandomForestClassifier());
  model->load_header(j);
  const auto& h = j.at("hyperparameters");
  model->params_.n_trees = h.at("n_trees").get<int>();
  model->params_.features_per_split = h.at("features_per_split").get<int>();
  model->params_.bootstrap = h.at("bootstrap").get<bool>();
  model->params_.seed = h.at("seed").get<std::uint64_t>();
  model->params_.tree = tree_params_from_json(h.at("tree"));
  for (const auto& t : j.at("state").at("trees")) {
    model->trees_.push_back(DecisionTree::from_json(t, model->class_count()));
  }
  if (static_cast<int>(model->trees_.size()) != model->params_.n_trees) {
    throw FormatError("random_forest state has the wrong number of trees");
  }
  return model;
}

}  // namespace crimetype
