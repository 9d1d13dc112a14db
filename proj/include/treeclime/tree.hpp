#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/matrix.hpp"
#include "treeclime/rng.hpp"

namespace treeclime {

struct TreeParams {
  double cost_complexity = 0.0;  // minimum impurity improvement, relative to root impurity
  int max_depth = 30;
  int min_node = 1;
};

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  bool categorical = false;
  double threshold = 0.0;     // numeric test: value < threshold goes left
  std::vector<int> children;  // numeric: {left, right}; categorical: slot per label, -1 absent
  int majority_child = -1;    // routing for missing values and unseen labels
  double n_yes = 0.0, n_no = 0.0;
  int n_rows = 0;
  double impurity = 0.0;  // Gini at the node (classification trees)
  double value = 0.0;     // leaf: P(yes) for classifiers, weight for gradient trees
  double gain = 0.0;      // split quality: n*(impurity drop), or boosting gain

  bool is_leaf() const { return feature < 0; }
};

struct Tree {
  TreeParams params;
  std::vector<std::string> feature_names;
  std::vector<std::vector<std::string>> feature_labels;
  std::vector<TreeNode> nodes;
  int root = 0;

  int route(const FeatureMatrix& fm, size_t row) const;  // leaf node id
  double predict(const FeatureMatrix& fm, size_t row) const;
  int depth() const;
  size_t n_leaves() const;
  std::vector<std::string> rules() const;  // one line per root-to-leaf path
  nlohmann::json to_json() const;
  static Tree from_json(const nlohmann::json& j);
};

// 1 - p^2 - (1-p)^2 for p = n_yes / (n_yes + n_no).
double gini_impurity(double n_yes, double n_no);

Tree fit_tree(const FeatureMatrix& fm, const TreeParams& params = {}, uint64_t seed = 0);

// Ensemble entry point: explicit row multiset (bootstrap) and per-node
// sampling of mtry candidate features (0 = use all features).
Tree fit_tree_rows(const FeatureMatrix& fm, const std::vector<uint32_t>& rows,
                   const TreeParams& params, size_t mtry = 0, Rng* rng = nullptr);

// Regression tree over first/second-order gradients for boosting: leaf value
// -G/(H + l2_leaf), split gain 0.5*(sum_k Gk^2/(Hk+l2) - G^2/(H+l2)), accepted
// when gain > cost_complexity. feature_subset restricts candidates (empty =
// all features).
Tree fit_gradient_tree(const FeatureMatrix& fm, const std::vector<double>& grad,
                       const std::vector<double>& hess, const TreeParams& params, double l2_leaf,
                       const std::vector<int>& feature_subset = {});

}  // namespace treeclime
