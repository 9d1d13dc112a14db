#pragma once

#include <cstdint>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/tree.hpp"

namespace treeclime {

struct ForestParams {
  int n_trees = 100;
  int mtry = 0;  // features sampled per split; 0 = all features
  TreeParams tree;
  bool bootstrap = true;
};

struct Forest {
  ForestParams params;
  std::vector<uint64_t> per_tree_seed;
  std::vector<Tree> trees;

  double predict(const FeatureMatrix& fm, size_t row) const;  // mean member probability
  nlohmann::json to_json() const;
  static Forest from_json(const nlohmann::json& j);
};

Forest fit_forest(const FeatureMatrix& fm, const ForestParams& params, uint64_t seed,
                  int jobs = 1);

// Accuracy over rows predicted only by trees whose bootstrap missed them;
// bootstraps are regenerated from the stored per-tree seeds.
double oob_accuracy(const Forest& forest, const FeatureMatrix& fm);

struct GbtParams {
  int n_trees = 100;
  double learning_rate = 0.1;
  int mtry = 0;  // columns sampled per tree; 0 = all
  TreeParams tree{0.0, 6, 1};
  double l2_leaf = 1.0;
};

struct Gbt {
  GbtParams params;
  double base_score = 0.0;  // log-odds of the training positive rate
  std::vector<double> stage_loss;  // training log-loss: baseline, then after each tree
  std::vector<Tree> trees;

  double score(const FeatureMatrix& fm, size_t row) const;  // accumulated log-odds
  double predict(const FeatureMatrix& fm, size_t row) const;
  nlohmann::json to_json() const;
  static Gbt from_json(const nlohmann::json& j);
};

Gbt fit_gbt(const FeatureMatrix& fm, const GbtParams& params, uint64_t seed);

}  // namespace treeclime
