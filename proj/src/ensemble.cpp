#include "treeclime/ensemble.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "treeclime/common.hpp"
#include "treeclime/stats.hpp"

namespace treeclime {

namespace {

std::vector<uint32_t> bootstrap_rows(Rng& rng, size_t n) {
  std::vector<uint32_t> rows(n);
  for (auto& r : rows) r = static_cast<uint32_t>(rng.below(n));
  return rows;
}

void validate_mtry(int mtry, size_t n_features) {
  if (mtry < 0 || static_cast<size_t>(mtry) > n_features) {
    fail_config("MtryTooLarge", "mtry " + std::to_string(mtry) + " exceeds the " +
                                    std::to_string(n_features) + " available features");
  }
}

double logloss(const std::vector<double>& score, const std::vector<double>& y) {
  double total = 0.0;
  for (size_t i = 0; i < y.size(); ++i) total += log1pexp(score[i]) - y[i] * score[i];
  return total / static_cast<double>(y.size());
}

}  // namespace

Forest fit_forest(const FeatureMatrix& fm, const ForestParams& params, uint64_t seed, int jobs) {
  if (params.n_trees < 1) fail_config("BadParams", "a forest needs at least one tree");
  validate_mtry(params.mtry, fm.n_features());
  if (jobs < 1) fail_config("BadParams", "jobs must be at least 1");

  Forest forest;
  forest.params = params;
  forest.per_tree_seed.resize(static_cast<size_t>(params.n_trees));
  forest.trees.resize(static_cast<size_t>(params.n_trees));
  for (size_t i = 0; i < forest.per_tree_seed.size(); ++i) {
    forest.per_tree_seed[i] = mix_seed(seed, i);
  }

  std::vector<uint32_t> identity(fm.rows);
  for (size_t i = 0; i < identity.size(); ++i) identity[i] = static_cast<uint32_t>(i);

  auto fit_one = [&](size_t i) {
    Rng rng(forest.per_tree_seed[i]);
    const std::vector<uint32_t> rows =
        params.bootstrap ? bootstrap_rows(rng, fm.rows) : identity;
    forest.trees[i] =
        fit_tree_rows(fm, rows, params.tree, static_cast<size_t>(params.mtry), &rng);
  };

  const size_t n = forest.trees.size();
  if (jobs == 1 || n == 1) {
    for (size_t i = 0; i < n; ++i) fit_one(i);
  } else {
    std::atomic<size_t> next{0};
    auto worker = [&] {
      while (true) {
        const size_t i = next.fetch_add(1);
        if (i >= n) return;
        fit_one(i);
      }
    };
    std::vector<std::thread> pool;
    const size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n);
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  return forest;
}

double Forest::predict(const FeatureMatrix& fm, size_t row) const {
  double s = 0.0;
  for (const auto& t : trees) s += t.predict(fm, row);
  return s / static_cast<double>(trees.size());
}

double oob_accuracy(const Forest& forest, const FeatureMatrix& fm) {
  std::vector<double> vote_sum(fm.rows, 0.0);
  std::vector<int> vote_n(fm.rows, 0);
  std::vector<char> in_bag(fm.rows);
  for (size_t i = 0; i < forest.trees.size(); ++i) {
    std::fill(in_bag.begin(), in_bag.end(), 0);
    Rng rng(forest.per_tree_seed[i]);
    for (uint32_t r : bootstrap_rows(rng, fm.rows)) in_bag[r] = 1;
    for (size_t row = 0; row < fm.rows; ++row) {
      if (in_bag[row]) continue;
      vote_sum[row] += forest.trees[i].predict(fm, row);
      vote_n[row] += 1;
    }
  }
  double correct = 0.0, counted = 0.0;
  for (size_t row = 0; row < fm.rows; ++row) {
    if (vote_n[row] == 0) continue;
    counted += 1;
    const double prob = vote_sum[row] / vote_n[row];
    const double label = prob >= 0.5 ? 1.0 : 0.0;
    if (label == fm.y[row]) correct += 1;
  }
  if (counted == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return correct / counted;
}

nlohmann::json Forest::to_json() const {
  nlohmann::json j;
  j["params"] = {{"n_trees", params.n_trees},
                 {"mtry", params.mtry},
                 {"bootstrap", params.bootstrap},
                 {"tree", {{"cost_complexity", params.tree.cost_complexity},
                           {"max_depth", params.tree.max_depth},
                           {"min_node", params.tree.min_node}}}};
  j["seeds"] = per_tree_seed;
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) trees_json.push_back(t.to_json());
  j["trees"] = trees_json;
  return j;
}

Forest Forest::from_json(const nlohmann::json& j) {
  Forest f;
  const auto& p = j.at("params");
  f.params.n_trees = p.at("n_trees").get<int>();
  f.params.mtry = p.at("mtry").get<int>();
  f.params.bootstrap = p.at("bootstrap").get<bool>();
  const auto& tp = p.at("tree");
  f.params.tree.cost_complexity = tp.at("cost_complexity").get<double>();
  f.params.tree.max_depth = tp.at("max_depth").get<int>();
  f.params.tree.min_node = tp.at("min_node").get<int>();
  f.per_tree_seed = j.at("seeds").get<std::vector<uint64_t>>();
  for (const auto& tj : j.at("trees")) f.trees.push_back(Tree::from_json(tj));
  return f;
}

Gbt fit_gbt(const FeatureMatrix& fm, const GbtParams& params, uint64_t seed) {
  if (params.n_trees < 0) fail_config("BadParams", "n_trees must be nonnegative");
  if (params.learning_rate <= 0.0 || params.learning_rate > 1.0) {
    fail_config("BadParams", "learning_rate must lie in (0, 1]");
  }
  if (params.l2_leaf < 0.0) fail_config("BadParams", "l2_leaf must be nonnegative");
  validate_mtry(params.mtry, fm.n_features());
  if (fm.rows == 0) fail_data("EmptyDataset", "cannot fit on zero rows");
  double ybar = mean(fm.y);
  if (ybar <= 0.0 || ybar >= 1.0) {
    fail_data("SingleClassTarget", "boosting requires both classes in the target");
  }

  Gbt model;
  model.params = params;
  model.base_score = std::log(ybar / (1.0 - ybar));

  const size_t n = fm.rows;
  const size_t p = fm.n_features();
  std::vector<double> score(n, model.base_score);
  std::vector<double> grad(n), hess(n);
  model.stage_loss.push_back(logloss(score, fm.y));

  Rng rng(mix_seed(seed, 0x9b7));
  SubsetSampler sampler;
  sampler.reset(p);
  std::vector<int> subset;

  for (int stage = 0; stage < params.n_trees; ++stage) {
    for (size_t i = 0; i < n; ++i) {
      const double prob = sigmoid(score[i]);
      grad[i] = prob - fm.y[i];
      hess[i] = prob * (1.0 - prob);
    }
    subset.clear();
    if (params.mtry > 0 && static_cast<size_t>(params.mtry) < p) {
      sampler.sample(rng, params.mtry, subset);
      std::sort(subset.begin(), subset.end());
    }
    Tree tree = fit_gradient_tree(fm, grad, hess, params.tree, params.l2_leaf, subset);
    for (size_t i = 0; i < n; ++i) {
      score[i] += params.learning_rate * tree.predict(fm, i);
    }
    model.trees.push_back(std::move(tree));
    model.stage_loss.push_back(logloss(score, fm.y));
  }
  return model;
}

double Gbt::score(const FeatureMatrix& fm, size_t row) const {
  double s = base_score;
  for (const auto& t : trees) s += params.learning_rate * t.predict(fm, row);
  return s;
}

double Gbt::predict(const FeatureMatrix& fm, size_t row) const {
  return sigmoid(score(fm, row));
}

nlohmann::json Gbt::to_json() const {
  nlohmann::json j;
  j["params"] = {{"n_trees", params.n_trees},
                 {"learning_rate", params.learning_rate},
                 {"mtry", params.mtry},
                 {"l2_leaf", params.l2_leaf},
                 {"tree", {{"cost_complexity", params.tree.cost_complexity},
                           {"max_depth", params.tree.max_depth},
                           {"min_node", params.tree.min_node}}}};
  j["base_score"] = base_score;
  j["stage_loss"] = stage_loss;
  nlohmann::json trees_json = nlohmann::json::array();
  for (const auto& t : trees) trees_json.push_back(t.to_json());
  j["trees"] = trees_json;
  return j;
}

Gbt Gbt::from_json(const nlohmann::json& j) {
  Gbt m;
  const auto& p = j.at("params");
  m.params.n_trees = p.at("n_trees").get<int>();
  m.params.learning_rate = p.at("learning_rate").get<double>();
  m.params.mtry = p.at("mtry").get<int>();
  m.params.l2_leaf = p.at("l2_leaf").get<double>();
  const auto& tp = p.at("tree");
  m.params.tree.cost_complexity = tp.at("cost_complexity").get<double>();
  m.params.tree.max_depth = tp.at("max_depth").get<int>();
  m.params.tree.min_node = tp.at("min_node").get<int>();
  m.base_score = j.at("base_score").get<double>();
  m.stage_loss = j.at("stage_loss").get<std::vector<double>>();
  for (const auto& tj : j.at("trees")) m.trees.push_back(Tree::from_json(tj));
  return m;
}

}  // namespace treeclime
