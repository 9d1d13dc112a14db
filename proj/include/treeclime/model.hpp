#pragma once

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/ensemble.hpp"
#include "treeclime/logistic.hpp"
#include "treeclime/matrix.hpp"
#include "treeclime/tree.hpp"

namespace treeclime {

enum class Algo { logit, dt, rf, xgb };

std::string algo_name(Algo a);               // LR / DT / RF / XGB
Algo parse_algo(const std::string& name);    // case-insensitive; ConfigError(UnknownAlgorithm)

// Union of per-algorithm settings; only the block matching `algo` is used.
struct LearnerSpec {
  Algo algo = Algo::dt;
  LogisticParams logit;
  TreeParams tree;
  ForestParams forest;
  GbtParams gbt;

  // Published optima: DT cost_complexity 1e-5 / depth 30 / min_node 20,
  // RF mtry 5 / 1080 trees, XGB mtry 3 / 761 trees.
  static LearnerSpec paper_defaults(Algo a);

  // {"algo": name, "params": {flat fields of the active block}}
  nlohmann::json to_json() const;
  static LearnerSpec from_json(const nlohmann::json& j);
};

using Model = std::variant<LogisticModel, Tree, Forest, Gbt>;

Model fit_model(const LearnerSpec& spec, const FeatureMatrix& fm, uint64_t seed, int jobs = 1);

Algo model_algo(const Model& m);
double predict_prob(const Model& m, const FeatureMatrix& fm, size_t row);
std::vector<double> predict_probs(const Model& m, const FeatureMatrix& fm);

// {"kind": name, "model": {...}}
nlohmann::json model_to_json(const Model& m);
Model model_from_json(const nlohmann::json& j);

}  // namespace treeclime
