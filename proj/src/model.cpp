#include "treeclime/model.hpp"

#include <cctype>

#include "treeclime/common.hpp"

namespace treeclime {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

nlohmann::json logistic_to_json(const LogisticModel& m) {
  return {{"features", m.feature_names}, {"coef", m.coef},
          {"intercept", m.intercept},    {"loglik", m.loglik},
          {"null_loglik", m.null_loglik}, {"n_iter", m.n_iter},
          {"converged", m.converged}};
}

LogisticModel logistic_from_json(const nlohmann::json& j) {
  LogisticModel m;
  m.feature_names = j.at("features").get<std::vector<std::string>>();
  m.coef = j.at("coef").get<std::vector<double>>();
  m.intercept = j.at("intercept").get<double>();
  m.loglik = j.at("loglik").get<double>();
  m.null_loglik = j.at("null_loglik").get<double>();
  m.n_iter = j.at("n_iter").get<int>();
  m.converged = j.at("converged").get<bool>();
  return m;
}

}  // namespace

std::string algo_name(Algo a) {
  switch (a) {
    case Algo::logit: return "LR";
    case Algo::dt: return "DT";
    case Algo::rf: return "RF";
    case Algo::xgb: return "XGB";
  }
  fail_config("UnknownAlgorithm", "unmapped algorithm value");
}

Algo parse_algo(const std::string& name) {
  std::string s;
  s.reserve(name.size());
  for (const char c : name)
    s.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
  if (s == "lr" || s == "logit" || s == "logistic") return Algo::logit;
  if (s == "dt") return Algo::dt;
  if (s == "rf") return Algo::rf;
  if (s == "xgb") return Algo::xgb;
  fail_config("UnknownAlgorithm", "unknown algorithm '" + name + "' (expected LR, DT, RF, XGB)");
}

LearnerSpec LearnerSpec::paper_defaults(Algo a) {
  LearnerSpec s;
  s.algo = a;
  switch (a) {
    case Algo::logit: break;
    case Algo::dt: s.tree = {1e-5, 30, 20}; break;
    case Algo::rf:
      s.forest.n_trees = 1080;
      s.forest.mtry = 5;
      break;
    case Algo::xgb:
      s.gbt.n_trees = 761;
      s.gbt.mtry = 3;
      break;
  }
  return s;
}

nlohmann::json LearnerSpec::to_json() const {
  nlohmann::json p;
  switch (algo) {
    case Algo::logit:
      p = {{"l2", logit.l2}, {"max_iter", logit.max_iter}, {"tol", logit.tol}};
      break;
    case Algo::dt:
      p = {{"cost_complexity", tree.cost_complexity},
           {"max_depth", tree.max_depth},
           {"min_node", tree.min_node}};
      break;
    case Algo::rf:
      p = {{"n_trees", forest.n_trees},
           {"mtry", forest.mtry},
           {"bootstrap", forest.bootstrap},
           {"cost_complexity", forest.tree.cost_complexity},
           {"max_depth", forest.tree.max_depth},
           {"min_node", forest.tree.min_node}};
      break;
    case Algo::xgb:
      p = {{"n_trees", gbt.n_trees},
           {"learning_rate", gbt.learning_rate},
           {"mtry", gbt.mtry},
           {"l2_leaf", gbt.l2_leaf},
           {"cost_complexity", gbt.tree.cost_complexity},
           {"max_depth", gbt.tree.max_depth},
           {"min_node", gbt.tree.min_node}};
      break;
  }
  return {{"algo", algo_name(algo)}, {"params", p}};
}

LearnerSpec LearnerSpec::from_json(const nlohmann::json& j) {
  LearnerSpec s;
  s.algo = parse_algo(j.at("algo").get<std::string>());
  const nlohmann::json p = j.value("params", nlohmann::json::object());
  switch (s.algo) {
    case Algo::logit:
      s.logit.l2 = p.value("l2", s.logit.l2);
      s.logit.max_iter = p.value("max_iter", s.logit.max_iter);
      s.logit.tol = p.value("tol", s.logit.tol);
      break;
    case Algo::dt:
      s.tree.cost_complexity = p.value("cost_complexity", s.tree.cost_complexity);
      s.tree.max_depth = p.value("max_depth", s.tree.max_depth);
      s.tree.min_node = p.value("min_node", s.tree.min_node);
      break;
    case Algo::rf:
      s.forest.n_trees = p.value("n_trees", s.forest.n_trees);
      s.forest.mtry = p.value("mtry", s.forest.mtry);
      s.forest.bootstrap = p.value("bootstrap", s.forest.bootstrap);
      s.forest.tree.cost_complexity = p.value("cost_complexity", s.forest.tree.cost_complexity);
      s.forest.tree.max_depth = p.value("max_depth", s.forest.tree.max_depth);
      s.forest.tree.min_node = p.value("min_node", s.forest.tree.min_node);
      break;
    case Algo::xgb:
      s.gbt.n_trees = p.value("n_trees", s.gbt.n_trees);
      s.gbt.learning_rate = p.value("learning_rate", s.gbt.learning_rate);
      s.gbt.mtry = p.value("mtry", s.gbt.mtry);
      s.gbt.l2_leaf = p.value("l2_leaf", s.gbt.l2_leaf);
      s.gbt.tree.cost_complexity = p.value("cost_complexity", s.gbt.tree.cost_complexity);
      s.gbt.tree.max_depth = p.value("max_depth", s.gbt.tree.max_depth);
      s.gbt.tree.min_node = p.value("min_node", s.gbt.tree.min_node);
      break;
  }
  return s;
}

Model fit_model(const LearnerSpec& spec, const FeatureMatrix& fm, uint64_t seed, int jobs) {
  switch (spec.algo) {
    case Algo::logit: return fit_logistic(fm, spec.logit);
    case Algo::dt: return fit_tree(fm, spec.tree, seed);
    case Algo::rf: return fit_forest(fm, spec.forest, seed, jobs);
    case Algo::xgb: return fit_gbt(fm, spec.gbt, seed);
  }
  fail_config("UnknownAlgorithm", "unmapped algorithm value");
}

Algo model_algo(const Model& m) {
  return std::visit(overloaded{[](const LogisticModel&) { return Algo::logit; },
                               [](const Tree&) { return Algo::dt; },
                               [](const Forest&) { return Algo::rf; },
                               [](const Gbt&) { return Algo::xgb; }},
                    m);
}

double predict_prob(const Model& m, const FeatureMatrix& fm, size_t row) {
  return std::visit([&](const auto& x) { return x.predict(fm, row); }, m);
}

std::vector<double> predict_probs(const Model& m, const FeatureMatrix& fm) {
  std::vector<double> out(fm.rows);
  for (size_t r = 0; r < fm.rows; ++r) out[r] = predict_prob(m, fm, r);
  return out;
}

nlohmann::json model_to_json(const Model& m) {
  nlohmann::json inner =
      std::visit(overloaded{[](const LogisticModel& x) { return logistic_to_json(x); },
                            [](const Tree& x) { return x.to_json(); },
                            [](const Forest& x) { return x.to_json(); },
                            [](const Gbt& x) { return x.to_json(); }},
                 m);
  return {{"kind", algo_name(model_algo(m))}, {"model", std::move(inner)}};
}

Model model_from_json(const nlohmann::json& j) {
  const auto kind = parse_algo(j.at("kind").get<std::string>());
  const auto& inner = j.at("model");
  switch (kind) {
    case Algo::logit: return logistic_from_json(inner);
    case Algo::dt: return Tree::from_json(inner);
    case Algo::rf: return Forest::from_json(inner);
    case Algo::xgb: return Gbt::from_json(inner);
  }
  fail_config("UnknownAlgorithm", "unmapped algorithm value");
}

}  // namespace treeclime
