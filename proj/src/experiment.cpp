#include "treeclime/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/hpo.hpp"
#include "treeclime/matrix.hpp"
#include "treeclime/rng.hpp"
#include "treeclime/stats.hpp"

namespace treeclime {

namespace fs = std::filesystem;

namespace {

bool is_spei_column(const Column& c) {
  return c.role == Role::numeric && c.name.rfind("spei", 0) == 0;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) fail_data("FileWrite", "cannot open " + path);
  out << text;
  if (!out.good()) fail_data("FileWrite", "failed writing " + path);
}

void make_dirs(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail_data("FileWrite", dir + ": " + ec.message());
}

Dataset filter_country(Dataset ds, const std::string& country) {
  if (country == "all") return ds;
  const std::string col = "origin_" + country;
  if (!ds.has_column(col)) {
    fail_config("UnknownCountry",
                "country " + country + ": no column " + col + " in the survey");
  }
  const Column& c = ds.col(col);
  std::vector<int> rows;
  for (size_t r = 0; r < c.values.size(); ++r) {
    if (c.values[r] == 1.0) rows.push_back(static_cast<int>(r));
  }
  if (rows.empty()) fail_data("EmptyFilter", "country " + country + " selects no rows");
  if (rows.size() == ds.n_rows()) return ds;
  return ds.select_rows(rows);
}

SearchSpace algo_space(Algo a) {
  switch (a) {
    case Algo::logit:
      return {{{"l2", DimKind::log_real, 1e-8, 1.0}}};
    case Algo::dt:
      return {{{"cost_complexity", DimKind::log_real, 1e-8, 0.1},
               {"max_depth", DimKind::integer, 2, 30},
               {"min_node", DimKind::integer, 1, 64}}};
    case Algo::rf:
      return {{{"mtry", DimKind::integer, 1, 32},
               {"n_trees", DimKind::integer, 64, 1500}}};
    case Algo::xgb:
      return {{{"mtry", DimKind::integer, 1, 32},
               {"n_trees", DimKind::integer, 64, 1500}}};
  }
  fail_config("UnknownAlgorithm", "unhandled algorithm");
}

LearnerSpec apply_params(LearnerSpec spec, const SearchSpace& space,
                         const std::vector<double>& params) {
  for (size_t i = 0; i < space.dims.size(); ++i) {
    const std::string& dim = space.dims[i].name;
    const double v = params[i];
    const int iv = static_cast<int>(std::llround(v));
    if (dim == "l2") spec.logit.l2 = v;
    if (dim == "cost_complexity") spec.tree.cost_complexity = v;
    if (dim == "max_depth") spec.tree.max_depth = iv;
    if (dim == "min_node") spec.tree.min_node = iv;
    if (dim == "mtry") (spec.algo == Algo::rf ? spec.forest.mtry : spec.gbt.mtry) = iv;
    if (dim == "n_trees") {
      (spec.algo == Algo::rf ? spec.forest.n_trees : spec.gbt.n_trees) = iv;
    }
  }
  return spec;
}

// generated column -> source column, from the fitted transform steps.
std::map<std::string, std::string> generated_source(const Preprocessor& prep) {
  std::map<std::string, std::string> src;
  for (const auto& step : prep.steps) {
    if (step.kind == Preprocessor::Step::Kind::one_hot) {
      for (const std::string& label : step.vocab) src[step.column + "_" + label] = step.column;
    } else if (step.kind == Preprocessor::Step::Kind::bin) {
      for (const std::string& label : step.edges.labels) {
        src[step.column + "_" + label] = step.column;
      }
    }
  }
  return src;
}

}  // namespace

std::vector<std::string> pdp_families(const ImportanceReport& imp, const Preprocessor& prep,
                                      int top) {
  const std::map<std::string, std::string> src = generated_source(prep);
  std::map<std::string, double> agg;  // name-ascending
  for (const auto& e : imp.entries) {
    auto it = src.find(e.feature);
    agg[it == src.end() ? e.feature : it->second] += e.importance;
  }
  std::vector<std::pair<std::string, double>> order(agg.begin(), agg.end());
  std::stable_sort(order.begin(), order.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (const auto& [name, share] : order) {
    if (static_cast<int>(out.size()) >= top) break;
    out.push_back(name);
  }
  return out;
}

namespace {

std::string comparison_label(const std::string& direction, const std::string& a,
                             const std::string& b) {
  if (direction == "a>b") return a + " > " + b;
  if (direction == "a<b") return a + " < " + b;
  return a + " ~ " + b;
}

std::vector<TTestRow> paired_rows(const FoldResults& fa, const FoldResults& fb,
                                  const std::string& target, const std::string& arm_a,
                                  const std::string& arm_b) {
  std::vector<TTestRow> rows;
  for (Metric m : {Metric::accuracy, Metric::precision, Metric::recall, Metric::auc}) {
    TTestRow row;
    row.metric = metric_name(m);
    row.target = target;
    row.arm_a = arm_a;
    row.arm_b = arm_b;
    const std::vector<double> va = fa.values(m);
    const std::vector<double> vb = fb.values(m);
    std::vector<double> pa, pb;  // pairwise-complete folds only
    for (size_t i = 0; i < va.size() && i < vb.size(); ++i) {
      if (std::isfinite(va[i]) && std::isfinite(vb[i])) {
        pa.push_back(va[i]);
        pb.push_back(vb[i]);
      }
    }
    if (pa.size() < 2) {
      row.defined = false;
      rows.push_back(row);
      continue;
    }
    row.mean_a = mean(pa);
    row.mean_b = mean(pb);
    try {
      PairedTTest t = paired_t_test(pa, pb);
      row.df = t.df;
      row.t = t.t;
      row.p = t.p;
      row.comparison = comparison_label(t.direction, arm_a, arm_b);
    } catch (const DataError&) {  // zero spread around a nonzero mean
      row.defined = false;
    }
    rows.push_back(row);
  }
  return rows;
}

nlohmann::json rows_json(const std::vector<TTestRow>& rows) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& r : rows) {
    nlohmann::json j;
    j["metric"] = r.metric;
    j["target"] = r.target;
    j["arm_a"] = r.arm_a;
    j["arm_b"] = r.arm_b;
    if (r.defined) {
      j["mean_a"] = r.mean_a;
      j["mean_b"] = r.mean_b;
      j["df"] = r.df;
      j["t_value"] = r.t;
      j["p_value"] = r.p;
      j["comparison"] = r.comparison;
    } else {
      j["mean_a"] = nullptr;
      j["mean_b"] = nullptr;
      j["df"] = nullptr;
      j["t_value"] = nullptr;
      j["p_value"] = nullptr;
      j["comparison"] = nullptr;
    }
    out.push_back(j);
  }
  return out;
}

// Compare core on a pre-loaded dataset so both arms see identical rows.
CompareReport compare_on(const Dataset& ds, const ExperimentConfig& base,
                         const std::string& axis, const std::string& value_a,
                         const std::string& value_b) {
  auto arm = [&](const std::string& v) {
    ExperimentConfig c = base;
    if (axis == "features") {
      c.features = v;
      if (v == "GWP") c.spei.clear();
    } else {
      c.algorithm = v;
    }
    return c;
  };
  CompareReport rep;
  rep.dir = base.out + "/" +
            (base.name.empty() ? "compare_" + axis + "_" + value_a + "_" + value_b
                               : base.name);
  ExperimentConfig ca = arm(value_a);
  ExperimentConfig cb = arm(value_b);
  ca.out = rep.dir;
  ca.name = value_a;
  cb.out = rep.dir;
  cb.name = value_b;
  rep.a = run_experiment_on(ds, ca);
  rep.b = run_experiment_on(ds, cb);
  rep.rows = paired_rows(rep.a.folds, rep.b.folds, base.target, value_a, value_b);

  nlohmann::json s;
  s["version"] = kVersion;
  s["axis"] = axis;
  s["target"] = base.target;
  s["arm_a"] = value_a;
  s["arm_b"] = value_b;
  s["config_a"] = rep.a.config.to_json();
  s["config_b"] = rep.b.config.to_json();
  s["ttest"] = rows_json(rep.rows);
  write_text(rep.dir + "/ttest.csv", ttest_csv(rep.rows));
  write_text(rep.dir + "/summary.json", s.dump(2) + "\n");
  return rep;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (survey.empty()) fail_config("MissingPath", "survey path is required");
  if (target != "general" && target != "international") {
    fail_config("BadTarget", "target must be general or international, got " + target);
  }
  if (features != "GWP" && features != "SPEI" && features != "ALL") {
    fail_config("BadFeatures", "features must be GWP, SPEI, or ALL, got " + features);
  }
  if (features != "GWP" && spei.empty()) {
    fail_config("MissingPath", "spei path is required for features=" + features);
  }
  if (country.empty()) fail_config("BadCountry", "country must be 'all' or a code");
  parse_algo(algorithm);
  if (k < 2) fail_config("BadFoldCount", "k must be at least 2, got " + std::to_string(k));
  if (timescales.empty()) fail_config("BadTimescales", "timescales must be non-empty");
  for (size_t i = 0; i < timescales.size(); ++i) {
    if (!SpeiPanel::allowed_timescales().count(timescales[i]) ||
        (i > 0 && timescales[i] <= timescales[i - 1])) {
      fail_config("BadTimescales",
                  "timescales must be ascending members of {1,2,3,6,12,18,24}");
    }
  }
  if (max_lag < 0) fail_config("BadParams", "max_lag must be non-negative");
  if (spei_bins != 0 && spei_bins < 2) {
    fail_config("BadParams", "spei_bins must be 0 (numeric) or at least 2");
  }
  if (top_pdp < 0) fail_config("BadParams", "top_pdp must be non-negative");
  if (hpo && hpo_budget < 5) {
    fail_config("BadBudget", "hpo_budget must be at least 5 when hpo is on");
  }
  if (jobs < 1) fail_config("BadParams", "jobs must be positive");
}

std::string ExperimentConfig::experiment_name() const {
  if (!name.empty()) return name;
  std::string n = target + "_" + features + "_" + algorithm;
  if (country != "all") n += "_" + country;
  return n;
}

std::string ExperimentConfig::target_column() const { return "move_" + target; }

nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["survey"] = survey;
  j["spei"] = spei;
  j["target"] = target;
  j["features"] = features;
  j["country"] = country;
  j["timescales"] = timescales;
  j["max_lag"] = max_lag;
  j["algorithm"] = algorithm;
  j["k"] = k;
  j["seed"] = seed;
  j["hpo"] = hpo;
  j["hpo_budget"] = hpo_budget;
  j["spei_bins"] = spei_bins;
  j["top_pdp"] = top_pdp;
  return j;
}

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  ExperimentConfig c;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "survey") {
        c.survey = value.get<std::string>();
      } else if (key == "spei") {
        c.spei = value.get<std::string>();
      } else if (key == "target") {
        c.target = value.get<std::string>();
      } else if (key == "features") {
        c.features = value.get<std::string>();
      } else if (key == "country") {
        c.country = value.get<std::string>();
      } else if (key == "timescales") {
        c.timescales = value.get<std::vector<int>>();
      } else if (key == "max_lag") {
        c.max_lag = value.get<int>();
      } else if (key == "algorithm") {
        c.algorithm = value.get<std::string>();
      } else if (key == "k") {
        c.k = value.get<int>();
      } else if (key == "seed") {
        c.seed = value.get<uint64_t>();
      } else if (key == "hpo") {
        c.hpo = value.get<bool>();
      } else if (key == "hpo_budget") {
        c.hpo_budget = value.get<int>();
      } else if (key == "spei_bins") {
        c.spei_bins = value.get<int>();
      } else if (key == "top_pdp") {
        c.top_pdp = value.get<int>();
      } else if (key == "out") {
        c.out = value.get<std::string>();
      } else if (key == "name") {
        c.name = value.get<std::string>();
      } else if (key == "jobs") {
        c.jobs = value.get<int>();
      } else {
        fail_config("UnknownKey", "unknown config key '" + key + "'");
      }
    } catch (const nlohmann::json::exception& e) {
      fail_config("BadValue", "config key '" + key + "': " + e.what());
    }
  }
  return c;
}

Dataset load_experiment_data(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::string target_col = cfg.target_column();
  const CsvTable table = read_csv(cfg.survey);
  Schema schema;
  bool saw_target = false;
  for (const std::string& col : table.header) {
    if (col == "region_id" || col == "month") {
      schema.push_back({col, Role::categorical});
    } else if (col == target_col) {
      schema.push_back({col, Role::target});
      saw_target = true;
    } else if (col.rfind("move_", 0) == 0) {
      continue;  // the other move question stays out of the feature set
    } else {
      schema.push_back({col, Role::binary});
    }
  }
  if (!saw_target) {
    fail_data("MissingColumn", cfg.survey + " has no target column " + target_col);
  }
  Dataset ds = filter_country(ingest_survey(cfg.survey, schema), cfg.country);
  if (cfg.features != "GWP") {
    SpeiPanel panel = ingest_spei(cfg.spei);
    ds = join_and_lag(ds, panel, cfg.timescales, cfg.max_lag, {});
  }
  return ds;
}

PrepPlan experiment_prep_plan(const ExperimentConfig& cfg, const Dataset& ds) {
  PrepPlan plan;
  plan.spei_bins = cfg.spei_bins;
  for (const Column& c : ds.columns()) {
    if (c.role == Role::target) continue;
    if (c.name == "region_id" || c.name == "month") {
      plan.drop.push_back(c.name);
    } else if (cfg.features == "GWP" && is_spei_column(c)) {
      plan.drop.push_back(c.name);
    } else if (cfg.features == "SPEI" && !is_spei_column(c)) {
      plan.drop.push_back(c.name);
    } else if (c.role == Role::categorical) {
      plan.one_hot_cols.push_back(c.name);
    }
  }
  return plan;
}

std::string ttest_csv(const std::vector<TTestRow>& rows) {
  std::ostringstream out;
  out << "metric,target,arm_a,mean_a,arm_b,mean_b,df,t_value,p_value,comparison\n";
  for (const auto& r : rows) {
    out << r.metric << ',' << r.target << ',' << r.arm_a << ',';
    if (!r.defined) {
      out << "NA," << r.arm_b << ",NA,NA,NA,NA,NA\n";
      continue;
    }
    out << format_double(r.mean_a) << ',' << r.arm_b << ',' << format_double(r.mean_b)
        << ',' << r.df << ',' << format_double(r.t) << ',' << format_double(r.p) << ','
        << r.comparison << '\n';
  }
  return out.str();
}

FittedModel fit_experiment_model(const Dataset& loaded, const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset ds = filter_country(loaded, cfg.country);

  FittedModel out;
  out.plan = experiment_prep_plan(cfg, ds);
  out.spec = LearnerSpec::paper_defaults(parse_algo(cfg.algorithm));
  if (cfg.hpo) {
    const SearchSpace space = algo_space(out.spec.algo);
    const LearnerSpec base = out.spec;
    const Objective objective = [&](const std::vector<double>& params) {
      const LearnerSpec trial = apply_params(base, space, params);
      return cross_validate(trial, ds, cfg.k, cfg.seed, &out.plan, cfg.jobs)
          .mean(Metric::auc);
    };
    const TrialLog log = bho_optimize(objective, space, cfg.hpo_budget, cfg.seed);
    const Trial* best = log.best_trial();
    if (best == nullptr) fail_data("NoSuccessfulTrials", "every hpo trial failed");
    out.spec = apply_params(base, space, best->params);
    out.hpo_trials = log.csv();
    out.hpo = {{"budget", cfg.hpo_budget},
               {"best", log.best_json()},
               {"best_value", best->value}};
  }
  out.prep = fit_preprocessor(out.plan, ds);
  out.transformed = out.prep.apply(ds);
  const FeatureMatrix fm = FeatureMatrix::from(out.transformed);
  out.model = fit_model(out.spec, fm, mix_seed(cfg.seed, 0xF17), cfg.jobs);
  out.importance = model_algo(out.model) == Algo::logit
                       ? permutation_importance(out.model, fm, Metric::auc, 3,
                                                mix_seed(cfg.seed, 0x4e7))
                       : impurity_importance(out.model);
  return out;
}

ExperimentReport run_experiment_on(const Dataset& loaded, const ExperimentConfig& cfg) {
  cfg.validate();
  const Dataset ds = filter_country(loaded, cfg.country);

  ExperimentReport rep;
  rep.config = cfg;
  const FittedModel fitted = fit_experiment_model(ds, cfg);
  rep.spec = fitted.spec;
  rep.folds = cross_validate(fitted.spec, ds, cfg.k, cfg.seed, &fitted.plan, cfg.jobs);
  rep.importance = fitted.importance;
  rep.grid = spei_lag_grid(rep.importance);
  for (const std::string& family :
       pdp_families(rep.importance, fitted.prep, cfg.top_pdp)) {
    rep.pdp.push_back(partial_dependence(fitted.model, fitted.transformed, family));
  }

  nlohmann::json s;
  s["version"] = kVersion;
  s["config"] = cfg.to_json();
  s["algorithm"] = fitted.spec.to_json();
  s["prep"] = fitted.prep.to_json();
  s["cv"] = summary_json(rep.folds);
  s["importance_method"] = rep.importance.method;
  s["hpo"] = fitted.hpo;
  nlohmann::json top = nlohmann::json::array();
  for (size_t i = 0; i < rep.importance.entries.size() && i < 10; ++i) {
    top.push_back({{"feature", rep.importance.entries[i].feature},
                   {"importance", rep.importance.entries[i].importance}});
  }
  s["top_features"] = top;
  nlohmann::json pdp_files = nlohmann::json::array();
  for (const auto& series : rep.pdp) pdp_files.push_back("pdp_" + series.feature + ".csv");
  s["pdp_files"] = pdp_files;
  rep.summary = s;

  rep.dir = cfg.out + "/" + cfg.experiment_name();
  make_dirs(rep.dir);
  write_text(rep.dir + "/summary.json", s.dump(2) + "\n");
  write_text(rep.dir + "/folds.csv", folds_csv(rep.folds));
  write_text(rep.dir + "/importance.csv", importance_csv(rep.importance));
  write_text(rep.dir + "/spei_lag_grid.csv", spei_lag_grid_csv(rep.grid));
  for (const auto& series : rep.pdp) {
    write_text(rep.dir + "/pdp_" + series.feature + ".csv", pd_csv(series));
  }
  if (cfg.hpo) write_text(rep.dir + "/hpo_trials.csv", fitted.hpo_trials);
  return rep;
}

ExperimentReport run_experiment(const ExperimentConfig& cfg) {
  return run_experiment_on(load_experiment_data(cfg), cfg);
}

HpoReport run_hpo(const ExperimentConfig& cfg) {
  ExperimentConfig c = cfg;
  c.hpo = true;
  c.validate();
  const Dataset ds = load_experiment_data(c);
  const PrepPlan plan = experiment_prep_plan(c, ds);
  const LearnerSpec base = LearnerSpec::paper_defaults(parse_algo(c.algorithm));
  const SearchSpace space = algo_space(base.algo);
  const Objective objective = [&](const std::vector<double>& params) {
    const LearnerSpec trial = apply_params(base, space, params);
    return cross_validate(trial, ds, c.k, c.seed, &plan, c.jobs).mean(Metric::auc);
  };
  const TrialLog log = bho_optimize(objective, space, c.hpo_budget, c.seed);
  const Trial* best = log.best_trial();
  if (best == nullptr) fail_data("NoSuccessfulTrials", "every hpo trial failed");

  HpoReport rep;
  rep.trials_csv = log.csv();
  rep.summary = {{"version", kVersion},
                 {"config", c.to_json()},
                 {"budget", c.hpo_budget},
                 {"best", log.best_json()},
                 {"best_value", best->value}};
  rep.dir = c.out + "/" + c.experiment_name();
  make_dirs(rep.dir);
  write_text(rep.dir + "/hpo_trials.csv", rep.trials_csv);
  write_text(rep.dir + "/hpo_best.json", rep.summary.dump(2) + "\n");
  return rep;
}

CompareReport run_compare(const ExperimentConfig& base, const std::string& axis,
                          const std::string& value_a, const std::string& value_b) {
  if (axis != "features" && axis != "algorithm") {
    fail_config("BadAxis", "compare axis must be features or algorithm, got " + axis);
  }
  // Validate both arms up front, then load once so the arms share rows and
  // fold indices exactly.
  ExperimentConfig loader = base;
  if (axis == "features") {
    loader.features = (value_a == "GWP" && value_b == "GWP") ? "GWP" : "ALL";
    ExperimentConfig arm = base;
    arm.features = value_a;
    if (value_a == "GWP") arm.spei.clear();
    arm.validate();
    arm.features = value_b;
    arm.spei = value_b == "GWP" ? "" : base.spei;
    arm.validate();
  } else {
    ExperimentConfig arm = base;
    arm.algorithm = value_a;
    arm.validate();
    arm.algorithm = value_b;
    arm.validate();
  }
  loader.validate();
  return compare_on(load_experiment_data(loader), base, axis, value_a, value_b);
}

nlohmann::json run_all(const RunAllOptions& opt) {
  if (opt.jobs < 1) fail_config("BadParams", "jobs must be positive");

  SynthConfig synth;
  synth.n_rows = opt.n_rows;
  synth.years = opt.years;
  if (opt.years != static_cast<int>(synth.year_shares.size())) {
    synth.year_shares.assign(static_cast<size_t>(opt.years), 1.0 / opt.years);
  }
  synth.regions_per_country = opt.regions_per_country;
  synth.max_lag = opt.max_lag;
  synth.noise = opt.noise;
  synth.seed = opt.seed;
  synth.effects = opt.effects;
  make_dirs(opt.out + "/data");
  const SynthFiles files{opt.out + "/data/survey.csv", opt.out + "/data/spei.csv",
                         opt.out + "/data/truth.json"};
  generate(synth, files);

  // Prototype config: data paths echoed relative to the battery root so
  // reruns into other directories produce identical bytes.
  ExperimentConfig proto;
  proto.survey = "data/survey.csv";
  proto.spei = "data/spei.csv";
  proto.timescales = opt.timescales;
  proto.max_lag = opt.max_lag;
  proto.k = opt.k;
  proto.seed = opt.seed;
  proto.spei_bins = opt.spei_bins;
  proto.top_pdp = opt.top_pdp;
  proto.out = opt.out;
  proto.jobs = opt.jobs;

  ExperimentConfig loader = proto;
  loader.survey = files.survey;
  loader.spei = files.spei;
  const Dataset ds = load_experiment_data(loader);

  // Q1: the three tree-based learners on the full feature set, shared folds.
  std::vector<std::pair<std::string, ExperimentReport>> q1;
  for (const char* algo : {"DT", "RF", "XGB"}) {
    ExperimentConfig c = proto;
    c.algorithm = algo;
    c.name = std::string("q1_") + (algo == std::string("DT")   ? "dt"
                                   : algo == std::string("RF") ? "rf"
                                                               : "xgb");
    q1.emplace_back(algo, run_experiment_on(ds, c));
  }
  std::vector<std::pair<std::string, double>> ranking;
  nlohmann::json ranking_by;
  for (const auto& [algo, rep] : q1) {
    const double auc = rep.folds.mean(Metric::auc);
    ranking.emplace_back(algo, auc);
    ranking_by[algo] = auc;
  }
  std::stable_sort(ranking.begin(), ranking.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  nlohmann::json ranking_json = nlohmann::json::array();
  for (const auto& [algo, auc] : ranking) {
    ranking_json.push_back({{"algorithm", algo}, {"mean_auc", auc}});
  }

  // Q2: feature-set value, ALL vs GWP on the best-known learner.
  ExperimentConfig q2 = proto;
  q2.algorithm = "XGB";
  q2.name = "q2_features";
  const CompareReport cmp = compare_on(ds, q2, "features", "ALL", "GWP");
  bool significant = false;
  for (const auto& row : cmp.rows) {
    if (row.metric == metric_name(Metric::auc) && row.defined) {
      significant = row.p < 0.05 && row.mean_a > row.mean_b;
    }
  }

  // Q3: per-country models against the pooled Q1 XGB run.
  const double pooled = q1.back().second.folds.mean(Metric::auc);
  std::vector<std::string> codes;
  for (const Column& c : ds.columns()) {
    if (c.name.rfind("origin_", 0) == 0) codes.push_back(c.name.substr(7));
  }
  nlohmann::json countries = nlohmann::json::array();
  std::ostringstream q3_csv;
  q3_csv << "country,n_rows,mean_auc,pooled_mean_auc,delta\n";
  for (const std::string& code : codes) {
    long long n_rows = 0;
    for (double v : ds.col("origin_" + code).values) n_rows += v == 1.0 ? 1 : 0;
    nlohmann::json row;
    row["country"] = code;
    row["n_rows"] = n_rows;
    if (n_rows < 5LL * opt.k) {
      row["skipped"] = true;
      row["mean_auc"] = nullptr;
      row["delta"] = nullptr;
      q3_csv << code << ',' << n_rows << ",NA," << format_double(pooled) << ",NA\n";
    } else {
      ExperimentConfig c = proto;
      c.algorithm = "XGB";
      c.country = code;
      c.name = "q3_" + code;
      const ExperimentReport rep = run_experiment_on(ds, c);
      const double auc = rep.folds.mean(Metric::auc);
      row["skipped"] = false;
      row["mean_auc"] = auc;
      row["delta"] = auc - pooled;
      q3_csv << code << ',' << n_rows << ',' << format_double(auc) << ','
             << format_double(pooled) << ',' << format_double(auc - pooled) << '\n';
    }
    countries.push_back(row);
  }
  write_text(opt.out + "/q3_countries.csv", q3_csv.str());

  // Q4/Q5 read off the pooled XGB report.
  const ExperimentReport& xgb = q1.back().second;
  nlohmann::json top_cell;
  for (const auto& cell : xgb.grid) {
    if (top_cell.is_null() || cell.importance > top_cell["importance"].get<double>()) {
      top_cell = {{"timescale", cell.timescale},
                  {"lag", cell.lag},
                  {"importance", cell.importance}};
    }
  }
  nlohmann::json pdp_files = nlohmann::json::array();
  for (const auto& f : xgb.summary["pdp_files"]) {
    pdp_files.push_back("q1_xgb/" + f.get<std::string>());
  }

  nlohmann::json config;
  config["survey"] = "data/survey.csv";
  config["spei"] = "data/spei.csv";
  config["n_rows"] = opt.n_rows;
  config["k"] = opt.k;
  config["seed"] = opt.seed;
  config["years"] = opt.years;
  config["regions_per_country"] = opt.regions_per_country;
  config["max_lag"] = opt.max_lag;
  config["timescales"] = opt.timescales;
  nlohmann::json effects = nlohmann::json::array();
  for (const auto& e : opt.effects) {
    effects.push_back({{"driver", e.driver}, {"weight", e.weight}});
  }
  config["effects"] = effects;
  config["noise"] = opt.noise;
  config["spei_bins"] = opt.spei_bins;
  config["top_pdp"] = opt.top_pdp;

  nlohmann::json summary;
  summary["version"] = kVersion;
  summary["config"] = config;
  summary["q1"] = {{"ranking", ranking_json}, {"ranking_by", ranking_by}};
  summary["q2"] = {{"ttest", rows_json(cmp.rows)}, {"significant", significant}};
  summary["q3"] = {{"pooled_auc", pooled}, {"countries", countries}};
  summary["q4"] = {{"top_features", xgb.summary["top_features"]},
                   {"top_spei_cell", top_cell}};
  summary["q5"] = {{"pdp_files", pdp_files}};
  write_text(opt.out + "/summary.json", summary.dump(2) + "\n");
  return summary;
}

}  // namespace treeclime
