#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/dataset.hpp"
#include "treeclime/eval.hpp"
#include "treeclime/interpret.hpp"
#include "treeclime/model.hpp"
#include "treeclime/preprocess.hpp"
#include "treeclime/synth.hpp"

namespace treeclime {

inline constexpr const char* kVersion = "0.1.0";

// One experiment: a survey (+ optional SPEI panel), a target, a feature set,
// an algorithm, and a CV protocol. `out`, `name`, and `jobs` steer where and
// how the run executes; they are accepted from config files but excluded from
// report echoes so reruns at different locations or parallelism stay
// byte-identical.
struct ExperimentConfig {
  std::string survey;
  std::string spei;                       // required unless features == "GWP"
  std::string target = "general";        // general | international
  std::string features = "ALL";          // GWP | SPEI | ALL
  std::string country = "all";           // all | origin code (e.g. SEN)
  std::vector<int> timescales = {1, 2, 3, 6, 12, 18, 24};
  int max_lag = 48;
  std::string algorithm = "XGB";         // LR | DT | RF | XGB
  int k = 10;
  uint64_t seed = 42;
  bool hpo = false;
  int hpo_budget = 30;
  int spei_bins = 7;                     // 0 keeps spei columns numeric
  int top_pdp = 3;                       // PDP files for the top families
  std::string out = "results";
  std::string name;                      // report directory name; empty = derived
  int jobs = 1;

  void validate() const;                 // ConfigError naming the field
  std::string experiment_name() const;   // name, or <target>_<features>_<algo>[_<country>]
  std::string target_column() const;     // move_general / move_international

  nlohmann::json to_json() const;        // echo form (no out/name/jobs)
  // Accepts every field above plus out/name/jobs; unknown keys are
  // ConfigError(UnknownKey).
  static ExperimentConfig from_json(const nlohmann::json& j);
};

// Survey ingested with a header-inferred schema (region_id/month categorical,
// move_<target> as target, every other column binary), country-filtered, and
// lag-joined against the panel when the feature set needs it.
Dataset load_experiment_data(const ExperimentConfig& cfg);

// Drops join keys (and the opposite feature group), bins spei columns.
PrepPlan experiment_prep_plan(const ExperimentConfig& cfg, const Dataset& ds);

// Full-data fit on an already-loaded dataset: country filter, prep, (optional)
// tuning, model, and importance. The reusable core behind run_experiment_on
// and the train/importance/pdp subcommands.
struct FittedModel {
  LearnerSpec spec;          // resolved params (post-HPO when enabled)
  PrepPlan plan;
  Preprocessor prep;
  Dataset transformed;       // prep applied to the filtered dataset
  Model model;
  ImportanceReport importance;
  nlohmann::json hpo;        // {budget, best, best_value}; null when off
  std::string hpo_trials;    // TrialLog csv; empty when off
};
FittedModel fit_experiment_model(const Dataset& loaded, const ExperimentConfig& cfg);

// Preprocessing-aware PDP targets: importance aggregated per source column
// (one-hot and bin families collapse onto their raw column), top `top` names.
std::vector<std::string> pdp_families(const ImportanceReport& imp, const Preprocessor& prep,
                                      int top);

struct ExperimentReport {
  ExperimentConfig config;
  LearnerSpec spec;                  // resolved params (post-HPO when enabled)
  FoldResults folds;
  ImportanceReport importance;       // impurity (trees) or permutation (LR)
  std::vector<PDSeries> pdp;         // top families by aggregated importance
  std::vector<SpeiLagCell> grid;
  nlohmann::json summary;            // contents of summary.json
  std::string dir;                   // directory the report was written to
};

// Core pipeline on a pre-loaded dataset: (tune ->) cross-validate -> fit the
// full-data model -> interpret -> write <out>/<name>/{summary.json, folds.csv,
// importance.csv, pdp_<family>.csv, spei_lag_grid.csv}. cfg's paths are only
// echoed here, never read.
ExperimentReport run_experiment_on(const Dataset& ds, const ExperimentConfig& cfg);

// load_experiment_data + run_experiment_on.
ExperimentReport run_experiment(const ExperimentConfig& cfg);

// Tuning only (cfg.hpo is forced on): BHO over the algorithm's space with the
// experiment's CV objective, written to <out>/<name>/{hpo_trials.csv,
// hpo_best.json}.
struct HpoReport {
  nlohmann::json summary;  // contents of hpo_best.json
  std::string trials_csv;
  std::string dir;
};
HpoReport run_hpo(const ExperimentConfig& cfg);

struct TTestRow {
  std::string metric, target, arm_a, arm_b;
  double mean_a = 0.0, mean_b = 0.0;
  int df = 0;
  double t = 0.0, p = 1.0;
  std::string comparison;  // "<arm_a> > <arm_b>" / "<" / "~" at the 0.05 level
  bool defined = true;     // false: too few pairwise-complete folds (NA cells)
};

// metric,target,arm_a,mean_a,arm_b,mean_b,df,t_value,p_value,comparison
std::string ttest_csv(const std::vector<TTestRow>& rows);

struct CompareReport {
  ExperimentReport a, b;
  std::vector<TTestRow> rows;  // one per metric, enum order
  std::string dir;
};

// Two arms differing on one axis ("features" or "algorithm"), run on one
// shared dataset load so fold indices pair exactly. Writes
// <out>/<name>/{ttest.csv, summary.json} with the arm reports in
// subdirectories named by arm value.
CompareReport run_compare(const ExperimentConfig& base, const std::string& axis,
                          const std::string& value_a, const std::string& value_b);

// The synthetic Q1-Q5 battery: generate data, rank DT/RF/XGB on ALL features
// (Q1), t-test ALL vs GWP (Q2), per-country runs vs the pooled model (Q3),
// importance and SPEI grid (Q4), PDP curves (Q5). Returns the battery summary
// (also written to <out>/summary.json).
struct RunAllOptions {
  std::string out = "results";
  uint64_t seed = 42;
  int jobs = 1;
  int n_rows = 5000;
  int k = 10;
  int years = 7;
  int regions_per_country = 3;
  int max_lag = 48;
  std::vector<int> timescales = {1, 2, 3, 6, 12, 18, 24};
  std::vector<EffectTerm> effects = {{"|spei12_lag6|", 0.8},
                                     {"hhsize_inf-3", 0.6},
                                     {"age_1524", 0.5},
                                     {"urban", -0.4},
                                     {"male", 0.3}};
  double noise = 1.0;
  int spei_bins = 7;
  int top_pdp = 3;
};

nlohmann::json run_all(const RunAllOptions& opt);

}  // namespace treeclime
