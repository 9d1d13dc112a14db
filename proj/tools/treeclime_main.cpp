#include <cctype>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "treeclime/common.hpp"
#include "treeclime/experiment.hpp"

namespace tc = treeclime;
namespace fs = std::filesystem;

namespace {

void make_dirs(const std::string& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) tc::fail_data("FileWrite", dir + ": " + ec.message());
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) tc::fail_data("FileWrite", "cannot open " + path);
  out << text;
  if (!out.good()) tc::fail_data("FileWrite", "failed writing " + path);
}

nlohmann::json load_json(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in.good()) tc::fail_config("UnreadableFile", "cannot open config " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  try {
    return nlohmann::json::parse(ss.str());
  } catch (const nlohmann::json::parse_error& e) {
    tc::fail_config("BadJson", path + ": " + e.what());
  }
}

uint64_t parse_env_seed(const std::string& text) {
  bool ok = !text.empty();
  for (char ch : text) ok = ok && std::isdigit(static_cast<unsigned char>(ch));
  if (ok) {
    try {
      return std::stoull(text);
    } catch (const std::exception&) {
      ok = false;
    }
  }
  tc::fail_config("BadSeed", "TREECLIME_SEED=" + text + " is not a valid seed");
}

// Seed precedence: --seed flag, then the config file, then TREECLIME_SEED,
// then the built-in default.
uint64_t fallback_seed(uint64_t current) {
  const char* env = std::getenv("TREECLIME_SEED");
  return env == nullptr ? current : parse_env_seed(env);
}

std::vector<tc::EffectTerm> parse_effects(const std::vector<std::string>& flags) {
  std::vector<tc::EffectTerm> effects;
  for (const std::string& s : flags) {
    const size_t eq = s.rfind('=');
    if (eq == std::string::npos || eq == 0) {
      tc::fail_config("BadEffect", "effect must be driver=weight, got " + s);
    }
    const std::string w = s.substr(eq + 1);
    char* end = nullptr;
    const double weight = std::strtod(w.c_str(), &end);
    if (w.empty() || end != w.c_str() + w.size()) {
      tc::fail_config("BadEffect", "effect weight is not a number: " + s);
    }
    effects.push_back({s.substr(0, eq), weight});
  }
  return effects;
}

std::vector<tc::EffectTerm> effects_from_json(const nlohmann::json& arr) {
  std::vector<tc::EffectTerm> effects;
  for (const auto& e : arr) {
    effects.push_back({e.at("driver").get<std::string>(), e.at("weight").get<double>()});
  }
  return effects;
}

// Experiment subcommands share one option set: a JSON config file plus a flag
// per config field, flags winning.
struct ExpCli {
  CLI::App* cmd = nullptr;
  std::string config_path;
  tc::ExperimentConfig flags;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--survey", flags.survey, "survey CSV path");
    c->add_option("--spei", flags.spei, "SPEI panel CSV path");
    c->add_option("--target", flags.target, "general | international");
    c->add_option("--features", flags.features, "GWP | SPEI | ALL");
    c->add_option("--country", flags.country, "all | origin code");
    c->add_option("--timescales", flags.timescales, "SPEI timescales (comma list)")
        ->delimiter(',');
    c->add_option("--max_lag", flags.max_lag, "max lag in months");
    c->add_option("--algorithm", flags.algorithm, "LR | DT | RF | XGB");
    c->add_option("--k", flags.k, "CV folds");
    c->add_option("--seed", flags.seed, "RNG seed");
    c->add_flag("--hpo", flags.hpo, "tune hyperparameters first");
    c->add_option("--hpo_budget", flags.hpo_budget, "tuning trials");
    c->add_option("--spei_bins", flags.spei_bins, "bins per SPEI column (0 = numeric)");
    c->add_option("--top_pdp", flags.top_pdp, "PDP files for the top families");
    c->add_option("--out", flags.out, "output directory");
    c->add_option("--name", flags.name, "report directory name");
    c->add_option("--jobs", flags.jobs, "worker threads");
  }

  tc::ExperimentConfig resolve() const {
    tc::ExperimentConfig c;
    bool has_seed = false;
    if (!config_path.empty()) {
      const nlohmann::json j = load_json(config_path);
      c = tc::ExperimentConfig::from_json(j);
      has_seed = j.contains("seed");
    }
    const auto given = [&](const char* n) { return cmd->count(n) > 0; };
    if (given("--survey")) c.survey = flags.survey;
    if (given("--spei")) c.spei = flags.spei;
    if (given("--target")) c.target = flags.target;
    if (given("--features")) c.features = flags.features;
    if (given("--country")) c.country = flags.country;
    if (given("--timescales")) c.timescales = flags.timescales;
    if (given("--max_lag")) c.max_lag = flags.max_lag;
    if (given("--algorithm")) c.algorithm = flags.algorithm;
    if (given("--k")) c.k = flags.k;
    if (given("--hpo")) c.hpo = flags.hpo;
    if (given("--hpo_budget")) c.hpo_budget = flags.hpo_budget;
    if (given("--spei_bins")) c.spei_bins = flags.spei_bins;
    if (given("--top_pdp")) c.top_pdp = flags.top_pdp;
    if (given("--out")) c.out = flags.out;
    if (given("--name")) c.name = flags.name;
    if (given("--jobs")) c.jobs = flags.jobs;
    if (given("--seed")) {
      c.seed = flags.seed;
    } else if (!has_seed) {
      c.seed = fallback_seed(c.seed);
    }
    return c;
  }
};

struct SynthCli {
  CLI::App* cmd = nullptr;
  std::string config_path;
  std::string out = "data";
  tc::SynthConfig flags;
  std::vector<std::string> effect_flags;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--out", out, "output directory");
    c->add_option("--seed", flags.seed, "RNG seed");
    c->add_option("--n_rows", flags.n_rows, "survey rows");
    c->add_option("--countries", flags.countries, "countries (max 6)");
    c->add_option("--years", flags.years, "interview years");
    c->add_option("--regions_per_country", flags.regions_per_country, "regions");
    c->add_option("--max_lag", flags.max_lag, "panel history in months");
    c->add_option("--noise", flags.noise, "latent noise scale");
    c->add_option("--effect", effect_flags, "planted driver=weight (repeatable)");
  }

  tc::SynthConfig resolve() const {
    tc::SynthConfig c;
    bool has_seed = false;
    if (!config_path.empty()) {
      const nlohmann::json j = load_json(config_path);
      for (const auto& [key, value] : j.items()) {
        try {
          if (key == "n_rows") {
            c.n_rows = value.get<int>();
          } else if (key == "countries") {
            c.countries = value.get<int>();
          } else if (key == "years") {
            c.years = value.get<int>();
          } else if (key == "regions_per_country") {
            c.regions_per_country = value.get<int>();
          } else if (key == "max_lag") {
            c.max_lag = value.get<int>();
          } else if (key == "noise") {
            c.noise = value.get<double>();
          } else if (key == "seed") {
            c.seed = value.get<uint64_t>();
            has_seed = true;
          } else if (key == "effects") {
            c.effects = effects_from_json(value);
          } else if (key == "origin_shares") {
            c.origin_shares = value.get<std::vector<double>>();
          } else if (key == "year_shares") {
            c.year_shares = value.get<std::vector<double>>();
          } else if (key == "hhsize_shares") {
            c.hhsize_shares = value.get<std::vector<double>>();
          } else if (key == "income_shares") {
            c.income_shares = value.get<std::vector<double>>();
          } else if (key == "age_shares") {
            c.age_shares = value.get<std::vector<double>>();
          } else if (key == "male_share") {
            c.male_share = value.get<double>();
          } else if (key == "urban_share") {
            c.urban_share = value.get<double>();
          } else if (key == "mabr_share") {
            c.mabr_share = value.get<double>();
          } else if (key == "hskill_share") {
            c.hskill_share = value.get<double>();
          } else {
            tc::fail_config("UnknownKey", "unknown config key '" + key + "'");
          }
        } catch (const nlohmann::json::exception& e) {
          tc::fail_config("BadValue", "config key '" + key + "': " + e.what());
        }
      }
    }
    const auto given = [&](const char* n) { return cmd->count(n) > 0; };
    if (given("--n_rows")) c.n_rows = flags.n_rows;
    if (given("--countries")) c.countries = flags.countries;
    if (given("--years")) c.years = flags.years;
    if (given("--regions_per_country")) c.regions_per_country = flags.regions_per_country;
    if (given("--max_lag")) c.max_lag = flags.max_lag;
    if (given("--noise")) c.noise = flags.noise;
    if (given("--effect")) c.effects = parse_effects(effect_flags);
    if (given("--seed")) {
      c.seed = flags.seed;
    } else if (!has_seed) {
      c.seed = fallback_seed(c.seed);
    }
    if (c.years > 0 && c.years != static_cast<int>(c.year_shares.size())) {
      c.year_shares.assign(static_cast<size_t>(c.years), 1.0 / c.years);
    }
    if (c.countries > 0 && c.countries != static_cast<int>(c.origin_shares.size())) {
      c.origin_shares.assign(static_cast<size_t>(c.countries), 1.0 / c.countries);
    }
    return c;
  }
};

struct RunAllCli {
  CLI::App* cmd = nullptr;
  std::string config_path;
  tc::RunAllOptions flags;
  std::vector<std::string> effect_flags;

  void attach(CLI::App* c) {
    cmd = c;
    c->add_option("--config", config_path, "JSON config file");
    c->add_option("--out", flags.out, "output directory");
    c->add_option("--seed", flags.seed, "RNG seed");
    c->add_option("--jobs", flags.jobs, "worker threads");
    c->add_option("--n_rows", flags.n_rows, "survey rows");
    c->add_option("--k", flags.k, "CV folds");
    c->add_option("--years", flags.years, "interview years");
    c->add_option("--regions_per_country", flags.regions_per_country, "regions");
    c->add_option("--max_lag", flags.max_lag, "max lag in months");
    c->add_option("--timescales", flags.timescales, "SPEI timescales (comma list)")
        ->delimiter(',');
    c->add_option("--noise", flags.noise, "latent noise scale");
    c->add_option("--spei_bins", flags.spei_bins, "bins per SPEI column");
    c->add_option("--top_pdp", flags.top_pdp, "PDP files for the top families");
    c->add_option("--effect", effect_flags, "planted driver=weight (repeatable)");
  }

  tc::RunAllOptions resolve() const {
    tc::RunAllOptions o;
    bool has_seed = false;
    if (!config_path.empty()) {
      const nlohmann::json j = load_json(config_path);
      for (const auto& [key, value] : j.items()) {
        try {
          if (key == "out") {
            o.out = value.get<std::string>();
          } else if (key == "seed") {
            o.seed = value.get<uint64_t>();
            has_seed = true;
          } else if (key == "jobs") {
            o.jobs = value.get<int>();
          } else if (key == "n_rows") {
            o.n_rows = value.get<int>();
          } else if (key == "k") {
            o.k = value.get<int>();
          } else if (key == "years") {
            o.years = value.get<int>();
          } else if (key == "regions_per_country") {
            o.regions_per_country = value.get<int>();
          } else if (key == "max_lag") {
            o.max_lag = value.get<int>();
          } else if (key == "timescales") {
            o.timescales = value.get<std::vector<int>>();
          } else if (key == "effects") {
            o.effects = effects_from_json(value);
          } else if (key == "noise") {
            o.noise = value.get<double>();
          } else if (key == "spei_bins") {
            o.spei_bins = value.get<int>();
          } else if (key == "top_pdp") {
            o.top_pdp = value.get<int>();
          } else {
            tc::fail_config("UnknownKey", "unknown config key '" + key + "'");
          }
        } catch (const nlohmann::json::exception& e) {
          tc::fail_config("BadValue", "config key '" + key + "': " + e.what());
        }
      }
    }
    const auto given = [&](const char* n) { return cmd->count(n) > 0; };
    if (given("--out")) o.out = flags.out;
    if (given("--jobs")) o.jobs = flags.jobs;
    if (given("--n_rows")) o.n_rows = flags.n_rows;
    if (given("--k")) o.k = flags.k;
    if (given("--years")) o.years = flags.years;
    if (given("--regions_per_country")) o.regions_per_country = flags.regions_per_country;
    if (given("--max_lag")) o.max_lag = flags.max_lag;
    if (given("--timescales")) o.timescales = flags.timescales;
    if (given("--noise")) o.noise = flags.noise;
    if (given("--spei_bins")) o.spei_bins = flags.spei_bins;
    if (given("--top_pdp")) o.top_pdp = flags.top_pdp;
    if (given("--effect")) o.effects = parse_effects(effect_flags);
    if (given("--seed")) {
      o.seed = flags.seed;
    } else if (!has_seed) {
      o.seed = fallback_seed(o.seed);
    }
    return o;
  }
};

void do_synth(const SynthCli& cli) {
  const tc::SynthConfig cfg = cli.resolve();
  make_dirs(cli.out);
  tc::generate(cfg, {cli.out + "/survey.csv", cli.out + "/spei.csv",
                     cli.out + "/truth.json"});
  std::cout << "wrote " << cli.out << "\n";
}

void do_prep(const ExpCli& cli) {
  const tc::ExperimentConfig cfg = cli.resolve();
  const tc::Dataset ds = tc::load_experiment_data(cfg);
  const tc::PrepPlan plan = tc::experiment_prep_plan(cfg, ds);
  const tc::Preprocessor prep = tc::fit_preprocessor(plan, ds);
  const std::string dir = cfg.out + "/" + cfg.experiment_name();
  make_dirs(dir);
  const nlohmann::json j = {{"version", tc::kVersion},
                            {"config", cfg.to_json()},
                            {"prep", prep.to_json()}};
  write_text(dir + "/prep.json", j.dump(2) + "\n");
  tc::write_dataset_csv(prep.apply(ds), dir + "/prepped.csv");
  std::cout << "wrote " << dir << "\n";
}

void do_hpo(const ExpCli& cli) {
  std::cout << "wrote " << tc::run_hpo(cli.resolve()).dir << "\n";
}

void do_train(const ExpCli& cli) {
  const tc::ExperimentConfig cfg = cli.resolve();
  const tc::FittedModel fitted =
      tc::fit_experiment_model(tc::load_experiment_data(cfg), cfg);
  const std::string dir = cfg.out + "/" + cfg.experiment_name();
  make_dirs(dir);
  const nlohmann::json j = {{"version", tc::kVersion},
                            {"config", cfg.to_json()},
                            {"algorithm", fitted.spec.to_json()},
                            {"prep", fitted.prep.to_json()},
                            {"model", tc::model_to_json(fitted.model)}};
  write_text(dir + "/model.json", j.dump(2) + "\n");
  if (cfg.hpo) write_text(dir + "/hpo_trials.csv", fitted.hpo_trials);
  std::cout << "wrote " << dir << "\n";
}

void do_evaluate(const ExpCli& cli) {
  std::cout << "wrote " << tc::run_experiment(cli.resolve()).dir << "\n";
}

void do_importance(const ExpCli& cli) {
  const tc::ExperimentConfig cfg = cli.resolve();
  const tc::FittedModel fitted =
      tc::fit_experiment_model(tc::load_experiment_data(cfg), cfg);
  const std::string dir = cfg.out + "/" + cfg.experiment_name();
  make_dirs(dir);
  const nlohmann::json j = {{"version", tc::kVersion},
                            {"config", cfg.to_json()},
                            {"importance_method", fitted.importance.method}};
  write_text(dir + "/importance.json", j.dump(2) + "\n");
  write_text(dir + "/importance.csv", tc::importance_csv(fitted.importance));
  write_text(dir + "/spei_lag_grid.csv",
             tc::spei_lag_grid_csv(tc::spei_lag_grid(fitted.importance)));
  std::cout << "wrote " << dir << "\n";
}

void do_pdp(const ExpCli& cli, const std::vector<std::string>& features) {
  const tc::ExperimentConfig cfg = cli.resolve();
  const tc::FittedModel fitted =
      tc::fit_experiment_model(tc::load_experiment_data(cfg), cfg);
  const std::vector<std::string> families =
      features.empty() ? tc::pdp_families(fitted.importance, fitted.prep, cfg.top_pdp)
                       : features;
  const std::string dir = cfg.out + "/" + cfg.experiment_name();
  make_dirs(dir);
  for (const std::string& f : families) {
    write_text(dir + "/pdp_" + f + ".csv",
               tc::pd_csv(tc::partial_dependence(fitted.model, fitted.transformed, f)));
  }
  std::cout << "wrote " << dir << "\n";
}

void do_compare(const ExpCli& cli, const std::string& axis, const std::string& a,
                const std::string& b) {
  std::cout << "wrote " << tc::run_compare(cli.resolve(), axis, a, b).dir << "\n";
}

void do_run_all(const RunAllCli& cli) {
  const tc::RunAllOptions opt = cli.resolve();
  tc::run_all(opt);
  std::cout << "wrote " << opt.out << "/summary.json\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"treeclime: tree-based analysis of climate-driven migration intentions"};
  app.require_subcommand(1);

  SynthCli synth_cli;
  synth_cli.attach(app.add_subcommand("synth", "Generate synthetic survey + SPEI data"));

  ExpCli prep_cli;
  prep_cli.attach(app.add_subcommand("prep", "Fit and apply the preprocessing pipeline"));

  ExpCli hpo_cli;
  hpo_cli.attach(app.add_subcommand("hpo", "Tune hyperparameters (Bayesian optimization)"));

  ExpCli train_cli;
  train_cli.attach(app.add_subcommand("train", "Fit the full-data model and serialize it"));

  ExpCli eval_cli;
  eval_cli.attach(
      app.add_subcommand("evaluate", "Cross-validate and write the full report"));

  ExpCli imp_cli;
  imp_cli.attach(app.add_subcommand("importance", "Feature importance and SPEI grid"));

  ExpCli pdp_cli;
  std::vector<std::string> pdp_features;
  CLI::App* pdp_cmd = app.add_subcommand("pdp", "Partial dependence curves");
  pdp_cli.attach(pdp_cmd);
  pdp_cmd->add_option("--feature", pdp_features,
                      "feature or family to profile (repeatable; default: top families)");

  ExpCli cmp_cli;
  std::string axis, value_a, value_b;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "Paired t-test between two arms");
  cmp_cli.attach(cmp_cmd);
  cmp_cmd->add_option("--axis", axis, "features | algorithm")->required();
  cmp_cmd->add_option("--value_a", value_a, "first arm value")->required();
  cmp_cmd->add_option("--value_b", value_b, "second arm value")->required();

  RunAllCli runall_cli;
  runall_cli.attach(
      app.add_subcommand("run-all", "Synthesize data and run the Q1-Q5 battery"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (synth_cli.cmd->parsed()) {
      do_synth(synth_cli);
    } else if (prep_cli.cmd->parsed()) {
      do_prep(prep_cli);
    } else if (hpo_cli.cmd->parsed()) {
      do_hpo(hpo_cli);
    } else if (train_cli.cmd->parsed()) {
      do_train(train_cli);
    } else if (eval_cli.cmd->parsed()) {
      do_evaluate(eval_cli);
    } else if (imp_cli.cmd->parsed()) {
      do_importance(imp_cli);
    } else if (pdp_cli.cmd->parsed()) {
      do_pdp(pdp_cli, pdp_features);
    } else if (cmp_cli.cmd->parsed()) {
      do_compare(cmp_cli, axis, value_a, value_b);
    } else {
      do_run_all(runall_cli);
    }
  } catch (const tc::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const tc::DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
