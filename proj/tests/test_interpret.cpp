#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/interpret.hpp"
#include "treeclime/rng.hpp"

using namespace treeclime;

namespace {

// x1 strong, x2 mild, z pure noise.
Dataset planted_dataset(int n, uint64_t seed) {
  Rng rng(mix_seed(seed, 0x9a1));
  std::vector<double> x1(n), x2(n), z(n), y(n);
  for (int i = 0; i < n; ++i) {
    x1[i] = rng.normal();
    x2[i] = rng.normal();
    z[i] = rng.normal();
    const double eta = 2.0 * x1[i] + 1.0 * x2[i];
    y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
  }
  auto ds = Dataset::with_rows(static_cast<size_t>(n));
  ds.add_column({"x1", Role::numeric, x1, {}});
  ds.add_column({"x2", Role::numeric, x2, {}});
  ds.add_column({"z", Role::numeric, z, {}});
  ds.add_column({"y", Role::target, y, {}});
  return ds;
}

// The printed five-element arithmetic example: counts tree, supplied
// contributions, expected node importances -1108 / -18 / -8.
std::vector<EqA2Node> figA5_nodes() {
  return {
      {"age", 14, -86, {1, 2, 3}},  // 6*-5 + 8*-7 = -86
      {"drought", 5, -8, {4, 5}},
      {"", 5, -8, {}},
      {"mabr", 4, -4, {6, 7}},
      {"", 3, -6, {}},
      {"", 2, -2, {}},
      {"", 2, -2, {}},
      {"", 2, -2, {}},
  };
}

}  // namespace

TEST_CASE("impurity importance reproduces the fixed-tree hand computation") {
  const auto rep = impurity_importance(fixtures::fig_tree());
  CHECK(rep.method == "impurity");
  REQUIRE(rep.entries.size() == 4);
  // Gini decreases: drought 2.4, age 0.557143, mabr 0.5; hhsize unused.
  CHECK(rep.entries[0].feature == "drought");
  CHECK(rep.entries[0].importance == doctest::Approx(0.6942148760330578).epsilon(1e-12));
  CHECK(rep.entries[1].feature == "age");
  CHECK(rep.entries[1].importance == doctest::Approx(0.16115702479338845).epsilon(1e-12));
  CHECK(rep.entries[2].feature == "mabr");
  CHECK(rep.entries[2].importance == doctest::Approx(0.14462809917355373).epsilon(1e-12));
  CHECK(rep.entries[3].feature == "hhsize");
  CHECK(rep.entries[3].importance == 0.0);
  double total = 0;
  for (const auto& e : rep.entries) {
    CHECK(e.importance >= 0.0);
    total += e.importance;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("a single-split stump gives its feature full importance") {
  const auto fm = FeatureMatrix::from(fixtures::toy_dataset());
  const auto stump = fit_tree(fm, {0.0, 1, 1});
  const auto rep = impurity_importance(stump);
  CHECK(rep.entries[0].feature == "drought");
  CHECK(rep.entries[0].importance == 1.0);
  for (size_t i = 1; i < rep.entries.size(); ++i) CHECK(rep.entries[i].importance == 0.0);
}

TEST_CASE("a feature no forest tree splits on scores zero") {
  auto ds = planted_dataset(120, 2);
  ds.add_column({"flat", Role::numeric, std::vector<double>(120, 3.25), {}});
  const auto fm = FeatureMatrix::from(ds);
  ForestParams p;
  p.n_trees = 12;
  p.tree.max_depth = 4;
  const auto rep = impurity_importance(fit_forest(fm, p, 5));
  REQUIRE(rep.find("flat") != nullptr);
  CHECK(rep.find("flat")->importance == 0.0);
  double total = 0;
  for (const auto& e : rep.entries) total += e.importance;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("gbt impurity importance ranks the planted driver first") {
  const auto fm = FeatureMatrix::from(planted_dataset(300, 7));
  GbtParams p;
  p.n_trees = 30;
  p.tree.max_depth = 3;
  const auto rep = impurity_importance(fit_gbt(fm, p, 3));
  CHECK(rep.entries[0].feature == "x1");
  REQUIRE(rep.find("x2") != nullptr);
  REQUIRE(rep.find("z") != nullptr);
  CHECK(rep.find("x2")->importance > rep.find("z")->importance);
  double total = 0;
  for (const auto& e : rep.entries) {
    CHECK(e.importance >= 0.0);
    total += e.importance;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("impurity importance rejects unusable models") {
  CHECK_THROWS_WITH_AS(impurity_importance(Tree{}), doctest::Contains("UntrainedModel"),
                       ConfigError);
  CHECK_THROWS_WITH_AS(impurity_importance(Model{LogisticModel{}}),
                       doctest::Contains("UnsupportedModel"), ConfigError);
}

TEST_CASE("eqA2 arithmetic reproduces the printed example") {
  const auto rep = eqA2_node_arithmetic(figA5_nodes());
  CHECK(rep.method == "paper_eqA2");
  REQUIRE(rep.entries.size() == 3);
  CHECK(rep.entries[0].feature == "age");
  CHECK(rep.entries[0].importance == doctest::Approx(1108.0 / 1134.0).epsilon(1e-12));
  CHECK(std::abs(rep.entries[0].importance - 0.977) < 1e-3);
  CHECK(rep.entries[1].feature == "drought");
  CHECK(rep.entries[1].importance == doctest::Approx(18.0 / 1134.0).epsilon(1e-12));
  CHECK(rep.entries[2].feature == "mabr");
  CHECK(rep.entries[2].importance == doctest::Approx(8.0 / 1134.0).epsilon(1e-12));
  CHECK(rep.entries[0].importance + rep.entries[1].importance + rep.entries[2].importance ==
        doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("eqA2 trivial shapes") {
  const auto sole = eqA2_node_arithmetic({{"x", 3, 2, {}}});
  REQUIRE(sole.entries.size() == 1);
  CHECK(sole.entries[0].importance == 1.0);

  const auto pair = eqA2_node_arithmetic({{"a", 4, 3, {}}, {"b", 6, 2, {}}});
  REQUIRE(pair.entries.size() == 2);
  CHECK(pair.entries[0].importance == 0.5);
  CHECK(pair.entries[1].importance == 0.5);
}

TEST_CASE("eqA2 rejects malformed structures") {
  CHECK_THROWS_WITH_AS(eqA2_node_arithmetic({{"a", 1, 1, {1}}, {"b", 1, 1, {0}}}),
                       doctest::Contains("CyclicStructure"), DataError);
  CHECK_THROWS_WITH_AS(eqA2_node_arithmetic({{"a", 1, 1, {2}}, {"b", 1, 1, {2}}, {"", 1, 1, {}}}),
                       doctest::Contains("CyclicStructure"), DataError);
  CHECK_THROWS_WITH_AS(eqA2_node_arithmetic({{"a", 1, 1, {9}}}), doctest::Contains("BadNodeRef"),
                       DataError);
}

TEST_CASE("permuting a feature the model ignores degrades nothing") {
  const auto fm = FeatureMatrix::from(fixtures::toy_dataset());
  const Model m = fixtures::fig_tree();
  for (const Metric metric : {Metric::auc, Metric::accuracy}) {
    const auto rep = permutation_importance(m, fm, metric, 4, 11);
    REQUIRE(rep.find("hhsize") != nullptr);
    const auto& e = *rep.find("hhsize");
    CHECK(e.importance == 0.0);
    REQUIRE(e.repeats.size() == 4);
    for (const double d : e.repeats) CHECK(d == 0.0);
  }
}

TEST_CASE("a constant model has zero permutation importance everywhere") {
  const auto fm = FeatureMatrix::from(fixtures::toy_dataset());
  const Model m = fit_tree(fm, {0.0, 0, 1});
  for (const Metric metric : {Metric::auc, Metric::accuracy}) {
    const auto rep = permutation_importance(m, fm, metric, 3, 5);
    for (const auto& e : rep.entries) {
      CHECK(e.importance == 0.0);
      for (const double d : e.repeats) CHECK(d == 0.0);
    }
  }
}

TEST_CASE("permutation importance recovers the planted ordering") {
  const auto ds = planted_dataset(300, 4);
  const auto fm = FeatureMatrix::from(ds);

  GbtParams p;
  p.n_trees = 40;
  p.tree.max_depth = 3;
  const Model gbt = fit_gbt(fm, p, 9);
  const auto rep = permutation_importance(gbt, fm, Metric::auc, 5, 13);
  CHECK(rep.entries[0].feature == "x1");
  CHECK(rep.find("x1")->importance > 0.05);
  CHECK(rep.find("x2")->importance > rep.find("z")->importance);

  const Model lr = fit_logistic(fm);
  const auto lrep = permutation_importance(lr, fm, Metric::auc, 5, 13);
  CHECK(lrep.entries[0].feature == "x1");
  CHECK(lrep.find("x2")->importance > lrep.find("z")->importance);
}

TEST_CASE("permutation importance surfaces planted drivers across seeds") {
  int hits = 0;
  for (uint64_t s = 0; s < 10; ++s) {
    const int n = 200;
    Rng rng(mix_seed(s, 0x5eed));
    std::vector<std::vector<double>> x(6, std::vector<double>(n));
    std::vector<double> y(n);
    for (int i = 0; i < n; ++i) {
      for (auto& col : x) col[i] = rng.normal();
      const double eta = 2.0 * x[0][i] + 1.5 * x[1][i];
      y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1.0 : 0.0;
    }
    auto ds = Dataset::with_rows(n);
    for (size_t j = 0; j < x.size(); ++j) {
      ds.add_column({"v" + std::to_string(j), Role::numeric, x[j], {}});
    }
    ds.add_column({"y", Role::target, y, {}});
    const auto fm = FeatureMatrix::from(ds);
    GbtParams p;
    p.n_trees = 20;
    p.tree.max_depth = 3;
    const auto rep = permutation_importance(fit_gbt(fm, p, s), fm, Metric::auc, 3, 99);
    bool v0 = false, v1 = false;
    for (size_t r = 0; r < 3 && r < rep.entries.size(); ++r) {
      v0 = v0 || rep.entries[r].feature == "v0";
      v1 = v1 || rep.entries[r].feature == "v1";
    }
    hits += v0 && v1 ? 1 : 0;
  }
  CHECK(hits >= 9);
}

TEST_CASE("permutation importance is seed-deterministic") {
  const auto fm = FeatureMatrix::from(planted_dataset(120, 6));
  GbtParams p;
  p.n_trees = 10;
  p.tree.max_depth = 3;
  const Model m = fit_gbt(fm, p, 2);
  const auto a = permutation_importance(m, fm, Metric::auc, 3, 21);
  const auto b = permutation_importance(m, fm, Metric::auc, 3, 21);
  const auto c = permutation_importance(m, fm, Metric::auc, 3, 22);
  REQUIRE(a.entries.size() == b.entries.size());
  bool any_diff = false;
  for (size_t i = 0; i < a.entries.size(); ++i) {
    CHECK(a.entries[i].feature == b.entries[i].feature);
    CHECK(a.entries[i].repeats == b.entries[i].repeats);
    const auto* other = c.find(a.entries[i].feature);
    REQUIRE(other != nullptr);
    any_diff = any_diff || a.entries[i].repeats != other->repeats;
  }
  CHECK(any_diff);
}

TEST_CASE("permutation importance validates its inputs") {
  const auto fm = FeatureMatrix::from(fixtures::toy_dataset());
  const Model m = fixtures::fig_tree();
  CHECK_THROWS_WITH_AS(permutation_importance(m, fm, Metric::precision, 3, 1),
                       doctest::Contains("MetricUndefined"), ConfigError);
  CHECK_THROWS_WITH_AS(permutation_importance(m, fm, Metric::auc, 0, 1),
                       doctest::Contains("BadParams"), ConfigError);
}

TEST_CASE("partial dependence reproduces the worked mabr example") {
  const auto ds = fixtures::toy_dataset();
  const Model m = fixtures::fig_tree();

  const auto prop = partial_dependence(m, ds, "mabr", {}, PdMode::label_proportion);
  CHECK(prop.feature == "mabr");
  CHECK(prop.n_background == 14);
  REQUIRE(prop.points.size() == 2);
  CHECK(prop.points[0].label == "yes");
  CHECK(prop.points[0].pd == 0.5);
  CHECK(prop.points[1].label == "no");
  CHECK(prop.points[1].pd == doctest::Approx(3.0 / 14.0).epsilon(1e-12));
  CHECK(std::abs(prop.points[0].pd - 0.50) < 0.005);
  CHECK(std::abs(prop.points[1].pd - 0.21) < 0.005);

  const auto mean = partial_dependence(m, ds, "mabr");
  CHECK(mean.points[0].pd == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(mean.points[1].pd == doctest::Approx(5.0 / 14.0).epsilon(1e-12));
}

TEST_CASE("partial dependence is flat for an ignored feature") {
  const auto ds = fixtures::toy_dataset();
  const auto series = partial_dependence(fixtures::fig_tree(), ds, "hhsize");
  REQUIRE(series.points.size() == 3);
  CHECK(series.points[0].pd == series.points[1].pd);
  CHECK(series.points[1].pd == series.points[2].pd);
}

TEST_CASE("partial dependence obeys the law of total expectation") {
  const auto ds = fixtures::toy_dataset();
  const auto fm = FeatureMatrix::from(ds);
  const Model stump = fit_tree(fm, {0.0, 1, 1});  // splits only drought
  const auto series = partial_dependence(stump, ds, "drought");

  const auto& col = ds.col("drought");
  double weighted = 0;
  for (size_t b = 0; b < col.labels.size(); ++b) {
    double count = 0;
    for (const double v : col.values) count += v == static_cast<double>(b) ? 1 : 0;
    weighted += count / static_cast<double>(ds.n_rows()) * series.points[b].pd;
  }
  const auto probs = predict_probs(stump, fm);
  double mean_pred = 0;
  for (const double p : probs) mean_pred += p;
  mean_pred /= static_cast<double>(probs.size());
  CHECK(std::abs(weighted - mean_pred) < 1e-9);
}

TEST_CASE("partial dependence handles one-hot families one-of-K") {
  const int n = 60;
  Rng rng(8);
  std::vector<double> fa(n), fb(n), fc(n), noise(n), y(n);
  for (int i = 0; i < n; ++i) {
    const auto pick = rng.below(3);
    fa[i] = pick == 0 ? 1 : 0;
    fb[i] = pick == 1 ? 1 : 0;
    fc[i] = pick == 2 ? 1 : 0;
    noise[i] = rng.normal();
    y[i] = rng.uniform() < (pick == 1 ? 0.8 : 0.3) ? 1 : 0;
  }
  auto ds = Dataset::with_rows(n);
  ds.add_column({"f_a", Role::binary, fa, {}});
  ds.add_column({"f_b", Role::binary, fb, {}});
  ds.add_column({"f_c", Role::binary, fc, {}});
  ds.add_column({"noise", Role::numeric, noise, {}});
  ds.add_column({"y", Role::target, y, {}});
  const auto fm = FeatureMatrix::from(ds);
  const Model m = fit_tree(fm, {0.0, 3, 5});

  const auto series = partial_dependence(m, ds, "f");
  REQUIRE(series.points.size() == 3);
  CHECK(series.points[0].label == "a");
  CHECK(series.points[1].label == "b");
  CHECK(series.points[2].label == "c");

  // Manual one-of-K forcing must agree exactly.
  for (size_t which = 0; which < 3; ++which) {
    auto forced = ds;
    const char* names[] = {"f_a", "f_b", "f_c"};
    for (size_t j = 0; j < 3; ++j) {
      auto col = forced.col(names[j]);
      std::fill(col.values.begin(), col.values.end(), j == which ? 1.0 : 0.0);
      forced.replace_column(names[j], {col});
    }
    const auto probs = predict_probs(m, FeatureMatrix::from(forced));
    double mean_pred = 0;
    for (const double p : probs) mean_pred += p;
    mean_pred /= static_cast<double>(probs.size());
    CHECK(series.points[which].pd == mean_pred);
  }
}

TEST_CASE("partial dependence over numeric values tracks a monotone model") {
  const auto ds = planted_dataset(200, 12);
  const auto fm = FeatureMatrix::from(ds);
  const Model lr = fit_logistic(fm);
  const auto series = partial_dependence(lr, ds, "x1", {"-1.5", "0", "1.5"});
  REQUIRE(series.points.size() == 3);
  CHECK(series.points[0].pd < series.points[1].pd);
  CHECK(series.points[1].pd < series.points[2].pd);
}

TEST_CASE("partial dependence enumerates distinct numeric values by default") {
  auto ds = Dataset::with_rows(4);
  ds.add_column({"x", Role::numeric, {2.0, 1.0, 2.0, 3.0}, {}});
  ds.add_column({"y", Role::target, {1, 0, 1, 0}, {}});
  const auto fm = FeatureMatrix::from(ds);
  const Model m = fit_tree(fm, {0.0, 2, 1});
  const auto series = partial_dependence(m, ds, "x");
  REQUIRE(series.points.size() == 3);
  CHECK(series.points[0].label == "1");
  CHECK(series.points[1].label == "2");
  CHECK(series.points[2].label == "3");
}

TEST_CASE("partial dependence validates feature and labels") {
  const auto ds = fixtures::toy_dataset();
  const Model m = fixtures::fig_tree();
  CHECK_THROWS_WITH_AS(partial_dependence(m, ds, "ghost"), doctest::Contains("UnknownFeature"),
                       DataError);
  CHECK_THROWS_WITH_AS(partial_dependence(m, ds, "mabr", {"maybe"}),
                       doctest::Contains("UnknownLabel"), DataError);
  CHECK_THROWS_WITH_AS(partial_dependence(m, Dataset::with_rows(0), "mabr"),
                       doctest::Contains("EmptyBackground"), DataError);
}

TEST_CASE("spei lag grid aggregates bin families") {
  ImportanceReport rep;
  rep.method = "impurity";
  rep.entries = {{"spei12_lag6_bin1", 0.125, {}},
                 {"spei12_lag6_bin7", 0.125, {}},
                 {"spei1_lag0", 0.5, {}},
                 {"gender_male", 0.125, {}},
                 {"spei24_lag48_bin4", 0.125, {}}};
  const auto grid = spei_lag_grid(rep);
  REQUIRE(grid.size() == 3);
  CHECK(grid[0].timescale == 1);
  CHECK(grid[0].lag == 0);
  CHECK(grid[0].importance == 0.5);
  CHECK(grid[1].timescale == 12);
  CHECK(grid[1].lag == 6);
  CHECK(grid[1].importance == 0.25);
  CHECK(grid[2].timescale == 24);
  CHECK(grid[2].lag == 48);
  CHECK(grid[2].importance == 0.125);
  CHECK(spei_lag_grid_csv(grid) ==
        "timescale,lag,importance\n1,0,0.5\n12,6,0.25\n24,48,0.125\n");
}

TEST_CASE("report csv emitters") {
  ImportanceReport imp;
  imp.method = "impurity";
  imp.entries = {{"a", 0.75, {}}, {"b", 0.25, {}}};
  CHECK(importance_csv(imp) == "feature,importance\na,0.75\nb,0.25\n");

  ImportanceReport perm;
  perm.method = "permutation";
  perm.entries = {{"a", 0.5, {0.25, 0.75}}, {"b", 0.0, {0.0, 0.0}}};
  CHECK(importance_csv(perm) ==
        "feature,importance,delta1,delta2\na,0.5,0.25,0.75\nb,0,0,0\n");

  PDSeries s;
  s.feature = "mabr";
  s.mode = PdMode::label_proportion;
  s.n_background = 14;
  s.points = {{"yes", 0.5}, {"no", 3.0 / 14.0}};
  CHECK(pd_csv(s) == "value,pd\nyes,0.5\nno," + format_double(3.0 / 14.0) + "\n");
}
