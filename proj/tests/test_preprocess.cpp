#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "fixtures.hpp"
#include "treeclime/preprocess.hpp"
#include "treeclime/rng.hpp"

using namespace treeclime;

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

TEST_CASE("bin edges: validation") {
  BinEdges ok{{0, 30, 65, kInf}, {"young", "middle", "old"}};
  ok.validate();
  BinEdges unsorted{{0, 65, 30}, {"a", "b"}};
  CHECK_THROWS_WITH_AS(unsorted.validate(), doctest::Contains("BadEdges"), DataError);
  BinEdges badlen{{0, 1, 2}, {"a"}};
  CHECK_THROWS_WITH_AS(badlen.validate(), doctest::Contains("BadEdges"), DataError);
  BinEdges inf_interior{{0, kInf, 5}, {"a", "b"}};
  CHECK_THROWS_WITH_AS(inf_interior.validate(), doctest::Contains("BadEdges"), DataError);
}

TEST_CASE("bin edges: half-open intervals, last closed, boundary goes up") {
  BinEdges b{{0, 30, 65, 100}, {"young", "middle", "old"}};
  CHECK(b.find_bin(0) == 0);
  CHECK(b.find_bin(29.999) == 0);
  CHECK(b.find_bin(30) == 1);  // interior edge belongs to the upper interval
  CHECK(b.find_bin(64.999) == 1);
  CHECK(b.find_bin(65) == 2);
  CHECK(b.find_bin(99.9) == 2);
  CHECK(b.find_bin(100) == 2);  // last interval closed above
  CHECK_THROWS_WITH_AS(b.find_bin(-0.1), doctest::Contains("OutOfRange"), DataError);
  CHECK_THROWS_WITH_AS(b.find_bin(100.1), doctest::Contains("OutOfRange"), DataError);
  CHECK(b.find_bin_clamped(-5) == 0);
  CHECK(b.find_bin_clamped(500) == 2);
}

TEST_CASE("equal-width discretization: six SPEI values into seven bins") {
  const std::vector<double> spei = {0.434, 0.806, -0.271, 0.131, -0.722, -0.288};
  const auto b = discretize_equal_width(spei, 7);
  REQUIRE(b.edges.size() == 8);
  CHECK(b.edges.front() == doctest::Approx(-0.722));
  CHECK(b.edges.back() == doctest::Approx(0.806));
  const double step = (0.806 - (-0.722)) / 7.0;
  for (size_t i = 0; i + 1 < b.edges.size(); ++i) {
    CHECK(b.edges[i + 1] - b.edges[i] == doctest::Approx(step).epsilon(1e-9));
  }
  CHECK(b.labels.front() == "bin1");
  CHECK(b.labels.back() == "bin7");
  // Frozen assignments: values fall into bins 6,7,3,4,1,2 (1-based).
  const std::vector<int> expected = {5, 6, 2, 3, 0, 1};
  for (size_t i = 0; i < spei.size(); ++i) {
    CHECK(b.find_bin(spei[i]) == expected[i]);
  }
}

TEST_CASE("equal-width discretization: integers 0..6 into 7 bins") {
  std::vector<double> v;
  for (int i = 0; i <= 6; ++i) v.push_back(i);
  const auto b = discretize_equal_width(v, 7);
  CHECK(b.edges[1] == doctest::Approx(6.0 / 7.0).epsilon(1e-12));
  CHECK(b.find_bin(0) == 0);
  CHECK(b.find_bin(6) == 6);
}

TEST_CASE("equal-width discretization: errors") {
  CHECK_THROWS_WITH_AS(discretize_equal_width({3.0, 3.0, 3.0}, 4),
                       doctest::Contains("ConstantColumn"), DataError);
  CHECK_THROWS_WITH_AS(discretize_equal_width({}, 4), doctest::Contains("EmptyInput"), DataError);
  CHECK_THROWS_WITH_AS(discretize_equal_width({kMissing, kMissing}, 4),
                       doctest::Contains("EmptyInput"), DataError);
  CHECK_THROWS_WITH_AS(discretize_equal_width({1.0, 2.0}, 0), doctest::Contains("BadBinCount"),
                       ConfigError);
}

TEST_CASE("equal-width property: random values, min->first bin, max->last bin") {
  Rng rng(11);
  for (int rep = 0; rep < 20; ++rep) {
    std::vector<double> v(50);
    for (auto& x : v) x = rng.uniform(-4, 9);
    const int k = rng.uniform_int(2, 9);
    const auto b = discretize_equal_width(v, k);
    CHECK(static_cast<int>(b.n_bins()) == k);
    double lo = v[0], hi = v[0];
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
      const int bin = b.find_bin(x);
      CHECK(bin >= 0);
      CHECK(bin < k);
    }
    CHECK(b.find_bin(lo) == 0);
    CHECK(b.find_bin(hi) == k - 1);
  }
}

TEST_CASE("supervised merge: 20-row fixture with frozen merge order") {
  // values 1..20 in five equal-frequency bins; positive counts per bin
  // 3,2,1,1,0 give point-biserial correlations (hand-computed; e.g. bin 1:
  // r = 1.6/sqrt(3.2*4.55) = 0.419314) of
  // (0.4193, 0.1572, -0.1048, -0.1048, -0.3669): the two bins with identical
  // class proportions merge first.
  std::vector<double> values, target;
  const std::vector<double> y = {1, 1, 1, 0, 1, 1, 0, 0, 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 0};
  for (int i = 0; i < 20; ++i) {
    values.push_back(i + 1);
    target.push_back(y[static_cast<size_t>(i)]);
  }
  const auto b4 = supervised_bin_merge(values, target, 5, 4);
  CHECK(b4.edges == std::vector<double>{-kInf, 5, 9, 17, kInf});
  CHECK(b4.labels[0] == "inf.-5");
  CHECK(b4.labels[3] == "17-inf.");
  const auto b3 = supervised_bin_merge(values, target, 5, 3);
  CHECK(b3.edges == std::vector<double>{-kInf, 5, 9, kInf});
  const auto b2 = supervised_bin_merge(values, target, 5, 2);
  CHECK(b2.edges == std::vector<double>{-kInf, 9, kInf});
}

TEST_CASE("supervised merge: identical-proportion middle bins merge first") {
  const std::vector<double> values = {1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<double> target = {1, 1, 1, 0, 0, 1, 0, 0};
  const auto b = supervised_bin_merge(values, target, 4, 3);
  CHECK(b.edges == std::vector<double>{-kInf, 3, 7, kInf});
}

TEST_CASE("supervised merge: all-equal correlations merge leftmost first") {
  std::vector<double> values, target;
  for (int i = 1; i <= 16; ++i) {
    values.push_back(i);
    target.push_back(1.0);  // constant target -> every r is 0 -> ties everywhere
  }
  const auto b = supervised_bin_merge(values, target, 8, 4);
  CHECK(b.edges == std::vector<double>{-kInf, 11, 13, 15, kInf});
}

TEST_CASE("supervised merge: merged edges are a subset of initial edges") {
  Rng rng(4);
  for (int rep = 0; rep < 10; ++rep) {
    std::vector<double> values(60), target(60);
    for (auto& v : values) v = rng.uniform(0, 100);
    for (auto& t : target) t = rng.below(2);
    const auto full = supervised_bin_merge(values, target, 10, 10);
    const auto merged = supervised_bin_merge(values, target, 10, 4);
    for (double e : merged.edges) {
      CHECK(std::find(full.edges.begin(), full.edges.end(), e) != full.edges.end());
    }
    CHECK(merged.n_bins() == 4);
  }
}

TEST_CASE("supervised merge: errors") {
  CHECK_THROWS_WITH_AS(supervised_bin_merge({1, 1, 1, 1}, {0, 1, 0, 1}, 4, 3),
                       doctest::Contains("TooFewDistinctValues"), DataError);
  CHECK_THROWS_WITH_AS(supervised_bin_merge({1, 2, 3}, {0, 2, 1}, 2, 2),
                       doctest::Contains("TargetNotBinary"), DataError);
  CHECK_THROWS_WITH_AS(supervised_bin_merge({1, 2}, {0}, 2, 2),
                       doctest::Contains("LengthMismatch"), DataError);
}

TEST_CASE("binarize ages and one-hot: worked example") {
  Dataset ds = Dataset::with_rows(6);
  ds.add_column(Column{"age", Role::numeric, {17, 66, 38, 42, 23, 31}, {}});
  const BinEdges edges{{0, 30, 65, kInf}, {"young", "middle", "old"}};
  const auto out = binarize_numeric(ds, "age", edges);
  REQUIRE(out.n_cols() == 3);
  CHECK(out.col(0).name == "age_young");
  CHECK(out.col(1).name == "age_middle");
  CHECK(out.col(2).name == "age_old");
  CHECK(out.col("age_young").values == std::vector<double>{1, 0, 0, 0, 1, 0});
  CHECK(out.col("age_middle").values == std::vector<double>{0, 0, 1, 1, 0, 1});
  CHECK(out.col("age_old").values == std::vector<double>{0, 1, 0, 0, 0, 0});
  // Every row has exactly one hot column.
  for (size_t r = 0; r < 6; ++r) {
    double s = 0;
    for (size_t c = 0; c < 3; ++c) s += out.col(c).values[r];
    CHECK(s == 1.0);
  }
}

TEST_CASE("binarize with the survey age groups") {
  Dataset ds = Dataset::with_rows(4);
  ds.add_column(Column{"age", Role::numeric, {15, 24, 25, 49}, {}});
  const BinEdges edges{{15, 25, 35, 50}, {"age1524", "age2534", "age35plus"}};
  const auto out = binarize_numeric(ds, "age", edges);
  CHECK(out.col("age_age1524").values == std::vector<double>{1, 1, 0, 0});
  CHECK(out.col("age_age2534").values == std::vector<double>{0, 0, 1, 0});
  CHECK(out.col("age_age35plus").values == std::vector<double>{0, 0, 0, 1});
}

TEST_CASE("binarize: out-of-range value is named") {
  Dataset ds = Dataset::with_rows(1);
  ds.add_column(Column{"age", Role::numeric, {14}, {}});
  const BinEdges edges{{15, 25, 35, 50}, {"a", "b", "c"}};
  CHECK_THROWS_WITH_AS(binarize_numeric(ds, "age", edges), doctest::Contains("OutOfRange"),
                       DataError);
  CHECK_THROWS_WITH_AS(binarize_numeric(ds, "age", edges), doctest::Contains("14"), DataError);
}

TEST_CASE("one_hot on a categorical column") {
  const auto toy = fixtures::toy_dataset();
  const auto out = one_hot(toy, "age");
  CHECK(out.n_cols() == 7);  // age -> 3 cols, plus hhsize/mabr/drought/move
  CHECK(out.col(0).name == "age_young");
  CHECK(out.col(1).name == "age_middle");
  CHECK(out.col(2).name == "age_old");
  CHECK(out.col(3).name == "hhsize");
  CHECK(out.col("age_young").values[0] == 1.0);
  CHECK(out.col("age_old").values[3] == 1.0);
  for (size_t r = 0; r < out.n_rows(); ++r) {
    CHECK(out.col("age_young").values[r] + out.col("age_middle").values[r] +
              out.col("age_old").values[r] ==
          1.0);
  }
  CHECK_THROWS_WITH_AS(one_hot(toy, "nope"), doctest::Contains("UnknownColumn"), DataError);
  CHECK_THROWS_WITH_AS(one_hot(toy, "move"), doctest::Contains("WrongRole"), DataError);
}

TEST_CASE("one_hot single-label column") {
  Dataset ds = Dataset::with_rows(3);
  ds.add_column(Column{"c", Role::categorical, {0, 0, 0}, {"only"}});
  const auto out = one_hot(ds, "c");
  CHECK(out.n_cols() == 1);
  CHECK(out.col(0).name == "c_only");
  CHECK(out.col(0).values == std::vector<double>{1, 1, 1});
}

TEST_CASE("one_hot propagates missing to every generated column") {
  Dataset ds = Dataset::with_rows(2);
  ds.add_column(Column{"c", Role::categorical, {0, kMissing}, {"x", "y"}});
  const auto out = one_hot(ds, "c");
  CHECK(out.col("c_x").values[0] == 1.0);
  CHECK(out.col("c_y").values[0] == 0.0);
  CHECK(is_missing(out.col("c_x").values[1]));
  CHECK(is_missing(out.col("c_y").values[1]));
}

TEST_CASE("binarize idempotency: decode to midpoint, re-binarize") {
  Rng rng(7);
  const BinEdges edges{{0, 10, 20, 30, 40}, {"a", "b", "c", "d"}};
  for (int rep = 0; rep < 200; ++rep) {
    const double v = rng.uniform(0, 40);
    const int b = edges.find_bin(v);
    const double mid = 0.5 * (edges.edges[static_cast<size_t>(b)] +
                              edges.edges[static_cast<size_t>(b) + 1]);
    CHECK(edges.find_bin(mid) == b);
  }
}

TEST_CASE("preprocessor: fit on train, apply to test, manifest round trip") {
  // Train has categories a,b; test introduces c and an out-of-span numeric.
  Dataset train = Dataset::with_rows(4);
  train.add_column(Column{"region_id", Role::categorical, {0, 0, 1, 1}, {"R1", "R2"}});
  train.add_column(Column{"origin", Role::categorical, {0, 1, 0, 1}, {"a", "b"}});
  train.add_column(Column{"spei12_lag0", Role::numeric, {-1.0, -0.1, 0.5, 1.0}, {}});
  train.add_column(Column{"male", Role::binary, {1, 0, 1, 0}, {}});
  train.add_column(Column{"move", Role::target, {1, 0, 1, 0}, {}});

  PrepPlan plan;
  plan.drop = {"region_id"};
  plan.one_hot_cols = {"origin"};
  plan.spei_bins = 2;
  const auto prep = fit_preprocessor(plan, train);

  const auto enc = prep.apply(train);
  CHECK(enc.n_cols() == 2 + 2 + 1 + 1);  // origin_a, origin_b, spei bins x2, male, move
  CHECK(enc.col(0).name == "origin_a");
  CHECK(enc.col(1).name == "origin_b");
  CHECK(enc.col(2).name == "spei12_lag0_bin1");
  CHECK(enc.col(3).name == "spei12_lag0_bin2");
  CHECK(enc.col("spei12_lag0_bin1").values == std::vector<double>{1, 1, 0, 0});
  CHECK(enc.col("spei12_lag0_bin2").values == std::vector<double>{0, 0, 1, 1});

  // Test fold: unseen category c -> all-zero one-hot row; value 9 clamps into
  // the last bin; -9 clamps into the first.
  Dataset test = Dataset::with_rows(3);
  test.add_column(Column{"region_id", Role::categorical, {0, 0, 0}, {"R1"}});
  test.add_column(Column{"origin", Role::categorical, {2, 0, 1}, {"a", "b", "c"}});
  test.add_column(Column{"spei12_lag0", Role::numeric, {9.0, -9.0, 0.1}, {}});
  test.add_column(Column{"male", Role::binary, {1, 1, 0}, {}});
  test.add_column(Column{"move", Role::target, {0, 1, 0}, {}});
  const auto enc_test = prep.apply(test);
  CHECK(enc_test.col("origin_a").values[0] == 0.0);
  CHECK(enc_test.col("origin_b").values[0] == 0.0);
  CHECK(enc_test.col("spei12_lag0_bin2").values[0] == 1.0);
  CHECK(enc_test.col("spei12_lag0_bin1").values[1] == 1.0);

  // Manifest round trip: identical steps, identical application.
  const auto j = prep.to_json();
  const auto prep2 = Preprocessor::from_json(j);
  const auto enc2 = prep2.apply(test);
  REQUIRE(enc2.n_cols() == enc_test.n_cols());
  for (size_t c = 0; c < enc2.n_cols(); ++c) {
    CHECK(enc2.col(c).name == enc_test.col(c).name);
    for (size_t r = 0; r < enc2.n_rows(); ++r) {
      const double a = enc2.col(c).values[r];
      const double e = enc_test.col(c).values[r];
      CHECK(((is_missing(a) && is_missing(e)) || a == e));
    }
  }
  // Infinite supervised edges survive the JSON round trip as strings.
  const auto j2 = prep2.to_json();
  CHECK(j == j2);
}

TEST_CASE("preprocessor: supervised bins use the training target only") {
  Dataset train = Dataset::with_rows(8);
  train.add_column(Column{"hhsize", Role::numeric, {1, 2, 3, 4, 5, 6, 7, 8}, {}});
  train.add_column(Column{"move", Role::target, {1, 1, 1, 0, 0, 1, 0, 0}, {}});
  PrepPlan plan;
  plan.supervised_bins["hhsize"] = {4, 3};
  plan.spei_bins = 0;
  const auto prep = fit_preprocessor(plan, train);
  const auto enc = prep.apply(train);
  CHECK(enc.n_cols() == 4);  // 3 hhsize bins + move
  CHECK(enc.col(0).name == "hhsize_inf.-3");
  CHECK(enc.col(1).name == "hhsize_3-7");
  CHECK(enc.col(2).name == "hhsize_7-inf.");
}
