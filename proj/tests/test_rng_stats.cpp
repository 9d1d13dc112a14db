#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <set>

#include "treeclime/rng.hpp"
#include "treeclime/stats.hpp"

using namespace treeclime;

TEST_CASE("rng determinism and stream independence") {
  Rng a(42), b(42), c(43);
  std::vector<uint64_t> xs, ys;
  for (int i = 0; i < 64; ++i) {
    xs.push_back(a.next());
    ys.push_back(b.next());
  }
  CHECK(xs == ys);
  bool any_diff = false;
  for (int i = 0; i < 64; ++i) any_diff |= (c.next() != xs[i]);
  CHECK(any_diff);

  // mix_seed separates labeled streams.
  CHECK(mix_seed(7, 1) != mix_seed(7, 2));
  CHECK(mix_seed(7, 1, 0) != mix_seed(7, 1, 1));
  CHECK(mix_seed(7, 1) == mix_seed(7, 1));
}

TEST_CASE("uniform and below ranges") {
  Rng r(1);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
  }
  std::vector<int> counts(7, 0);
  for (int i = 0; i < 70000; ++i) counts[r.below(7)]++;
  for (int k = 0; k < 7; ++k) CHECK(std::abs(counts[k] - 10000) < 500);
}

TEST_CASE("normal moments") {
  Rng r(5);
  std::vector<double> z(20000);
  for (auto& v : z) v = r.normal();
  CHECK(std::abs(mean(z)) < 0.03);
  CHECK(std::abs(sample_sd(z) - 1.0) < 0.03);
}

TEST_CASE("shuffle is a permutation and seed-stable") {
  Rng r1(9), r2(9);
  std::vector<int> v1(50), v2(50);
  for (int i = 0; i < 50; ++i) v1[i] = v2[i] = i;
  r1.shuffle(v1);
  r2.shuffle(v2);
  CHECK(v1 == v2);
  std::vector<int> sorted = v1;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 50; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("subset sampler draws distinct values and restores pool") {
  SubsetSampler s;
  s.reset(20);
  Rng r(3);
  std::vector<int> out;
  for (int rep = 0; rep < 200; ++rep) {
    s.sample(r, 5, out);
    std::set<int> uniq(out.begin(), out.end());
    CHECK(uniq.size() == 5);
    for (int v : out) {
      CHECK(v >= 0);
      CHECK(v < 20);
    }
  }
  // Pool restoration: sampling all 20 must yield a permutation of 0..19.
  s.sample(r, 20, out);
  std::vector<int> sorted = out;
  std::sort(sorted.begin(), sorted.end());
  for (int i = 0; i < 20; ++i) CHECK(sorted[i] == i);
}

TEST_CASE("normal pdf and cdf") {
  CHECK(normal_pdf(0.0) == doctest::Approx(0.3989422804014327).epsilon(1e-12));
  CHECK(normal_cdf(0.0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(normal_cdf(1.96) == doctest::Approx(0.9750021048517795).epsilon(1e-10));
  CHECK(normal_cdf(-1.96) == doctest::Approx(1.0 - 0.9750021048517795).epsilon(1e-10));
}

// Reference p-values frozen from an independent implementation of the
// t distribution survival function.
TEST_CASE("student t two-sided p against frozen references") {
  struct Case {
    double t;
    double df;
    double p;
  };
  const Case cases[] = {
      {3.4641016151377544, 2, 0.07417990022744854},
      {1.0, 1, 0.49999999999999956},
      {2.0, 4, 0.1161165235168155},
      {2.2281388519649385, 10, 0.05000000000180862},
      {0.5, 9, 0.6290712998260264},
      {10.2899151128766, 9, 2.8193002127642657e-06},
      {1.95, 9, 0.08296671728325979},
      {2.086, 20, 0.04999635445744025},
      {0.0, 5, 1.0},
      {5.0, 3, 0.015392438073302296},
  };
  for (const auto& c : cases) {
    CHECK(student_t_two_sided_p(c.t, c.df) == doctest::Approx(c.p).epsilon(1e-8));
    CHECK(student_t_two_sided_p(-c.t, c.df) == doctest::Approx(c.p).epsilon(1e-8));
  }
  // df=2 closed form: p = 1 - t/sqrt(t^2+2).
  const double t = 2.0 * std::sqrt(3.0);
  CHECK(student_t_two_sided_p(t, 2) ==
        doctest::Approx(1.0 - t / std::sqrt(t * t + 2.0)).epsilon(1e-12));
}

TEST_CASE("incomplete beta endpoints and symmetry") {
  CHECK(incomplete_beta(2.0, 3.0, 0.0) == 0.0);
  CHECK(incomplete_beta(2.0, 3.0, 1.0) == 1.0);
  // I_x(a,b) = 1 - I_{1-x}(b,a)
  for (double x : {0.1, 0.3, 0.5, 0.7, 0.9}) {
    CHECK(incomplete_beta(2.5, 1.5, x) ==
          doctest::Approx(1.0 - incomplete_beta(1.5, 2.5, 1.0 - x)).epsilon(1e-12));
  }
  // I_x(1,1) = x (uniform).
  CHECK(incomplete_beta(1.0, 1.0, 0.42) == doctest::Approx(0.42).epsilon(1e-12));
}

TEST_CASE("pearson and point biserial") {
  std::vector<double> x = {1, 2, 3, 4, 5};
  std::vector<double> y = {2, 4, 6, 8, 10};
  CHECK(pearson(x, y) == doctest::Approx(1.0).epsilon(1e-12));
  std::vector<double> yn = {10, 8, 6, 4, 2};
  CHECK(pearson(x, yn) == doctest::Approx(-1.0).epsilon(1e-12));
  std::vector<double> flat = {3, 3, 3, 3, 3};
  CHECK(pearson(x, flat) == 0.0);

  // Hand check: indicator (1,1,0,0), target (1,0,0,0).
  // r = (M1-M0)/s * sqrt(p q): means .5/.0, pooled sd of target sqrt(3/16)... use
  // direct Pearson: cov = sum((xi-.5)(yi-.25))/4 = ( .5*.75 + .5*-.25 + 0 + 0
  // ... computed = 1/sqrt(3).
  std::vector<double> ind = {1, 1, 0, 0};
  std::vector<double> tgt = {1, 0, 0, 0};
  CHECK(point_biserial(ind, tgt) == doctest::Approx(1.0 / std::sqrt(3.0)).epsilon(1e-12));
}

TEST_CASE("sigmoid and log1pexp") {
  CHECK(sigmoid(0.0) == 0.5);
  CHECK(sigmoid(std::log(3.0)) == doctest::Approx(0.75).epsilon(1e-12));
  CHECK(sigmoid(-40.0) > 0.0);
  CHECK(sigmoid(30.0) < 1.0);
  CHECK(sigmoid(800.0) == 1.0);  // no overflow at extreme inputs
  CHECK(sigmoid(-800.0) == 0.0);
  CHECK(log1pexp(0.0) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  CHECK(log1pexp(100.0) == doctest::Approx(100.0).epsilon(1e-12));
  CHECK(log1pexp(-100.0) == doctest::Approx(std::exp(-100.0)).epsilon(1e-6));
}
