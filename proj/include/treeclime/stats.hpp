#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

namespace treeclime {

inline double sigmoid(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log(1 + exp(x)) without overflow.
inline double log1pexp(double x) {
  if (x > 35.0) return x;
  if (x < -35.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double mean(const std::vector<double>& v);
double sample_sd(const std::vector<double>& v);  // n-1 denominator

double normal_pdf(double z);
double normal_cdf(double z);

// Regularized incomplete beta I_x(a, b) via the modified Lentz continued
// fraction; converges to ~1e-15 for the (a, b) ranges used here.
double incomplete_beta(double a, double b, double x);

// Two-sided p-value for a Student t statistic with df degrees of freedom.
double student_t_two_sided_p(double t, double df);

// Pearson correlation; returns 0 when either side has zero variance.
double pearson(const std::vector<double>& x, const std::vector<double>& y);

// Point-biserial correlation between a 0/1 indicator and a 0/1 target
// (numerically the Pearson correlation of the two columns).
double point_biserial(const std::vector<double>& indicator, const std::vector<double>& target);

// Dense symmetric positive definite factorization A = L L^T, row-major.
struct Cholesky {
  size_t n = 0;
  std::vector<double> lower;  // row-major, strictly lower + diagonal used
  bool ok = false;

  static Cholesky decompose(const std::vector<double>& a, size_t n);
  std::vector<double> solve(const std::vector<double>& b) const;
  double log_det() const;  // log|A| = 2 * sum(log diag(L))
};

}  // namespace treeclime
