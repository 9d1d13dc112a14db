#include "treeclime/stats.hpp"

#include <cmath>
#include <stdexcept>

namespace treeclime {

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

double sample_sd(const std::vector<double>& v) {
  const size_t n = v.size();
  if (n < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(n - 1));
}

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * M_PI); }

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

// Continued fraction for the regularized incomplete beta, evaluated with the
// modified Lentz algorithm.
double beta_cf(double a, double b, double x) {
  constexpr int kMaxIter = 300;
  constexpr double kEps = 1e-15;
  constexpr double kTiny = 1e-300;

  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double ln_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(ln_front);
  // Use the symmetry that keeps the continued fraction fast-converging.
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_cf(a, b, x) / a;
  }
  return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (df <= 0.0) throw std::invalid_argument("student_t_two_sided_p: df must be positive");
  if (std::isinf(t)) return 0.0;
  const double x = df / (df + t * t);
  return incomplete_beta(0.5 * df, 0.5, x);
}

double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n == 0) throw std::invalid_argument("pearson: length mismatch");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (size_t i = 0; i < n; ++i) {
    const double dx = x[i] - mx;
    const double dy = y[i] - my;
    sxy += dx * dy;
    sxx += dx * dx;
    syy += dy * dy;
  }
  if (sxx == 0.0 || syy == 0.0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

double point_biserial(const std::vector<double>& indicator, const std::vector<double>& target) {
  return pearson(indicator, target);
}

Cholesky Cholesky::decompose(const std::vector<double>& a, size_t n) {
  Cholesky ch;
  ch.n = n;
  ch.lower.assign(n * n, 0.0);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = 0; j <= i; ++j) {
      double s = a[i * n + j];
      for (size_t k = 0; k < j; ++k) s -= ch.lower[i * n + k] * ch.lower[j * n + k];
      if (i == j) {
        if (s <= 0.0 || !std::isfinite(s)) return ch;  // ok stays false
        ch.lower[i * n + i] = std::sqrt(s);
      } else {
        ch.lower[i * n + j] = s / ch.lower[j * n + j];
      }
    }
  }
  ch.ok = true;
  return ch;
}

std::vector<double> Cholesky::solve(const std::vector<double>& b) const {
  std::vector<double> x(b);
  for (size_t i = 0; i < n; ++i) {  // forward: L z = b
    double s = x[i];
    for (size_t k = 0; k < i; ++k) s -= lower[i * n + k] * x[k];
    x[i] = s / lower[i * n + i];
  }
  for (size_t ii = n; ii-- > 0;) {  // backward: L^T x = z
    double s = x[ii];
    for (size_t k = ii + 1; k < n; ++k) s -= lower[k * n + ii] * x[k];
    x[ii] = s / lower[ii * n + ii];
  }
  return x;
}

double Cholesky::log_det() const {
  double s = 0.0;
  for (size_t i = 0; i < n; ++i) s += std::log(lower[i * n + i]);
  return 2.0 * s;
}

}  // namespace treeclime
