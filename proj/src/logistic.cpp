#include "treeclime/logistic.hpp"

#include <cmath>

#include "treeclime/common.hpp"
#include "treeclime/stats.hpp"

namespace treeclime {

namespace {

// Unpenalized Bernoulli log-likelihood at linear predictor eta.
double bernoulli_loglik(const std::vector<double>& eta, const std::vector<double>& y) {
  double ll = 0.0;
  for (size_t i = 0; i < y.size(); ++i) ll += y[i] * eta[i] - log1pexp(eta[i]);
  return ll;
}

void linear_predictor(const FeatureMatrix& fm, const std::vector<double>& beta,
                      std::vector<double>& eta) {
  const size_t p = fm.n_features();
  for (size_t i = 0; i < fm.rows; ++i) {
    double s = beta[0];
    for (size_t j = 0; j < p; ++j) s += beta[j + 1] * fm.cols[j][i];
    eta[i] = s;
  }
}

}  // namespace

double LogisticModel::mcfadden_r2() const {
  if (null_loglik == 0.0) return std::numeric_limits<double>::quiet_NaN();
  return 1.0 - loglik / null_loglik;
}

double LogisticModel::linear(const FeatureMatrix& fm, size_t row) const {
  double s = intercept;
  for (size_t j = 0; j < coef.size(); ++j) s += coef[j] * fm.cols[j][row];
  return s;
}

double LogisticModel::predict(const FeatureMatrix& fm, size_t row) const {
  return sigmoid(linear(fm, row));
}

LogisticModel fit_logistic(const FeatureMatrix& fm, const LogisticParams& params) {
  const size_t n = fm.rows;
  const size_t p = fm.n_features();
  if (fm.y.size() != n) fail_data("LengthMismatch", "target length does not match row count");
  if (n == 0) fail_data("EmptyInput", "cannot fit a logistic model on zero rows");
  for (double v : fm.y) {
    if (v != 0.0 && v != 1.0) fail_data("TargetNotBinary", "target values must be 0 or 1");
  }
  for (size_t j = 0; j < p; ++j) {
    if (fm.roles[j] == Role::categorical) {
      fail_config("CategoricalFeature",
                  "feature '" + fm.names[j] + "' must be one-hot encoded before fitting");
    }
    for (double v : fm.cols[j]) {
      if (is_missing(v)) {
        fail_data("MissingValue", "feature '" + fm.names[j] + "' contains missing values");
      }
    }
  }

  LogisticModel model;
  model.feature_names = fm.names;

  const double ybar = mean(fm.y);
  model.null_loglik =
      (ybar <= 0.0 || ybar >= 1.0)
          ? 0.0
          : static_cast<double>(n) * (ybar * std::log(ybar) + (1.0 - ybar) * std::log(1.0 - ybar));

  const size_t dim = p + 1;  // intercept first
  std::vector<double> beta(dim, 0.0);
  std::vector<double> eta(n, 0.0), prob(n), grad(dim), hess(dim * dim), trial(dim),
      trial_eta(n);

  auto penalty = [&](const std::vector<double>& b) {
    double s = 0.0;
    for (size_t j = 1; j < dim; ++j) s += b[j] * b[j];
    return 0.5 * params.l2 * s;
  };

  double pll = bernoulli_loglik(eta, fm.y) - penalty(beta);
  for (int iter = 0; iter < params.max_iter; ++iter) {
    model.n_iter = iter + 1;
    for (size_t i = 0; i < n; ++i) prob[i] = sigmoid(eta[i]);

    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (size_t i = 0; i < n; ++i) {
      const double r = fm.y[i] - prob[i];
      const double w = std::max(prob[i] * (1.0 - prob[i]), 1e-12);
      grad[0] += r;
      hess[0] += w;
      for (size_t j = 0; j < p; ++j) {
        const double xj = fm.cols[j][i];
        if (xj == 0.0) continue;
        grad[j + 1] += r * xj;
        const double wx = w * xj;
        hess[(j + 1) * dim] += wx;  // column 0 of row j+1 (lower triangle)
        for (size_t k = 0; k <= j; ++k) {
          hess[(j + 1) * dim + (k + 1)] += wx * fm.cols[k][i];
        }
      }
    }
    for (size_t j = 1; j < dim; ++j) {
      grad[j] -= params.l2 * beta[j];
      hess[j * dim + j] += params.l2;
    }
    // Mirror the lower triangle for the factorization.
    for (size_t r = 0; r < dim; ++r) {
      for (size_t c = r + 1; c < dim; ++c) hess[r * dim + c] = hess[c * dim + r];
    }

    Cholesky ch = Cholesky::decompose(hess, dim);
    double jitter = 1e-8;
    while (!ch.ok && jitter <= 1e-2) {
      std::vector<double> h2(hess);
      for (size_t d = 0; d < dim; ++d) h2[d * dim + d] += jitter;
      ch = Cholesky::decompose(h2, dim);
      jitter *= 10.0;
    }
    if (!ch.ok) break;
    const std::vector<double> step = ch.solve(grad);

    double scale = 1.0;
    double pll_new = pll;
    for (int halving = 0; halving < 40; ++halving) {
      for (size_t d = 0; d < dim; ++d) trial[d] = beta[d] + scale * step[d];
      linear_predictor(fm, trial, trial_eta);
      pll_new = bernoulli_loglik(trial_eta, fm.y) - penalty(trial);
      if (pll_new >= pll) break;
      scale *= 0.5;
    }
    beta = trial;
    eta = trial_eta;
    if (std::abs(pll_new - pll) < params.tol) {
      pll = pll_new;
      model.converged = true;
      break;
    }
    pll = pll_new;
  }

  model.intercept = beta[0];
  model.coef.assign(beta.begin() + 1, beta.end());
  model.loglik = bernoulli_loglik(eta, fm.y);
  return model;
}

}  // namespace treeclime
