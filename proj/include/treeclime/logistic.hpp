#pragma once

#include <string>
#include <vector>

#include "treeclime/matrix.hpp"

namespace treeclime {

struct LogisticParams {
  double l2 = 1e-6;    // ridge strength on non-intercept coefficients
  int max_iter = 100;
  double tol = 1e-10;  // convergence threshold on the penalized log-likelihood
};

struct LogisticModel {
  std::vector<std::string> feature_names;
  std::vector<double> coef;
  double intercept = 0.0;
  double loglik = 0.0;       // unpenalized, at the fitted coefficients
  double null_loglik = 0.0;  // intercept-only model
  int n_iter = 0;
  bool converged = false;

  // 1 - loglik / null_loglik; NaN when the target is single-class.
  double mcfadden_r2() const;
  double linear(const FeatureMatrix& fm, size_t row) const;
  double predict(const FeatureMatrix& fm, size_t row) const;  // P(y = 1)
};

// Newton / IRLS with step halving. Features must be binary or numeric and
// complete; the target must be 0/1.
LogisticModel fit_logistic(const FeatureMatrix& fm, const LogisticParams& params = {});

}  // namespace treeclime
