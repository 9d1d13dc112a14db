#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/stats.hpp"

namespace treeclime {

enum class DimKind { integer, real, log_real };

struct SearchDim {
  std::string name;
  DimKind kind = DimKind::real;
  double lower = 0.0;
  double upper = 1.0;
};

struct SearchSpace {
  std::vector<SearchDim> dims;
  void validate() const;  // ConfigError(BadSpace)
};

struct Trial {
  std::vector<double> params;  // raw values; integer dims already rounded
  double value = std::numeric_limits<double>::quiet_NaN();
  double seconds = 0.0;
  std::string status = "ok";  // or "ObjectiveFailure"
  bool ok() const { return status == "ok"; }
};

struct TrialLog {
  std::vector<std::string> names;
  std::vector<DimKind> kinds;
  std::vector<Trial> trials;
  int best = -1;  // first trial attaining the max objective; -1 when none succeeded

  const Trial* best_trial() const;
  std::string csv() const;           // trial,<names...>,objective,status
  nlohmann::json best_json() const;  // {name: value}, integer dims as integers;
                                     // DataError(NoSuccessfulTrials)
};

// EI = (mean - best)*Phi(z) + sd*phi(z), z = (mean - best)/sd;
// max(mean - best, 0) when sd = 0. ConfigError(BadParams) on sd < 0.
double expected_improvement(double mean, double sd, double best_so_far);

// Gaussian-process surrogate on the unit cube: squared-exponential kernel with
// per-dim length scales chosen by marginal-likelihood coordinate descent over
// a fixed grid, observation noise 1e-6, values standardized internally.
struct GpSurrogate {
  struct Posterior {
    double mean = 0.0;
    double sd = 0.0;
  };

  void fit(std::vector<std::vector<double>> x, const std::vector<double>& y);
  Posterior predict(const std::vector<double>& at) const;

  std::vector<double> lengthscales;

  std::vector<std::vector<double>> points;
  std::vector<double> alpha;  // K^{-1} (y - mean)/sd
  Cholesky chol;
  double y_mean = 0.0;
  double y_sd = 1.0;
};

using Objective = std::function<double(const std::vector<double>&)>;

// Quasi-random warm start of max(5, budget/5) trials, then EI-argmax over a
// fresh 1024-candidate set per trial. Integer dims are rounded before the
// objective sees them; already-evaluated points are never retried, and a fully
// enumerated all-integer space stops the search early. A throwing (or
// non-finite) objective records an ObjectiveFailure trial and moves on.
// Deterministic given seed. ConfigError(BadParams) on budget < 5.
TrialLog bho_optimize(const Objective& objective, const SearchSpace& space, int budget,
                      uint64_t seed);

}  // namespace treeclime
