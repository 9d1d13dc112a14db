#include "treeclime/hpo.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>

#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/rng.hpp"

namespace treeclime {

namespace {

constexpr double kNoise = 1e-6;
constexpr int kCandidates = 1024;
constexpr double kLog2Pi = 1.8378770664093453;
constexpr int kPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37};
constexpr double kLengthGrid[] = {0.05, 0.1, 0.2, 0.4, 0.8, 1.6};

double halton(uint64_t index, int base) {
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % static_cast<uint64_t>(base));
    index /= static_cast<uint64_t>(base);
  }
  return r;
}

struct CubePoint {
  std::vector<double> cube;  // canonical unit-cube coordinates
  std::vector<double> raw;   // values handed to the objective
};

CubePoint realize(const SearchSpace& space, const std::vector<double>& u) {
  CubePoint pt;
  pt.cube.resize(space.dims.size());
  pt.raw.resize(space.dims.size());
  for (size_t j = 0; j < space.dims.size(); ++j) {
    const SearchDim& dim = space.dims[j];
    switch (dim.kind) {
      case DimKind::integer: {
        const double lo = std::ceil(dim.lower);
        const double hi = std::floor(dim.upper);
        double v = static_cast<double>(std::llround(dim.lower + u[j] * (dim.upper - dim.lower)));
        v = std::min(hi, std::max(lo, v));
        pt.raw[j] = v;
        pt.cube[j] = (v - dim.lower) / (dim.upper - dim.lower);
        break;
      }
      case DimKind::real:
        pt.raw[j] = dim.lower + u[j] * (dim.upper - dim.lower);
        pt.cube[j] = u[j];
        break;
      case DimKind::log_real:
        pt.raw[j] =
            std::exp(std::log(dim.lower) + u[j] * (std::log(dim.upper) - std::log(dim.lower)));
        pt.cube[j] = u[j];
        break;
    }
  }
  return pt;
}

// Product of integer-dim cardinalities; 0 when any dim is continuous or the
// space is too large to ever enumerate.
long long discrete_size(const SearchSpace& space) {
  long long size = 1;
  for (const SearchDim& dim : space.dims) {
    if (dim.kind != DimKind::integer) return 0;
    const long long span =
        static_cast<long long>(std::floor(dim.upper) - std::ceil(dim.lower)) + 1;
    if (size > 1'000'000'000'000LL / span) return 0;
    size *= span;
  }
  return size;
}

bool first_untried(const SearchSpace& space, const std::set<std::vector<double>>& seen,
                   CubePoint& out) {
  const size_t d = space.dims.size();
  std::vector<double> lo(d);
  std::vector<long long> counts(d);
  long long total = 1;
  for (size_t j = 0; j < d; ++j) {
    if (space.dims[j].kind != DimKind::integer) return false;
    lo[j] = std::ceil(space.dims[j].lower);
    counts[j] = static_cast<long long>(std::floor(space.dims[j].upper) - lo[j]) + 1;
    if (total > 1'000'000LL / counts[j]) return false;
    total *= counts[j];
  }
  std::vector<double> raw(d);
  for (long long idx = 0; idx < total; ++idx) {
    long long rem = idx;
    for (size_t j = 0; j < d; ++j) {
      raw[j] = lo[j] + static_cast<double>(rem % counts[j]);
      rem /= counts[j];
    }
    if (!seen.count(raw)) {
      out.raw = raw;
      out.cube.resize(d);
      for (size_t j = 0; j < d; ++j) {
        out.cube[j] =
            (raw[j] - space.dims[j].lower) / (space.dims[j].upper - space.dims[j].lower);
      }
      return true;
    }
  }
  return false;
}

std::vector<double> build_kernel(const std::vector<std::vector<double>>& x,
                                 const std::vector<double>& ls, double jitter) {
  const size_t n = x.size();
  std::vector<double> k(n * n);
  for (size_t i = 0; i < n; ++i) {
    for (size_t j = i; j < n; ++j) {
      double d2 = 0.0;
      for (size_t q = 0; q < ls.size(); ++q) {
        const double delta = (x[i][q] - x[j][q]) / ls[q];
        d2 += delta * delta;
      }
      const double v = std::exp(-0.5 * d2);
      k[i * n + j] = v;
      k[j * n + i] = v;
    }
    k[i * n + i] = 1.0 + jitter;
  }
  return k;
}

double marginal_ll(const std::vector<std::vector<double>>& x, const std::vector<double>& ystd,
                   const std::vector<double>& ls) {
  const size_t n = x.size();
  const auto ch = Cholesky::decompose(build_kernel(x, ls, kNoise), n);
  if (!ch.ok) return -std::numeric_limits<double>::infinity();
  const auto alpha = ch.solve(ystd);
  double quad = 0.0;
  for (size_t i = 0; i < n; ++i) quad += ystd[i] * alpha[i];
  return -0.5 * quad - 0.5 * ch.log_det() - 0.5 * static_cast<double>(n) * kLog2Pi;
}

}  // namespace

void SearchSpace::validate() const {
  if (dims.empty()) fail_config("BadSpace", "search space has no dimensions");
  if (dims.size() > std::size(kPrimes)) {
    fail_config("BadSpace", "search space has more dimensions than supported");
  }
  for (const SearchDim& dim : dims) {
    if (!(dim.lower < dim.upper)) {
      fail_config("BadSpace", "dimension '" + dim.name + "' needs lower < upper");
    }
    if (dim.kind == DimKind::log_real && dim.lower <= 0.0) {
      fail_config("BadSpace", "dimension '" + dim.name + "' needs a positive lower bound");
    }
    if (dim.kind == DimKind::integer && std::floor(dim.upper) < std::ceil(dim.lower)) {
      fail_config("BadSpace", "dimension '" + dim.name + "' contains no integers");
    }
  }
}

double expected_improvement(double mean, double sd, double best_so_far) {
  if (sd < 0.0) fail_config("BadParams", "sd must be nonnegative");
  const double gap = mean - best_so_far;
  if (sd == 0.0) return std::max(gap, 0.0);
  const double z = gap / sd;
  return std::max(gap * normal_cdf(z) + sd * normal_pdf(z), 0.0);
}

void GpSurrogate::fit(std::vector<std::vector<double>> x, const std::vector<double>& y) {
  if (x.empty() || x.size() != y.size()) fail_config("BadParams", "mismatched surrogate inputs");
  points = std::move(x);
  const size_t n = y.size();
  const size_t d = points[0].size();

  y_mean = mean(y);
  double var = 0.0;
  for (const double v : y) var += (v - y_mean) * (v - y_mean);
  y_sd = std::sqrt(var / static_cast<double>(n));
  if (!(y_sd > 0.0)) y_sd = 1.0;
  std::vector<double> ystd(n);
  for (size_t i = 0; i < n; ++i) ystd[i] = (y[i] - y_mean) / y_sd;

  lengthscales.assign(d, 0.4);
  if (n >= 2) {
    for (int sweep = 0; sweep < 2; ++sweep) {
      for (size_t j = 0; j < d; ++j) {
        double best_ll = marginal_ll(points, ystd, lengthscales);
        double best_v = lengthscales[j];
        for (const double g : kLengthGrid) {
          std::vector<double> trial = lengthscales;
          trial[j] = g;
          const double ll = marginal_ll(points, ystd, trial);
          if (ll > best_ll) {
            best_ll = ll;
            best_v = g;
          }
        }
        lengthscales[j] = best_v;
      }
    }
  }

  for (const double jitter : {kNoise, 1e-4, 1e-2}) {
    chol = Cholesky::decompose(build_kernel(points, lengthscales, jitter), n);
    if (chol.ok) break;
  }
  if (!chol.ok) fail_data("SingularKernel", "surrogate kernel is not positive definite");
  alpha = chol.solve(ystd);
}

GpSurrogate::Posterior GpSurrogate::predict(const std::vector<double>& at) const {
  const size_t n = points.size();
  std::vector<double> kstar(n);
  for (size_t i = 0; i < n; ++i) {
    double d2 = 0.0;
    for (size_t q = 0; q < lengthscales.size(); ++q) {
      const double delta = (points[i][q] - at[q]) / lengthscales[q];
      d2 += delta * delta;
    }
    kstar[i] = std::exp(-0.5 * d2);
  }
  double mean_std = 0.0;
  for (size_t i = 0; i < n; ++i) mean_std += kstar[i] * alpha[i];
  const auto v = chol.solve(kstar);
  double var = 1.0 + kNoise;
  for (size_t i = 0; i < n; ++i) var -= kstar[i] * v[i];
  var = std::max(var, 0.0);
  return {y_mean + y_sd * mean_std, y_sd * std::sqrt(var)};
}

const Trial* TrialLog::best_trial() const {
  if (best < 0 || best >= static_cast<int>(trials.size())) return nullptr;
  return &trials[static_cast<size_t>(best)];
}

std::string TrialLog::csv() const {
  std::string out = "trial";
  for (const auto& name : names) out += "," + name;
  out += ",objective,status\n";
  for (size_t i = 0; i < trials.size(); ++i) {
    out += std::to_string(i);
    for (const double p : trials[i].params) out += "," + format_double(p);
    out += ",";
    out += std::isnan(trials[i].value) ? "NA" : format_double(trials[i].value);
    out += "," + trials[i].status + "\n";
  }
  return out;
}

nlohmann::json TrialLog::best_json() const {
  const Trial* t = best_trial();
  if (t == nullptr) fail_data("NoSuccessfulTrials", "every trial failed");
  nlohmann::json j = nlohmann::json::object();
  for (size_t i = 0; i < names.size(); ++i) {
    if (kinds[i] == DimKind::integer) {
      j[names[i]] = std::llround(t->params[i]);
    } else {
      j[names[i]] = t->params[i];
    }
  }
  return j;
}

TrialLog bho_optimize(const Objective& objective, const SearchSpace& space, int budget,
                      uint64_t seed) {
  space.validate();
  if (budget < 5) fail_config("BadParams", "budget must be at least 5");

  const size_t d = space.dims.size();
  TrialLog log;
  for (const SearchDim& dim : space.dims) {
    log.names.push_back(dim.name);
    log.kinds.push_back(dim.kind);
  }

  const long long full_size = discrete_size(space);
  std::set<std::vector<double>> seen;
  std::vector<std::vector<double>> xcube;
  std::vector<double> yok;

  const auto exhausted = [&] {
    return full_size > 0 && static_cast<long long>(seen.size()) >= full_size;
  };

  const auto evaluate = [&](const CubePoint& pt) {
    Trial tr;
    tr.params = pt.raw;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const double v = objective(pt.raw);
      if (std::isfinite(v)) {
        tr.value = v;
      } else {
        tr.status = "ObjectiveFailure";
      }
    } catch (const std::exception&) {
      tr.status = "ObjectiveFailure";
    }
    tr.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    seen.insert(pt.raw);
    if (tr.ok()) {
      if (log.best < 0 || tr.value > log.trials[static_cast<size_t>(log.best)].value) {
        log.best = static_cast<int>(log.trials.size());
      }
      xcube.push_back(pt.cube);
      yok.push_back(tr.value);
    }
    log.trials.push_back(std::move(tr));
  };

  // Warm start: rotated low-discrepancy points, duplicates skipped.
  const int warm = std::max(5, budget / 5);
  Rng shift_rng(mix_seed(seed, 0xA170));
  std::vector<double> shift(d);
  for (auto& s : shift) s = shift_rng.uniform();

  uint64_t halton_index = 0;
  int skips = 0;
  std::vector<double> u(d);
  while (static_cast<int>(log.trials.size()) < std::min(warm, budget) && !exhausted()) {
    ++halton_index;
    for (size_t j = 0; j < d; ++j) {
      const double v = halton(halton_index, kPrimes[j]) + shift[j];
      u[j] = v - std::floor(v);
    }
    const CubePoint pt = realize(space, u);
    if (seen.count(pt.raw)) {
      if (++skips > 10000) break;
      continue;
    }
    skips = 0;
    evaluate(pt);
  }

  // Surrogate phase: EI argmax over a fresh candidate set per trial.
  while (static_cast<int>(log.trials.size()) < budget && !exhausted()) {
    GpSurrogate gp;
    double best_value = 0.0;
    const bool have_model = !yok.empty();
    if (have_model) {
      gp.fit(xcube, yok);
      best_value = *std::max_element(yok.begin(), yok.end());
    }

    Rng cand_rng(mix_seed(seed, 0xCA4D, log.trials.size()));
    bool found = false;
    CubePoint chosen;
    double chosen_ei = -1.0;
    for (int c = 0; c < kCandidates; ++c) {
      for (size_t j = 0; j < d; ++j) u[j] = cand_rng.uniform();
      CubePoint pt = realize(space, u);
      if (seen.count(pt.raw)) continue;
      double ei = 0.0;
      if (have_model) {
        const auto post = gp.predict(pt.cube);
        ei = expected_improvement(post.mean, post.sd, best_value);
      }
      if (!found || ei > chosen_ei) {
        found = true;
        chosen_ei = ei;
        chosen = std::move(pt);
      }
    }
    if (!found && !first_untried(space, seen, chosen)) break;
    evaluate(chosen);
  }
  return log;
}

}  // namespace treeclime
