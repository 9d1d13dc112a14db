#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treeclime/eval.hpp"
#include "treeclime/model.hpp"

namespace treeclime {

struct ImportanceEntry {
  std::string feature;
  double importance = 0.0;
  std::vector<double> repeats;  // permutation only: per-repeat degradation
};

struct ImportanceReport {
  std::string method;  // impurity / paper_eqA2 / permutation
  std::vector<ImportanceEntry> entries;  // descending importance; stable on ties

  const ImportanceEntry* find(const std::string& feature) const;
};

// Per split, n_node * (impurity - weighted child impurity), summed per feature
// over all trees and normalized to total 1 (all-zero when nothing splits).
// Every model feature is listed, zeros included.
// ConfigError(UntrainedModel/UnsupportedModel).
ImportanceReport impurity_importance(const Tree& t);
ImportanceReport impurity_importance(const Forest& f);
ImportanceReport impurity_importance(const Gbt& g);
ImportanceReport impurity_importance(const Model& m);

// Printed-arithmetic importance evaluator: node importances
// n_j = w_j*c_j - sum over children of w_k*c_k for feature nodes, normalized
// by their total. Contributions c are supplied, not derived. Leaves carry an
// empty feature name. DataError(BadNodeRef/CyclicStructure).
struct EqA2Node {
  std::string feature;
  double w = 0.0;
  double c = 0.0;
  std::vector<int> children;
};
ImportanceReport eqA2_node_arithmetic(const std::vector<EqA2Node>& nodes);

// Mean metric degradation over n_repeats shuffles of each column, shuffled
// with a per-(seed, feature, repeat) stream. Supports Metric::auc and
// Metric::accuracy; ConfigError(MetricUndefined/BadParams).
ImportanceReport permutation_importance(const Model& m, const FeatureMatrix& fm, Metric metric,
                                        int n_repeats, uint64_t seed);

enum class PdMode {
  mean_probability,  // average predicted P(yes)
  label_proportion,  // share of rows predicted Yes at threshold 0.5
};

struct PdPoint {
  std::string label;
  double pd = 0.0;
};

struct PDSeries {
  std::string feature;
  PdMode mode = PdMode::mean_probability;
  size_t n_background = 0;
  std::vector<PdPoint> points;
};

// Forces `feature` to each value in every background row and averages the
// model output. `feature` may name a raw column (categorical labels or
// numeric literals as values) or a one-hot family of <feature>_<label>
// columns, set one-of-K. Empty `values` enumerates the vocabulary
// (categorical), the family labels (one-hot), or the sorted distinct values
// (numeric). DataError(UnknownFeature/UnknownLabel/EmptyBackground).
PDSeries partial_dependence(const Model& m, const Dataset& background, const std::string& feature,
                            std::vector<std::string> values = {},
                            PdMode mode = PdMode::mean_probability);

// Aggregation of importance entries named <prefix><T>_lag<L>[_bin...] into a
// (timescale, lag) grid; unrelated entries are ignored.
struct SpeiLagCell {
  int timescale = 0;
  int lag = 0;
  double importance = 0.0;
};
std::vector<SpeiLagCell> spei_lag_grid(const ImportanceReport& report,
                                       const std::string& prefix = "spei");

std::string importance_csv(const ImportanceReport& report);
std::string pd_csv(const PDSeries& series);
std::string spei_lag_grid_csv(const std::vector<SpeiLagCell>& grid);

}  // namespace treeclime
