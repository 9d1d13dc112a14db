#pragma once

#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/dataset.hpp"

namespace treeclime {

// Interval scheme over a numeric column. Intervals are half-open [e_i, e_i+1)
// with the last interval additionally closed above; the outermost edges may be
// -inf/+inf (open-ended outer bins), interior edges are finite and strictly
// ascending. labels has one entry per interval.
struct BinEdges {
  std::vector<double> edges;
  std::vector<std::string> labels;

  void validate() const;  // DataError(BadEdges)
  size_t n_bins() const { return labels.size(); }

  // Interval index for value v; DataError(OutOfRange) outside [first, last].
  int find_bin(double v) const;
  // Like find_bin but clamps to the outer intervals instead of erroring;
  // used when applying fold-fitted edges to unseen rows.
  int find_bin_clamped(double v) const;
};

// Equal-width scheme: step = (max - min) / k over the finite values; labels
// bin1..bink. DataError(EmptyInput) with no finite values,
// DataError(ConstantColumn) when max equals min.
BinEdges discretize_equal_width(const std::vector<double>& values, int k);

// Equal-frequency initial_k bins merged down to final_k by repeatedly fusing
// the adjacent pair whose point-biserial correlations with the binary target
// are closest (leftmost pair on ties), recomputing after each merge. Outer
// edges are +-inf. DataError(TooFewDistinctValues) when the data cannot
// support final_k nonempty bins; DataError(TargetNotBinary).
BinEdges supervised_bin_merge(const std::vector<double>& values,
                              const std::vector<double>& target, int initial_k, int final_k);

// Replaces a categorical column with one binary column per vocabulary label,
// named <column>_<label>, in vocabulary order. A missing source value yields
// missing in every generated column. DataError(UnknownColumn/WrongRole).
Dataset one_hot(Dataset ds, const std::string& column);

// Maps a numeric column through edges into interval labels, then one-hot
// encodes the result (columns <column>_<label>). DataError(OutOfRange) for
// values outside the edge span.
Dataset binarize_numeric(Dataset ds, const std::string& column, const BinEdges& edges);

// Declarative preprocessing plan, fitted per training fold.
struct PrepPlan {
  std::vector<std::string> drop;            // join keys and other non-features
  std::vector<std::string> one_hot_cols;    // categorical -> one-hot
  std::map<std::string, BinEdges> fixed_bins;  // predeclared edges (e.g. age groups)
  struct Supervised {
    int initial_k = 20;
    int final_k = 4;
  };
  std::map<std::string, Supervised> supervised_bins;
  int spei_bins = 7;  // equal-width bins for spei* columns; 0 leaves them numeric
  std::string spei_prefix = "spei";
};

// Fitted, serializable column transforms. apply() reproduces the training
// schema on any dataset with the same raw columns: one-hot vocabularies are
// the train-fold-observed labels (unseen labels encode as all zeros), and
// fitted edges clamp out-of-span values into the outer bins.
struct Preprocessor {
  struct Step {
    enum class Kind { drop, one_hot, bin };
    Kind kind;
    std::string column;
    std::vector<std::string> vocab;  // one_hot
    BinEdges edges;                  // bin
  };
  std::vector<Step> steps;

  Dataset apply(const Dataset& ds) const;
  nlohmann::json to_json() const;
  static Preprocessor from_json(const nlohmann::json& j);
};

Preprocessor fit_preprocessor(const PrepPlan& plan, const Dataset& train);

}  // namespace treeclime
