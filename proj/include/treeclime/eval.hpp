#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "treeclime/dataset.hpp"
#include "treeclime/model.hpp"
#include "treeclime/preprocess.hpp"

namespace treeclime {

struct ConfusionMatrix {
  long long tp = 0, fp = 0, fn = 0, tn = 0;
  long long total() const { return tp + fp + fn + tn; }
};

// Predicted Yes iff prob >= threshold (ties count as positive).
ConfusionMatrix confusion_matrix(const std::vector<double>& y, const std::vector<double>& probs,
                                 double threshold = 0.5);

struct ClassificationMetrics {
  double accuracy = 0, precision = 0, recall = 0;  // NaN when the denominator is zero
};
ClassificationMetrics classification_metrics(const ConfusionMatrix& cm);

// P(random positive outranks a random negative), ties credited 1/2
// (rank-sum formulation). DataError(SingleClass/LengthMismatch).
double roc_auc(const std::vector<double>& y, const std::vector<double>& probs);

struct FoldIndices {
  std::vector<int> train, test;  // ascending; train = complement of test
};

// Deals indices to k folds round-robin: in natural order without a seed, in a
// seed-shuffled order with one. With stratify_on, each class is dealt
// separately under a single continuing fold cursor, so per-fold class counts
// differ by at most one. ConfigError(BadFoldCount/KTooLarge),
// DataError(LengthMismatch).
std::vector<FoldIndices> kfold_split(size_t n, int k, std::optional<uint64_t> seed,
                                     const std::vector<double>* stratify_on = nullptr);

enum class Metric { accuracy, precision, recall, auc };
std::string metric_name(Metric m);  // Accuracy / Precision / Recall / AUC

struct FoldRecord {
  int fold = 0;
  double accuracy = 0, precision = 0, recall = 0, auc = 0;
};

struct FoldResults {
  int k = 0;
  std::vector<FoldRecord> folds;

  std::vector<double> values(Metric m) const;
  double mean(Metric m) const;  // NaN entries excluded; NaN when none are valid
};

// fold,accuracy,precision,recall,auc rows; undefined metrics print as NA.
std::string folds_csv(const FoldResults& r);
// {"k": ..., "mean": {"accuracy": ..., ...}} (undefined means serialize null)
nlohmann::json summary_json(const FoldResults& r);

// Stratified k-fold on the target. Per fold: preprocessing (when given) is
// fitted on the training part only, both parts transformed, the learner fitted
// with a fold-derived seed, and the four metrics computed on the held-out part
// at threshold 0.5. Folds depend only on (n rows, target, k, seed), so results
// for different learners or feature subsets pair fold-by-fold. Folds may be
// evaluated in parallel (jobs); results are identical for any jobs value.
FoldResults cross_validate(const LearnerSpec& spec, const Dataset& ds, int k,
                           std::optional<uint64_t> seed, const PrepPlan* prep = nullptr,
                           int jobs = 1);

struct PairedTTest {
  double t = 0;
  double p = 1;
  int df = 0;
  std::string direction;  // "a>b" / "a<b" / "a~b" at the 0.05 level
};

// Paired two-sided Student t on d = a - b. All-zero differences give
// t = 0, p = 1; zero spread around a nonzero mean is
// DataError(DegenerateDifferences).
PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace treeclime
