#include "treeclime/eval.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <thread>

#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/rng.hpp"
#include "treeclime/stats.hpp"

namespace treeclime {

namespace {

constexpr double kNan = std::numeric_limits<double>::quiet_NaN();

double pick(const FoldRecord& f, Metric m) {
  switch (m) {
    case Metric::accuracy: return f.accuracy;
    case Metric::precision: return f.precision;
    case Metric::recall: return f.recall;
    case Metric::auc: return f.auc;
  }
  fail_config("UnknownMetric", "unmapped metric value");
}

}  // namespace

ConfusionMatrix confusion_matrix(const std::vector<double>& y, const std::vector<double>& probs,
                                 double threshold) {
  if (y.size() != probs.size())
    fail_data("LengthMismatch", "labels and probabilities differ in length");
  ConfusionMatrix cm;
  for (size_t i = 0; i < y.size(); ++i) {
    const bool pred = probs[i] >= threshold;
    if (y[i] != 0.0) {
      ++(pred ? cm.tp : cm.fn);
    } else {
      ++(pred ? cm.fp : cm.tn);
    }
  }
  return cm;
}

ClassificationMetrics classification_metrics(const ConfusionMatrix& cm) {
  const auto ratio = [](long long num, long long den) {
    return den == 0 ? kNan : static_cast<double>(num) / static_cast<double>(den);
  };
  ClassificationMetrics m;
  m.accuracy = ratio(cm.tp + cm.tn, cm.total());
  m.precision = ratio(cm.tp, cm.tp + cm.fp);
  m.recall = ratio(cm.tp, cm.tp + cm.fn);
  return m;
}

double roc_auc(const std::vector<double>& y, const std::vector<double>& probs) {
  if (y.size() != probs.size())
    fail_data("LengthMismatch", "labels and probabilities differ in length");
  const size_t n = y.size();
  std::vector<size_t> order(n);
  std::iota(order.begin(), order.end(), size_t{0});
  std::sort(order.begin(), order.end(),
            [&](size_t a, size_t b) { return probs[a] < probs[b]; });

  size_t n_pos = 0;
  for (const double v : y) n_pos += v != 0.0 ? 1 : 0;
  const size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) fail_data("SingleClass", "roc auc needs both classes present");

  // Sum of average ranks over the positives (ranks are 1-based; ties share
  // the mean rank of their group).
  double rank_sum = 0.0;
  size_t i = 0;
  while (i < n) {
    size_t j = i;
    while (j < n && probs[order[j]] == probs[order[i]]) ++j;
    const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
    for (size_t t = i; t < j; ++t)
      if (y[order[t]] != 0.0) rank_sum += avg_rank;
    i = j;
  }
  const double np = static_cast<double>(n_pos);
  return (rank_sum - 0.5 * np * (np + 1.0)) / (np * static_cast<double>(n_neg));
}

std::vector<FoldIndices> kfold_split(size_t n, int k, std::optional<uint64_t> seed,
                                     const std::vector<double>* stratify_on) {
  if (k < 2) fail_config("BadFoldCount", "k must be at least 2, got " + std::to_string(k));
  if (static_cast<size_t>(k) > n)
    fail_config("KTooLarge",
                "k=" + std::to_string(k) + " exceeds the " + std::to_string(n) + " rows");
  if (stratify_on && stratify_on->size() != n)
    fail_data("LengthMismatch", "stratification labels differ from n in length");

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  if (seed) {
    Rng rng(mix_seed(*seed, 0x5B17));
    rng.shuffle(order);
  }

  std::vector<std::vector<int>> test_sets(static_cast<size_t>(k));
  if (stratify_on) {
    // Deal one class at a time; the fold cursor carries across classes so
    // total fold sizes stay within one of each other.
    size_t cursor = 0;
    for (const int cls : {0, 1}) {
      for (const int idx : order) {
        const bool pos = (*stratify_on)[static_cast<size_t>(idx)] != 0.0;
        if (pos != (cls == 1)) continue;
        test_sets[cursor % static_cast<size_t>(k)].push_back(idx);
        ++cursor;
      }
    }
  } else {
    for (size_t j = 0; j < n; ++j) test_sets[j % static_cast<size_t>(k)].push_back(order[j]);
  }

  std::vector<FoldIndices> folds(static_cast<size_t>(k));
  for (size_t f = 0; f < folds.size(); ++f) {
    auto& test = test_sets[f];
    std::sort(test.begin(), test.end());
    folds[f].train.reserve(n - test.size());
    size_t p = 0;
    for (int i = 0; i < static_cast<int>(n); ++i) {
      if (p < test.size() && test[p] == i) {
        ++p;
        continue;
      }
      folds[f].train.push_back(i);
    }
    folds[f].test = std::move(test);
  }
  return folds;
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::accuracy: return "Accuracy";
    case Metric::precision: return "Precision";
    case Metric::recall: return "Recall";
    case Metric::auc: return "AUC";
  }
  fail_config("UnknownMetric", "unmapped metric value");
}

std::vector<double> FoldResults::values(Metric m) const {
  std::vector<double> out;
  out.reserve(folds.size());
  for (const auto& f : folds) out.push_back(pick(f, m));
  return out;
}

double FoldResults::mean(Metric m) const {
  double sum = 0.0;
  int count = 0;
  for (const auto& f : folds) {
    const double v = pick(f, m);
    if (std::isnan(v)) continue;
    sum += v;
    ++count;
  }
  return count == 0 ? kNan : sum / count;
}

namespace {

std::string metric_cell(double v) { return std::isnan(v) ? "NA" : format_double(v); }

}  // namespace

std::string folds_csv(const FoldResults& r) {
  std::string out = "fold,accuracy,precision,recall,auc\n";
  for (const auto& f : r.folds) {
    out += std::to_string(f.fold);
    out += ',' + metric_cell(f.accuracy);
    out += ',' + metric_cell(f.precision);
    out += ',' + metric_cell(f.recall);
    out += ',' + metric_cell(f.auc);
    out += '\n';
  }
  return out;
}

nlohmann::json summary_json(const FoldResults& r) {
  nlohmann::json means;
  const std::pair<Metric, const char*> keys[] = {{Metric::accuracy, "accuracy"},
                                                 {Metric::precision, "precision"},
                                                 {Metric::recall, "recall"},
                                                 {Metric::auc, "auc"}};
  for (const auto& [m, key] : keys) {
    const double v = r.mean(m);
    means[key] = std::isnan(v) ? nlohmann::json() : nlohmann::json(v);
  }
  return {{"k", r.k}, {"mean", means}};
}

FoldResults cross_validate(const LearnerSpec& spec, const Dataset& ds, int k,
                           std::optional<uint64_t> seed, const PrepPlan* prep, int jobs) {
  if (jobs < 1) fail_config("BadParams", "jobs must be at least 1");
  const Column* target = nullptr;
  for (size_t c = 0; c < ds.n_cols(); ++c) {
    if (ds.col(c).role == Role::target) target = &ds.col(c);
  }
  if (!target) fail_data("MissingTarget", "dataset has no target column");
  for (const double v : target->values)
    if (is_missing(v))
      fail_data("MissingValue", "target column '" + target->name + "' has missing entries");

  const auto folds = kfold_split(ds.n_rows(), k, seed, &target->values);
  const uint64_t base = seed.value_or(0);

  FoldResults out;
  out.k = k;
  out.folds.resize(static_cast<size_t>(k));

  auto run_fold = [&](size_t f) {
    Dataset train = ds.select_rows(folds[f].train);
    Dataset test = ds.select_rows(folds[f].test);
    if (prep) {
      const auto fitted = fit_preprocessor(*prep, train);
      train = fitted.apply(train);
      test = fitted.apply(test);
    }
    const auto train_fm = FeatureMatrix::from(train);
    const auto test_fm = FeatureMatrix::from(test);
    const auto model = fit_model(spec, train_fm, mix_seed(base, 0xCF0D, f));
    const auto probs = predict_probs(model, test_fm);
    const auto metrics = classification_metrics(confusion_matrix(test_fm.y, probs));
    double auc = kNan;
    try {
      auc = roc_auc(test_fm.y, probs);
    } catch (const DataError&) {
      // single-class test fold: AUC undefined, excluded from means
    }
    out.folds[f] = {static_cast<int>(f), metrics.accuracy, metrics.precision, metrics.recall,
                    auc};
  };

  const size_t n_folds = out.folds.size();
  if (jobs == 1) {
    for (size_t f = 0; f < n_folds; ++f) run_fold(f);
  } else {
    std::atomic<size_t> next{0};
    std::exception_ptr err;
    std::mutex err_mu;
    auto worker = [&] {
      while (true) {
        const size_t f = next.fetch_add(1);
        if (f >= n_folds) return;
        try {
          run_fold(f);
        } catch (...) {
          const std::lock_guard<std::mutex> lock(err_mu);
          if (!err) err = std::current_exception();
        }
      }
    };
    std::vector<std::thread> pool;
    const size_t workers = std::min<size_t>(static_cast<size_t>(jobs), n_folds);
    pool.reserve(workers);
    for (size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
    if (err) std::rethrow_exception(err);
  }
  return out;
}

PairedTTest paired_t_test(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) fail_data("LengthMismatch", "paired samples differ in length");
  const size_t n = a.size();
  if (n < 2) fail_data("TooFewSamples", "paired t-test needs at least 2 pairs");

  std::vector<double> d(n);
  for (size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];

  PairedTTest r;
  r.df = static_cast<int>(n) - 1;
  if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) {
    r.t = 0.0;
    r.p = 1.0;
    r.direction = "a~b";
    return r;
  }
  const double sd = sample_sd(d);
  if (sd == 0.0)
    fail_data("DegenerateDifferences", "constant nonzero difference has no t statistic");
  r.t = mean(d) / (sd / std::sqrt(static_cast<double>(n)));
  r.p = student_t_two_sided_p(r.t, static_cast<double>(r.df));
  r.direction = r.p < 0.05 ? (r.t > 0 ? "a>b" : "a<b") : "a~b";
  return r;
}

}  // namespace treeclime
