#include "treeclime/preprocess.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <nlohmann/json.hpp>

#include "treeclime/csv.hpp"

namespace treeclime {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::string edge_str(double e) { return format_double(e); }

double edge_parse(const std::string& s) {
  if (s == "inf") return kInf;
  if (s == "-inf") return -kInf;
  return std::stod(s);
}

}  // namespace

void BinEdges::validate() const {
  if (edges.size() < 2 || labels.size() + 1 != edges.size()) {
    fail_data("BadEdges", "need k+1 ascending edges and k labels");
  }
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    if (!(edges[i] < edges[i + 1])) {
      fail_data("BadEdges", "edges must be strictly ascending: " + edge_str(edges[i]) +
                                " !< " + edge_str(edges[i + 1]));
    }
  }
  for (size_t i = 1; i + 1 < edges.size(); ++i) {
    if (!std::isfinite(edges[i])) fail_data("BadEdges", "interior edges must be finite");
  }
}

int BinEdges::find_bin(double v) const {
  if (v < edges.front()) {
    fail_data("OutOfRange", format_double(v) + " below first edge " + edge_str(edges.front()));
  }
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    if (v < edges[i + 1]) return static_cast<int>(i);
  }
  if (v == edges.back()) return static_cast<int>(labels.size()) - 1;  // last interval closed
  fail_data("OutOfRange", format_double(v) + " above last edge " + edge_str(edges.back()));
}

int BinEdges::find_bin_clamped(double v) const {
  if (v < edges.front()) return 0;
  for (size_t i = 0; i + 1 < edges.size(); ++i) {
    if (v < edges[i + 1]) return static_cast<int>(i);
  }
  return static_cast<int>(labels.size()) - 1;
}

BinEdges discretize_equal_width(const std::vector<double>& values, int k) {
  if (k < 1) fail_config("BadBinCount", "bin count must be >= 1, got " + std::to_string(k));
  double lo = kInf, hi = -kInf;
  size_t n_finite = 0;
  for (double v : values) {
    if (is_missing(v)) continue;
    ++n_finite;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  if (n_finite == 0) fail_data("EmptyInput", "no finite values to discretize");
  if (lo == hi) fail_data("ConstantColumn", "max equals min (" + format_double(lo) + ")");
  const double step = (hi - lo) / static_cast<double>(k);
  BinEdges b;
  b.edges.resize(static_cast<size_t>(k) + 1);
  for (int j = 0; j <= k; ++j) b.edges[static_cast<size_t>(j)] = lo + step * j;
  b.edges.back() = hi;  // exact upper edge, immune to accumulation drift
  b.labels.resize(static_cast<size_t>(k));
  for (int j = 0; j < k; ++j) b.labels[static_cast<size_t>(j)] = "bin" + std::to_string(j + 1);
  b.validate();
  return b;
}

namespace {

// Point-biserial correlation of a bin-membership indicator with a binary
// target, from counts: r = sxy / sqrt(sxx * syy).
double bin_correlation(double n, double n_bin, double pos_bin, double pos_total) {
  const double sxx = n_bin - n_bin * n_bin / n;
  const double syy = pos_total - pos_total * pos_total / n;
  if (sxx <= 0.0 || syy <= 0.0) return 0.0;
  const double sxy = pos_bin - n_bin * pos_total / n;
  return sxy / std::sqrt(sxx * syy);
}

std::string interval_label(double lo, double hi) {
  auto fmt = [](double e) { return std::isfinite(e) ? format_double(e) : std::string("inf."); };
  return fmt(lo) + "-" + fmt(hi);
}

}  // namespace

BinEdges supervised_bin_merge(const std::vector<double>& values,
                              const std::vector<double>& target, int initial_k, int final_k) {
  if (values.size() != target.size()) {
    fail_data("LengthMismatch", "values and target differ in length");
  }
  if (final_k < 1 || initial_k < final_k) {
    fail_config("BadBinCount", "need initial_k >= final_k >= 1");
  }
  std::vector<double> vs;
  std::vector<double> ys;
  vs.reserve(values.size());
  for (size_t i = 0; i < values.size(); ++i) {
    if (is_missing(values[i])) continue;
    if (target[i] != 0.0 && target[i] != 1.0) {
      fail_data("TargetNotBinary", "target value " + format_double(target[i]));
    }
    vs.push_back(values[i]);
    ys.push_back(target[i]);
  }
  if (vs.empty()) fail_data("EmptyInput", "no finite values to bin");

  std::vector<double> sorted = vs;
  std::sort(sorted.begin(), sorted.end());
  const size_t n = sorted.size();

  // Equal-frequency interior edges at the i/initial_k quantiles, deduped and
  // stripped of edges equal to the minimum so every bin is nonempty.
  std::vector<double> interior;
  for (int i = 1; i < initial_k; ++i) {
    const double e = sorted[n * static_cast<size_t>(i) / static_cast<size_t>(initial_k)];
    if (e > sorted.front() && (interior.empty() || e > interior.back())) interior.push_back(e);
  }
  if (static_cast<int>(interior.size()) + 1 < final_k) {
    fail_data("TooFewDistinctValues", "cannot form " + std::to_string(final_k) +
                                          " nonempty bins from the observed values");
  }

  std::vector<double> edges;
  edges.push_back(-kInf);
  edges.insert(edges.end(), interior.begin(), interior.end());
  edges.push_back(kInf);

  // Per-bin counts under the current edge set.
  auto recount = [&](std::vector<double>& n_bin, std::vector<double>& pos_bin) {
    const size_t k = edges.size() - 1;
    n_bin.assign(k, 0.0);
    pos_bin.assign(k, 0.0);
    for (size_t i = 0; i < vs.size(); ++i) {
      size_t b = 0;
      while (b + 2 < edges.size() && vs[i] >= edges[b + 1]) ++b;
      n_bin[b] += 1.0;
      pos_bin[b] += ys[i];
    }
  };

  double pos_total = 0.0;
  for (double y : ys) pos_total += y;

  std::vector<double> n_bin, pos_bin;
  while (edges.size() - 1 > static_cast<size_t>(final_k)) {
    recount(n_bin, pos_bin);
    const size_t k = edges.size() - 1;
    std::vector<double> r(k);
    for (size_t b = 0; b < k; ++b) {
      r[b] = bin_correlation(static_cast<double>(n), n_bin[b], pos_bin[b], pos_total);
    }
    size_t best = 0;
    double best_gap = kInf;
    for (size_t b = 0; b + 1 < k; ++b) {
      const double gap = std::fabs(r[b] - r[b + 1]);
      if (gap < best_gap) {
        best_gap = gap;
        best = b;
      }
    }
    edges.erase(edges.begin() + static_cast<long>(best) + 1);
  }

  BinEdges out;
  out.edges = edges;
  out.labels.resize(edges.size() - 1);
  for (size_t b = 0; b + 1 < edges.size(); ++b) {
    out.labels[b] = interval_label(edges[b], edges[b + 1]);
  }
  out.validate();
  return out;
}

namespace {

// Expand a categorical column (index values + vocabulary) into one binary
// column per vocab entry. Missing propagates to every generated column.
std::vector<Column> expand_one_hot(const Column& src, const std::vector<std::string>& vocab) {
  std::vector<Column> out;
  out.reserve(vocab.size());
  // Map source label index -> position in vocab (unseen -> -1).
  std::vector<int> pos(src.labels.size(), -1);
  for (size_t i = 0; i < src.labels.size(); ++i) {
    const auto hit = std::find(vocab.begin(), vocab.end(), src.labels[i]);
    if (hit != vocab.end()) pos[i] = static_cast<int>(hit - vocab.begin());
  }
  for (const auto& label : vocab) {
    Column c;
    c.name = src.name + "_" + label;
    c.role = Role::binary;
    c.values.assign(src.values.size(), 0.0);
    out.push_back(std::move(c));
  }
  for (size_t r = 0; r < src.values.size(); ++r) {
    if (is_missing(src.values[r])) {
      for (auto& c : out) c.values[r] = kMissing;
    } else {
      const int p = pos[static_cast<size_t>(src.values[r])];
      if (p >= 0) out[static_cast<size_t>(p)].values[r] = 1.0;
    }
  }
  return out;
}

Column bin_to_categorical(const Column& src, const BinEdges& edges, bool clamp) {
  Column cat;
  cat.name = src.name;
  cat.role = Role::categorical;
  cat.labels = edges.labels;
  cat.values.resize(src.values.size());
  for (size_t r = 0; r < src.values.size(); ++r) {
    const double v = src.values[r];
    if (is_missing(v)) {
      cat.values[r] = kMissing;
    } else {
      cat.values[r] = clamp ? edges.find_bin_clamped(v) : edges.find_bin(v);
    }
  }
  return cat;
}

}  // namespace

Dataset one_hot(Dataset ds, const std::string& column) {
  const int idx = ds.column_index(column);
  if (idx < 0) fail_data("UnknownColumn", "no column named '" + column + "'");
  const Column& src = ds.col(static_cast<size_t>(idx));
  if (src.role != Role::categorical) {
    fail_data("WrongRole", "one_hot needs a categorical column, '" + column + "' is " +
                               role_name(src.role));
  }
  ds.replace_column(column, expand_one_hot(src, src.labels));
  return ds;
}

Dataset binarize_numeric(Dataset ds, const std::string& column, const BinEdges& edges) {
  edges.validate();
  const int idx = ds.column_index(column);
  if (idx < 0) fail_data("UnknownColumn", "no column named '" + column + "'");
  const Column& src = ds.col(static_cast<size_t>(idx));
  if (src.role != Role::numeric) {
    fail_data("WrongRole", "binarize_numeric needs a numeric column, '" + column + "' is " +
                               role_name(src.role));
  }
  const Column cat = bin_to_categorical(src, edges, /*clamp=*/false);
  ds.replace_column(column, expand_one_hot(cat, cat.labels));
  return ds;
}

Preprocessor fit_preprocessor(const PrepPlan& plan, const Dataset& train) {
  Preprocessor prep;
  auto in = [](const std::vector<std::string>& v, const std::string& s) {
    return std::find(v.begin(), v.end(), s) != v.end();
  };
  for (const auto& c : train.columns()) {
    Preprocessor::Step step;
    step.column = c.name;
    if (in(plan.drop, c.name)) {
      step.kind = Preprocessor::Step::Kind::drop;
      prep.steps.push_back(std::move(step));
      continue;
    }
    if (c.role == Role::categorical && in(plan.one_hot_cols, c.name)) {
      step.kind = Preprocessor::Step::Kind::one_hot;
      // Vocabulary = labels observed in the training fold, first-encounter order.
      std::vector<bool> added(c.labels.size(), false);
      for (double v : c.values) {
        if (is_missing(v)) continue;
        const auto i = static_cast<size_t>(v);
        if (!added[i]) {
          added[i] = true;
          step.vocab.push_back(c.labels[i]);
        }
      }
      prep.steps.push_back(std::move(step));
      continue;
    }
    if (auto it = plan.fixed_bins.find(c.name); it != plan.fixed_bins.end()) {
      step.kind = Preprocessor::Step::Kind::bin;
      step.edges = it->second;
      step.edges.validate();
      prep.steps.push_back(std::move(step));
      continue;
    }
    if (auto it = plan.supervised_bins.find(c.name); it != plan.supervised_bins.end()) {
      const int t = train.target_index();
      if (t < 0) fail_data("MissingColumn", "supervised binning requires a target column");
      step.kind = Preprocessor::Step::Kind::bin;
      step.edges = supervised_bin_merge(c.values, train.col(static_cast<size_t>(t)).values,
                                        it->second.initial_k, it->second.final_k);
      prep.steps.push_back(std::move(step));
      continue;
    }
    if (c.role == Role::numeric && plan.spei_bins >= 1 &&
        c.name.rfind(plan.spei_prefix, 0) == 0) {
      step.kind = Preprocessor::Step::Kind::bin;
      step.edges = discretize_equal_width(c.values, plan.spei_bins);
      prep.steps.push_back(std::move(step));
      continue;
    }
    // Untouched columns have no step and are copied through by apply().
  }
  return prep;
}

Dataset Preprocessor::apply(const Dataset& ds) const {
  Dataset out = Dataset::with_rows(ds.n_rows());
  for (const auto& c : ds.columns()) {
    const Step* step = nullptr;
    for (const auto& s : steps) {
      if (s.column == c.name) {
        step = &s;
        break;
      }
    }
    if (step == nullptr) {
      out.add_column(c);
      continue;
    }
    switch (step->kind) {
      case Step::Kind::drop:
        break;
      case Step::Kind::one_hot: {
        if (c.role != Role::categorical) {
          fail_data("WrongRole", "fitted one_hot expects categorical '" + c.name + "'");
        }
        for (auto& nc : expand_one_hot(c, step->vocab)) out.add_column(std::move(nc));
        break;
      }
      case Step::Kind::bin: {
        if (c.role != Role::numeric) {
          fail_data("WrongRole", "fitted binning expects numeric '" + c.name + "'");
        }
        const Column cat = bin_to_categorical(c, step->edges, /*clamp=*/true);
        for (auto& nc : expand_one_hot(cat, cat.labels)) out.add_column(std::move(nc));
        break;
      }
    }
  }
  return out;
}

nlohmann::json Preprocessor::to_json() const {
  nlohmann::json j;
  j["steps"] = nlohmann::json::array();
  for (const auto& s : steps) {
    nlohmann::json js;
    js["column"] = s.column;
    switch (s.kind) {
      case Step::Kind::drop:
        js["kind"] = "drop";
        break;
      case Step::Kind::one_hot:
        js["kind"] = "one_hot";
        js["labels"] = s.vocab;
        break;
      case Step::Kind::bin: {
        js["kind"] = "bin";
        std::vector<std::string> es;
        for (double e : s.edges.edges) es.push_back(edge_str(e));
        js["edges"] = es;
        js["labels"] = s.edges.labels;
        break;
      }
    }
    j["steps"].push_back(std::move(js));
  }
  return j;
}

Preprocessor Preprocessor::from_json(const nlohmann::json& j) {
  Preprocessor prep;
  for (const auto& js : j.at("steps")) {
    Step s;
    s.column = js.at("column").get<std::string>();
    const auto kind = js.at("kind").get<std::string>();
    if (kind == "drop") {
      s.kind = Step::Kind::drop;
    } else if (kind == "one_hot") {
      s.kind = Step::Kind::one_hot;
      s.vocab = js.at("labels").get<std::vector<std::string>>();
    } else if (kind == "bin") {
      s.kind = Step::Kind::bin;
      for (const auto& e : js.at("edges")) s.edges.edges.push_back(edge_parse(e.get<std::string>()));
      s.edges.labels = js.at("labels").get<std::vector<std::string>>();
      s.edges.validate();
    } else {
      fail_config("BadManifest", "unknown preprocessing step kind '" + kind + "'");
    }
    prep.steps.push_back(std::move(s));
  }
  return prep;
}

}  // namespace treeclime
