#include "treeclime/interpret.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <map>
#include <unordered_map>

#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/rng.hpp"

namespace treeclime {

namespace {

ImportanceReport sorted_report(std::string method, std::vector<ImportanceEntry> entries) {
  ImportanceReport rep;
  rep.method = std::move(method);
  rep.entries = std::move(entries);
  std::stable_sort(rep.entries.begin(), rep.entries.end(),
                   [](const ImportanceEntry& a, const ImportanceEntry& b) {
                     return a.importance > b.importance;
                   });
  return rep;
}

ImportanceReport gain_report(const std::vector<std::string>& features,
                             const std::vector<double>& raw) {
  double total = 0.0;
  for (const double v : raw) total += v;
  std::vector<ImportanceEntry> entries;
  entries.reserve(features.size());
  for (size_t i = 0; i < features.size(); ++i) {
    entries.push_back({features[i], total > 0.0 ? raw[i] / total : 0.0, {}});
  }
  return sorted_report("impurity", std::move(entries));
}

void accumulate_gains(const Tree& t, std::vector<double>& raw) {
  for (const auto& node : t.nodes) {
    if (node.children.empty() || node.feature < 0) continue;
    raw[static_cast<size_t>(node.feature)] += node.gain;
  }
}

}  // namespace

const ImportanceEntry* ImportanceReport::find(const std::string& feature) const {
  for (const auto& e : entries) {
    if (e.feature == feature) return &e;
  }
  return nullptr;
}

ImportanceReport impurity_importance(const Tree& t) {
  if (t.nodes.empty()) fail_config("UntrainedModel", "tree has no nodes");
  std::vector<double> raw(t.feature_names.size(), 0.0);
  accumulate_gains(t, raw);
  return gain_report(t.feature_names, raw);
}

ImportanceReport impurity_importance(const Forest& f) {
  if (f.trees.empty()) fail_config("UntrainedModel", "forest has no trees");
  std::vector<double> raw(f.trees[0].feature_names.size(), 0.0);
  for (const auto& t : f.trees) accumulate_gains(t, raw);
  return gain_report(f.trees[0].feature_names, raw);
}

ImportanceReport impurity_importance(const Gbt& g) {
  if (g.stage_loss.empty()) fail_config("UntrainedModel", "boosted model was never fit");
  if (g.trees.empty()) return sorted_report("impurity", {});
  std::vector<double> raw(g.trees[0].feature_names.size(), 0.0);
  for (const auto& t : g.trees) accumulate_gains(t, raw);
  return gain_report(g.trees[0].feature_names, raw);
}

ImportanceReport impurity_importance(const Model& m) {
  if (std::holds_alternative<LogisticModel>(m)) {
    fail_config("UnsupportedModel", "impurity importance needs a tree-based model");
  }
  if (const auto* t = std::get_if<Tree>(&m)) return impurity_importance(*t);
  if (const auto* f = std::get_if<Forest>(&m)) return impurity_importance(*f);
  return impurity_importance(std::get<Gbt>(m));
}

ImportanceReport eqA2_node_arithmetic(const std::vector<EqA2Node>& nodes) {
  const int n = static_cast<int>(nodes.size());
  std::vector<int> indeg(nodes.size(), 0);
  for (const auto& node : nodes) {
    for (const int c : node.children) {
      if (c < 0 || c >= n) {
        fail_data("BadNodeRef", "child index " + std::to_string(c) + " is out of range");
      }
      if (++indeg[static_cast<size_t>(c)] > 1) {
        fail_data("CyclicStructure", "node " + std::to_string(c) + " has multiple parents");
      }
    }
  }
  std::vector<int> stack;
  std::vector<char> seen(nodes.size(), 0);
  for (int i = 0; i < n; ++i) {
    if (indeg[static_cast<size_t>(i)] == 0) stack.push_back(i);
  }
  int visited = 0;
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    seen[static_cast<size_t>(i)] = 1;
    ++visited;
    for (const int c : nodes[static_cast<size_t>(i)].children) stack.push_back(c);
  }
  if (visited != n) fail_data("CyclicStructure", "unreachable nodes form a cycle");

  std::vector<std::string> features;
  std::vector<double> raw;
  std::unordered_map<std::string, size_t> where;
  double total = 0.0;
  for (const auto& node : nodes) {
    if (node.feature.empty()) continue;
    double nj = node.w * node.c;
    for (const int c : node.children) {
      nj -= nodes[static_cast<size_t>(c)].w * nodes[static_cast<size_t>(c)].c;
    }
    const auto it = where.find(node.feature);
    if (it == where.end()) {
      where.emplace(node.feature, raw.size());
      features.push_back(node.feature);
      raw.push_back(nj);
    } else {
      raw[it->second] += nj;
    }
    total += nj;
  }
  std::vector<ImportanceEntry> entries;
  entries.reserve(features.size());
  for (size_t i = 0; i < features.size(); ++i) {
    entries.push_back({features[i], total != 0.0 ? raw[i] / total : 0.0, {}});
  }
  return sorted_report("paper_eqA2", std::move(entries));
}

ImportanceReport permutation_importance(const Model& m, const FeatureMatrix& fm, Metric metric,
                                        int n_repeats, uint64_t seed) {
  if (metric != Metric::auc && metric != Metric::accuracy) {
    fail_config("MetricUndefined",
                "permutation importance is defined for accuracy and auc, not " +
                    metric_name(metric));
  }
  if (n_repeats < 1) fail_config("BadParams", "n_repeats must be at least 1");
  if (fm.rows == 0) fail_data("EmptyDataset", "no rows to permute");

  const auto evaluate = [&](const FeatureMatrix& view) {
    const auto probs = predict_probs(m, view);
    if (metric == Metric::auc) return roc_auc(view.y, probs);
    return classification_metrics(confusion_matrix(view.y, probs)).accuracy;
  };

  FeatureMatrix work = fm;
  const double base = evaluate(work);
  std::vector<ImportanceEntry> entries;
  entries.reserve(fm.n_features());
  for (size_t f = 0; f < fm.n_features(); ++f) {
    const std::vector<double> original = work.cols[f];
    ImportanceEntry entry;
    entry.feature = fm.names[f];
    entry.repeats.reserve(static_cast<size_t>(n_repeats));
    double sum = 0.0;
    for (int r = 0; r < n_repeats; ++r) {
      Rng rng(mix_seed(seed, 0x9E12, f, r));
      work.cols[f] = original;
      rng.shuffle(work.cols[f]);
      const double delta = base - evaluate(work);
      entry.repeats.push_back(delta);
      sum += delta;
    }
    work.cols[f] = original;
    entry.importance = sum / n_repeats;
    entries.push_back(std::move(entry));
  }
  return sorted_report("permutation", std::move(entries));
}

PDSeries partial_dependence(const Model& m, const Dataset& background, const std::string& feature,
                            std::vector<std::string> values, PdMode mode) {
  if (background.n_rows() == 0) fail_data("EmptyBackground", "background dataset has no rows");

  int raw_idx = -1;
  for (size_t c = 0; c < background.n_cols(); ++c) {
    if (background.col(c).name == feature && background.col(c).role != Role::target) {
      raw_idx = static_cast<int>(c);
      break;
    }
  }
  std::vector<size_t> family;
  std::vector<std::string> family_labels;
  if (raw_idx < 0) {
    const std::string prefix = feature + "_";
    for (size_t c = 0; c < background.n_cols(); ++c) {
      const Column& col = background.col(c);
      if (col.role == Role::target) continue;
      if (col.name.size() > prefix.size() && col.name.compare(0, prefix.size(), prefix) == 0) {
        family.push_back(c);
        family_labels.push_back(col.name.substr(prefix.size()));
      }
    }
    if (family.empty()) {
      fail_data("UnknownFeature", "no column or one-hot family named '" + feature + "'");
    }
  }

  Dataset work = background;
  PDSeries series;
  series.feature = feature;
  series.mode = mode;
  series.n_background = background.n_rows();

  const auto mean_output = [&]() {
    const auto view = FeatureMatrix::from(work, /*require_target=*/false);
    const auto probs = predict_probs(m, view);
    double acc = 0.0;
    for (const double p : probs) {
      acc += mode == PdMode::label_proportion ? (p >= 0.5 ? 1.0 : 0.0) : p;
    }
    return acc / static_cast<double>(probs.size());
  };

  if (raw_idx >= 0) {
    const Column& col = background.col(static_cast<size_t>(raw_idx));
    if (col.role == Role::categorical) {
      if (values.empty()) values = col.labels;
      for (const auto& label : values) {
        const auto it = std::find(col.labels.begin(), col.labels.end(), label);
        if (it == col.labels.end()) {
          fail_data("UnknownLabel", "'" + label + "' is not a level of '" + feature + "'");
        }
        auto& cells = work.col_mut(static_cast<size_t>(raw_idx)).values;
        std::fill(cells.begin(), cells.end(), static_cast<double>(it - col.labels.begin()));
        series.points.push_back({label, mean_output()});
      }
    } else {
      if (values.empty()) {
        std::vector<double> distinct;
        for (const double v : col.values) {
          if (!std::isnan(v)) distinct.push_back(v);
        }
        std::sort(distinct.begin(), distinct.end());
        distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
        for (const double v : distinct) values.push_back(format_double(v));
      }
      for (const auto& text : values) {
        double parsed = 0.0;
        size_t used = 0;
        try {
          parsed = std::stod(text, &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (text.empty() || used != text.size()) {
          fail_data("UnknownLabel", "'" + text + "' is not a numeric value for '" + feature + "'");
        }
        auto& cells = work.col_mut(static_cast<size_t>(raw_idx)).values;
        std::fill(cells.begin(), cells.end(), parsed);
        series.points.push_back({text, mean_output()});
      }
    }
  } else {
    if (values.empty()) values = family_labels;
    for (const auto& label : values) {
      const auto it = std::find(family_labels.begin(), family_labels.end(), label);
      if (it == family_labels.end()) {
        fail_data("UnknownLabel", "'" + label + "' is not a member of family '" + feature + "'");
      }
      const size_t chosen = static_cast<size_t>(it - family_labels.begin());
      for (size_t j = 0; j < family.size(); ++j) {
        auto& cells = work.col_mut(family[j]).values;
        std::fill(cells.begin(), cells.end(), j == chosen ? 1.0 : 0.0);
      }
      series.points.push_back({label, mean_output()});
    }
  }
  return series;
}

std::vector<SpeiLagCell> spei_lag_grid(const ImportanceReport& report, const std::string& prefix) {
  std::map<std::pair<int, int>, double> acc;
  for (const auto& e : report.entries) {
    const std::string& f = e.feature;
    if (f.size() <= prefix.size() || f.compare(0, prefix.size(), prefix) != 0) continue;
    size_t i = prefix.size();
    size_t j = i;
    while (j < f.size() && std::isdigit(static_cast<unsigned char>(f[j]))) ++j;
    if (j == i || j >= f.size() || f[j] != '_') continue;
    const size_t lag_tag = j + 1;
    if (f.compare(lag_tag, 3, "lag") != 0) continue;
    size_t k = lag_tag + 3;
    size_t l = k;
    while (l < f.size() && std::isdigit(static_cast<unsigned char>(f[l]))) ++l;
    if (l == k) continue;
    if (l != f.size() && f[l] != '_') continue;
    const int timescale = std::stoi(f.substr(i, j - i));
    const int lag = std::stoi(f.substr(k, l - k));
    acc[{timescale, lag}] += e.importance;
  }
  std::vector<SpeiLagCell> grid;
  grid.reserve(acc.size());
  for (const auto& [key, importance] : acc) grid.push_back({key.first, key.second, importance});
  return grid;
}

std::string importance_csv(const ImportanceReport& report) {
  size_t width = 0;
  for (const auto& e : report.entries) width = std::max(width, e.repeats.size());
  std::string out = "feature,importance";
  for (size_t i = 1; i <= width; ++i) out += ",delta" + std::to_string(i);
  out += "\n";
  for (const auto& e : report.entries) {
    out += e.feature + "," + format_double(e.importance);
    for (size_t i = 0; i < width; ++i) {
      out += ",";
      if (i < e.repeats.size()) out += format_double(e.repeats[i]);
    }
    out += "\n";
  }
  return out;
}

std::string pd_csv(const PDSeries& series) {
  std::string out = "value,pd\n";
  for (const auto& p : series.points) {
    out += p.label + "," + format_double(p.pd) + "\n";
  }
  return out;
}

std::string spei_lag_grid_csv(const std::vector<SpeiLagCell>& grid) {
  std::string out = "timescale,lag,importance\n";
  for (const auto& cell : grid) {
    out += std::to_string(cell.timescale) + "," + std::to_string(cell.lag) + "," +
           format_double(cell.importance) + "\n";
  }
  return out;
}

}  // namespace treeclime
