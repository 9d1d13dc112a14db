#include "treeclime/tree.hpp"

#include <algorithm>
#include <cmath>

#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"

namespace treeclime {

double gini_impurity(double n_yes, double n_no) {
  const double n = n_yes + n_no;
  if (n <= 0.0) fail_data("EmptyNode", "impurity of an empty node is undefined");
  const double p = n_yes / n;
  return 1.0 - p * p - (1.0 - p) * (1.0 - p);
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Candidate {
  double score = kInf;  // lower is better; comparable within one node only
  int feature = -1;
  bool categorical = false;
  double threshold = 0.0;
  int majority = -1;  // child slot for missing rows
  double gain = 0.0;  // impurity decrease (classification) or boosting gain
};

struct Grower {
  const FeatureMatrix& fm;
  const TreeParams& params;
  std::vector<TreeNode>& nodes;
  // Classification targets; null for gradient mode.
  const std::vector<double>* y = nullptr;
  // Gradient mode.
  const std::vector<double>* grad = nullptr;
  const std::vector<double>* hess = nullptr;
  double l2_leaf = 0.0;

  double root_impurity = 0.0;
  size_t mtry = 0;
  Rng* rng = nullptr;
  SubsetSampler sampler = {};
  std::vector<size_t> feature_pool = {};  // candidate features when mtry == 0

  bool gradient_mode() const { return grad != nullptr; }

  Candidate scan_categorical(const std::vector<uint32_t>& rows, size_t f, double n_node,
                             double node_stat) const;
  Candidate scan_numeric(const std::vector<uint32_t>& rows, size_t f, double n_node,
                         double node_stat) const;
  int grow(const std::vector<uint32_t>& rows, int depth);
};

Candidate Grower::scan_categorical(const std::vector<uint32_t>& rows, size_t f, double n_node,
                                   double node_stat) const {
  Candidate cand;
  const size_t k = fm.labels[f].size();
  std::vector<double> tot(k, 0.0), a(k, 0.0), b(k, 0.0);  // a,b = yes/no or G/H
  double miss_n = 0, miss_a = 0, miss_b = 0;
  const auto& col = fm.cols[f];
  for (uint32_t r : rows) {
    const double v = col[r];
    double ra, rb;
    if (gradient_mode()) {
      ra = (*grad)[r];
      rb = (*hess)[r];
    } else {
      ra = (*y)[r];
      rb = 1.0 - ra;
    }
    if (is_missing(v)) {
      miss_n += 1;
      miss_a += ra;
      miss_b += rb;
      continue;
    }
    const auto id = static_cast<size_t>(v);
    tot[id] += 1;
    a[id] += ra;
    b[id] += rb;
  }
  size_t present = 0;
  size_t majority = 0;
  double best_tot = -1.0;
  for (size_t id = 0; id < k; ++id) {
    if (tot[id] == 0.0) continue;
    ++present;
    if (tot[id] > best_tot) {
      best_tot = tot[id];
      majority = id;
    }
  }
  if (present < 2) return cand;
  tot[majority] += miss_n;
  a[majority] += miss_a;
  b[majority] += miss_b;

  double score = 0.0, children_quad = 0.0;
  for (size_t id = 0; id < k; ++id) {
    if (tot[id] == 0.0) continue;
    if (tot[id] < params.min_node) return cand;
    if (gradient_mode()) {
      children_quad += a[id] * a[id] / (b[id] + l2_leaf);
    } else {
      score += tot[id] / n_node * gini_impurity(a[id], b[id]);
    }
  }
  cand.feature = static_cast<int>(f);
  cand.categorical = true;
  // Child slots follow label ids; the majority slot is resolved by the caller.
  cand.majority = static_cast<int>(majority);
  if (gradient_mode()) {
    cand.gain = 0.5 * (children_quad - node_stat);
    cand.score = -children_quad;
  } else {
    cand.score = score;
    cand.gain = node_stat - score;  // relative impurity decrease
  }
  return cand;
}

Candidate Grower::scan_numeric(const std::vector<uint32_t>& rows, size_t f, double n_node,
                               double node_stat) const {
  Candidate cand;
  const auto& col = fm.cols[f];
  struct Entry {
    double v, a, b;
  };
  std::vector<Entry> ent;
  ent.reserve(rows.size());
  double miss_n = 0, miss_a = 0, miss_b = 0;
  for (uint32_t r : rows) {
    const double v = col[r];
    double ra, rb;
    if (gradient_mode()) {
      ra = (*grad)[r];
      rb = (*hess)[r];
    } else {
      ra = (*y)[r];
      rb = 1.0 - ra;
    }
    if (is_missing(v)) {
      miss_n += 1;
      miss_a += ra;
      miss_b += rb;
      continue;
    }
    ent.push_back({v, ra, rb});
  }
  if (ent.size() < 2) return cand;
  std::sort(ent.begin(), ent.end(), [](const Entry& x, const Entry& y) { return x.v < y.v; });
  double tot_a = 0, tot_b = 0;
  for (const auto& e : ent) {
    tot_a += e.a;
    tot_b += e.b;
  }
  const double m = static_cast<double>(ent.size());
  double left_a = 0, left_b = 0;
  for (size_t i = 1; i < ent.size(); ++i) {
    left_a += ent[i - 1].a;
    left_b += ent[i - 1].b;
    if (ent[i].v == ent[i - 1].v) continue;
    const double nl = static_cast<double>(i);
    const double nr = m - nl;
    const int majority = nl >= nr ? 0 : 1;  // ties route left
    double la = left_a, lb = left_b, ra = tot_a - left_a, rb = tot_b - left_b;
    double fnl = nl, fnr = nr;
    if (majority == 0) {
      fnl += miss_n;
      la += miss_a;
      lb += miss_b;
    } else {
      fnr += miss_n;
      ra += miss_a;
      rb += miss_b;
    }
    if (fnl < params.min_node || fnr < params.min_node) continue;
    double score, gain;
    if (gradient_mode()) {
      const double quad = la * la / (lb + l2_leaf) + ra * ra / (rb + l2_leaf);
      score = -quad;
      gain = 0.5 * (quad - node_stat);
    } else {
      score = fnl / n_node * gini_impurity(la, lb) + fnr / n_node * gini_impurity(ra, rb);
      gain = node_stat - score;
    }
    if (score < cand.score) {
      cand.score = score;
      cand.feature = static_cast<int>(f);
      cand.categorical = false;
      cand.threshold = 0.5 * (ent[i - 1].v + ent[i].v);
      cand.majority = majority;
      cand.gain = gain;
    }
  }
  return cand;
}

int Grower::grow(const std::vector<uint32_t>& rows, int depth) {
  const int id = static_cast<int>(nodes.size());
  nodes.emplace_back();
  const double n_node = static_cast<double>(rows.size());
  double sum_a = 0, sum_b = 0;  // yes/no or G/H
  for (uint32_t r : rows) {
    if (gradient_mode()) {
      sum_a += (*grad)[r];
      sum_b += (*hess)[r];
    } else {
      sum_a += (*y)[r];
      sum_b += 1.0 - (*y)[r];
    }
  }
  {
    TreeNode& node = nodes[static_cast<size_t>(id)];
    node.n_rows = static_cast<int>(rows.size());
    if (gradient_mode()) {
      node.value = -sum_a / (sum_b + l2_leaf);
    } else {
      node.n_yes = sum_a;
      node.n_no = sum_b;
      node.impurity = gini_impurity(sum_a, sum_b);
      node.value = sum_a / (sum_a + sum_b);
    }
  }

  const bool pure = !gradient_mode() && (sum_a == 0.0 || sum_b == 0.0);
  if (pure || depth >= params.max_depth || rows.size() < 2 * static_cast<size_t>(params.min_node))
    return id;

  // node_stat: Gini at the node, or the parent quadratic term G^2/(H+l2).
  const double node_stat = gradient_mode() ? sum_a * sum_a / (sum_b + l2_leaf)
                                           : nodes[static_cast<size_t>(id)].impurity;

  Candidate best;
  auto consider = [&](const Candidate& c) {
    if (c.feature >= 0 && c.score < best.score) best = c;
  };
  if (mtry > 0 && mtry < feature_pool.size()) {
    std::vector<int> subset;
    sampler.sample(*rng, static_cast<int>(mtry), subset);
    std::sort(subset.begin(), subset.end());
    for (int f : subset) {
      const auto fi = static_cast<size_t>(f);
      consider(fm.roles[fi] == Role::categorical ? scan_categorical(rows, fi, n_node, node_stat)
                                                 : scan_numeric(rows, fi, n_node, node_stat));
    }
  } else {
    for (size_t f : feature_pool) {
      consider(fm.roles[f] == Role::categorical ? scan_categorical(rows, f, n_node, node_stat)
                                                : scan_numeric(rows, f, n_node, node_stat));
    }
  }
  if (best.feature < 0) return id;
  if (gradient_mode()) {
    if (best.gain <= params.cost_complexity) return id;
  } else {
    if (best.gain + 1e-12 < params.cost_complexity * root_impurity) return id;
  }

  // Partition rows into child buckets.
  const size_t f = static_cast<size_t>(best.feature);
  const auto& col = fm.cols[f];
  std::vector<std::vector<uint32_t>> buckets;
  std::vector<int> bucket_label;  // label id per bucket (categorical only)
  if (best.categorical) {
    const size_t k = fm.labels[f].size();
    std::vector<int> slot(k, -1);
    for (uint32_t r : rows) {
      const double v = col[r];
      const size_t label = is_missing(v) ? static_cast<size_t>(best.majority)
                                         : static_cast<size_t>(v);
      if (slot[label] < 0) {
        slot[label] = static_cast<int>(buckets.size());
        buckets.emplace_back();
        bucket_label.push_back(static_cast<int>(label));
      }
      buckets[static_cast<size_t>(slot[label])].push_back(r);
    }
    // Recurse in ascending label order for a stable arena layout.
    std::vector<size_t> order(buckets.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::sort(order.begin(), order.end(),
              [&](size_t x, size_t z) { return bucket_label[x] < bucket_label[z]; });
    std::vector<std::vector<uint32_t>> sorted_buckets;
    std::vector<int> sorted_labels;
    for (size_t i : order) {
      sorted_buckets.push_back(std::move(buckets[i]));
      sorted_labels.push_back(bucket_label[i]);
    }
    buckets = std::move(sorted_buckets);
    bucket_label = std::move(sorted_labels);
  } else {
    buckets.resize(2);
    for (uint32_t r : rows) {
      const double v = col[r];
      const size_t side = is_missing(v) ? static_cast<size_t>(best.majority)
                                        : (v < best.threshold ? 0u : 1u);
      buckets[side].push_back(r);
    }
  }

  std::vector<int> child_ids;
  child_ids.reserve(buckets.size());
  double child_quality = 0.0;  // n*impurity summed (classification gain bookkeeping)
  for (const auto& bucket : buckets) {
    child_ids.push_back(grow(bucket, depth + 1));
  }

  TreeNode& node = nodes[static_cast<size_t>(id)];
  node.feature = best.feature;
  node.categorical = best.categorical;
  node.threshold = best.threshold;
  if (best.categorical) {
    node.children.assign(fm.labels[f].size(), -1);
    for (size_t i = 0; i < child_ids.size(); ++i) {
      node.children[static_cast<size_t>(bucket_label[i])] = child_ids[i];
    }
    node.majority_child = best.majority;
  } else {
    node.children = {child_ids[0], child_ids[1]};
    node.majority_child = best.majority;
  }
  if (gradient_mode()) {
    node.gain = best.gain;
  } else {
    for (int c : child_ids) {
      const TreeNode& ch = nodes[static_cast<size_t>(c)];
      child_quality += ch.n_rows * ch.impurity;
    }
    node.gain = node.n_rows * node.impurity - child_quality;
  }
  return id;
}

void validate_params(const TreeParams& params) {
  if (params.min_node < 1) fail_config("BadParams", "min_node must be at least 1");
  if (params.max_depth < 0) fail_config("BadParams", "max_depth must be nonnegative");
  if (params.cost_complexity < 0.0) fail_config("BadParams", "cost_complexity must be nonnegative");
}

}  // namespace

Tree fit_tree(const FeatureMatrix& fm, const TreeParams& params, uint64_t seed) {
  std::vector<uint32_t> rows(fm.rows);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<uint32_t>(i);
  Rng rng(seed);
  return fit_tree_rows(fm, rows, params, 0, &rng);
}

Tree fit_tree_rows(const FeatureMatrix& fm, const std::vector<uint32_t>& rows,
                   const TreeParams& params, size_t mtry, Rng* rng) {
  validate_params(params);
  if (rows.empty() || fm.rows == 0) fail_data("EmptyDataset", "cannot fit a tree on zero rows");
  if (fm.y.size() != fm.rows) fail_data("LengthMismatch", "target length does not match rows");
  for (double v : fm.y) {
    if (v != 0.0 && v != 1.0) fail_data("TargetNotBinary", "target values must be 0 or 1");
  }

  Tree t;
  t.params = params;
  t.feature_names = fm.names;
  t.feature_labels = fm.labels;

  Grower grower{.fm = fm, .params = params, .nodes = t.nodes};
  grower.y = &fm.y;
  double yes = 0;
  for (uint32_t r : rows) yes += fm.y[r];
  grower.root_impurity = gini_impurity(yes, static_cast<double>(rows.size()) - yes);
  grower.mtry = std::min(mtry, fm.n_features());
  grower.rng = rng;
  grower.sampler.reset(fm.n_features());
  grower.feature_pool.resize(fm.n_features());
  for (size_t f = 0; f < fm.n_features(); ++f) grower.feature_pool[f] = f;
  if (grower.mtry > 0 && rng == nullptr) {
    fail_config("BadParams", "feature subsampling requires a random stream");
  }
  t.root = grower.grow(rows, 0);
  return t;
}

Tree fit_gradient_tree(const FeatureMatrix& fm, const std::vector<double>& grad,
                       const std::vector<double>& hess, const TreeParams& params, double l2_leaf,
                       const std::vector<int>& feature_subset) {
  validate_params(params);
  if (fm.rows == 0) fail_data("EmptyDataset", "cannot fit a tree on zero rows");
  if (grad.size() != fm.rows || hess.size() != fm.rows) {
    fail_data("LengthMismatch", "gradient vectors must match the row count");
  }

  Tree t;
  t.params = params;
  t.feature_names = fm.names;
  t.feature_labels = fm.labels;

  Grower grower{.fm = fm, .params = params, .nodes = t.nodes};
  grower.grad = &grad;
  grower.hess = &hess;
  grower.l2_leaf = l2_leaf;
  if (feature_subset.empty()) {
    grower.feature_pool.resize(fm.n_features());
    for (size_t f = 0; f < fm.n_features(); ++f) grower.feature_pool[f] = f;
  } else {
    for (int f : feature_subset) grower.feature_pool.push_back(static_cast<size_t>(f));
    std::sort(grower.feature_pool.begin(), grower.feature_pool.end());
  }

  std::vector<uint32_t> rows(fm.rows);
  for (size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<uint32_t>(i);
  t.root = grower.grow(rows, 0);
  return t;
}

int Tree::route(const FeatureMatrix& fm, size_t row) const {
  int id = root;
  while (true) {
    const TreeNode& node = nodes[static_cast<size_t>(id)];
    if (node.is_leaf()) return id;
    const auto f = static_cast<size_t>(node.feature);
    if (f >= fm.n_features()) {
      fail_data("SchemaMismatch", "row has no feature at index " + std::to_string(node.feature));
    }
    const double v = fm.cols[f][row];
    int next = -1;
    if (is_missing(v)) {
      next = node.children[static_cast<size_t>(node.majority_child)];
    } else if (node.categorical) {
      const auto label = static_cast<size_t>(v);
      next = label < node.children.size() ? node.children[label] : -1;
      if (next < 0) next = node.children[static_cast<size_t>(node.majority_child)];
    } else {
      next = node.children[v < node.threshold ? 0 : 1];
    }
    id = next;
  }
}

double Tree::predict(const FeatureMatrix& fm, size_t row) const {
  return nodes[static_cast<size_t>(route(fm, row))].value;
}

int Tree::depth() const {
  // Iterative DFS over (node, depth).
  int best = 0;
  std::vector<std::pair<int, int>> stack = {{root, 0}};
  while (!stack.empty()) {
    const auto [id, d] = stack.back();
    stack.pop_back();
    const TreeNode& node = nodes[static_cast<size_t>(id)];
    if (node.is_leaf()) {
      best = std::max(best, d);
      continue;
    }
    for (int c : node.children) {
      if (c >= 0) stack.emplace_back(c, d + 1);
    }
  }
  return best;
}

size_t Tree::n_leaves() const {
  size_t count = 0;
  for (const auto& node : nodes) count += node.is_leaf() ? 1 : 0;
  return count;
}

namespace {

void collect_rules(const Tree& t, int id, std::vector<std::string>& conditions,
                   std::vector<std::string>& out) {
  const TreeNode& node = t.nodes[static_cast<size_t>(id)];
  if (node.is_leaf()) {
    std::string line;
    if (!conditions.empty()) {
      line = "if ";
      for (size_t i = 0; i < conditions.size(); ++i) {
        if (i > 0) line += " and ";
        line += conditions[i];
      }
      line += " then ";
    }
    line += "p(yes) = " + format_fixed(node.value, 4) + " [yes=" + format_double(node.n_yes) +
            " no=" + format_double(node.n_no) + "]";
    out.push_back(line);
    return;
  }
  const auto f = static_cast<size_t>(node.feature);
  if (node.categorical) {
    for (size_t label = 0; label < node.children.size(); ++label) {
      const int c = node.children[label];
      if (c < 0) continue;
      conditions.push_back(t.feature_names[f] + " = " + t.feature_labels[f][label]);
      collect_rules(t, c, conditions, out);
      conditions.pop_back();
    }
  } else {
    conditions.push_back(t.feature_names[f] + " < " + format_double(node.threshold));
    collect_rules(t, node.children[0], conditions, out);
    conditions.pop_back();
    conditions.push_back(t.feature_names[f] + " >= " + format_double(node.threshold));
    collect_rules(t, node.children[1], conditions, out);
    conditions.pop_back();
  }
}

nlohmann::json node_to_json(const Tree& t, int id) {
  const TreeNode& node = t.nodes[static_cast<size_t>(id)];
  nlohmann::json j;
  j["n"] = node.n_rows;
  j["yes"] = node.n_yes;
  j["no"] = node.n_no;
  j["value"] = node.value;
  if (node.is_leaf()) return j;
  j["feature"] = node.feature;
  j["name"] = t.feature_names[static_cast<size_t>(node.feature)];
  j["impurity"] = node.impurity;
  j["gain"] = node.gain;
  j["majority"] = node.majority_child;
  if (node.categorical) {
    nlohmann::json children = nlohmann::json::array();
    for (int c : node.children) {
      children.push_back(c < 0 ? nlohmann::json(nullptr) : node_to_json(t, c));
    }
    j["children"] = children;
  } else {
    j["threshold"] = node.threshold;
    j["left"] = node_to_json(t, node.children[0]);
    j["right"] = node_to_json(t, node.children[1]);
  }
  return j;
}

int node_from_json(const nlohmann::json& j, Tree& t) {
  const int id = static_cast<int>(t.nodes.size());
  t.nodes.emplace_back();
  {
    TreeNode& node = t.nodes[static_cast<size_t>(id)];
    node.n_rows = j.at("n").get<int>();
    node.n_yes = j.at("yes").get<double>();
    node.n_no = j.at("no").get<double>();
    node.value = j.at("value").get<double>();
  }
  if (!j.contains("feature")) return id;
  const int feature = j.at("feature").get<int>();
  const double impurity = j.at("impurity").get<double>();
  const double gain = j.at("gain").get<double>();
  const int majority = j.at("majority").get<int>();
  std::vector<int> children;
  bool categorical = false;
  double threshold = 0.0;
  if (j.contains("children")) {
    categorical = true;
    for (const auto& cj : j.at("children")) {
      children.push_back(cj.is_null() ? -1 : node_from_json(cj, t));
    }
  } else {
    threshold = j.at("threshold").get<double>();
    children.push_back(node_from_json(j.at("left"), t));
    children.push_back(node_from_json(j.at("right"), t));
  }
  TreeNode& node = t.nodes[static_cast<size_t>(id)];
  node.feature = feature;
  node.categorical = categorical;
  node.threshold = threshold;
  node.children = std::move(children);
  node.majority_child = majority;
  node.impurity = impurity;
  node.gain = gain;
  return id;
}

}  // namespace

std::vector<std::string> Tree::rules() const {
  std::vector<std::string> out;
  std::vector<std::string> conditions;
  collect_rules(*this, root, conditions, out);
  return out;
}

nlohmann::json Tree::to_json() const {
  nlohmann::json j;
  j["params"] = {{"cost_complexity", params.cost_complexity},
                 {"max_depth", params.max_depth},
                 {"min_node", params.min_node}};
  j["features"] = feature_names;
  j["labels"] = feature_labels;
  j["root"] = node_to_json(*this, root);
  return j;
}

Tree Tree::from_json(const nlohmann::json& j) {
  Tree t;
  const auto& p = j.at("params");
  t.params.cost_complexity = p.at("cost_complexity").get<double>();
  t.params.max_depth = p.at("max_depth").get<int>();
  t.params.min_node = p.at("min_node").get<int>();
  t.feature_names = j.at("features").get<std::vector<std::string>>();
  t.feature_labels = j.at("labels").get<std::vector<std::vector<std::string>>>();
  t.root = node_from_json(j.at("root"), t);
  return t;
}

}  // namespace treeclime
