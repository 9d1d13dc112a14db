#pragma once

#include <string>
#include <vector>

#include "treeclime/dataset.hpp"

namespace treeclime {

// Column-major numeric view of a dataset: every non-target column becomes a
// feature in dataset order, the target (if present) lands in y.
struct FeatureMatrix {
  size_t rows = 0;
  std::vector<std::string> names;
  std::vector<Role> roles;
  std::vector<std::vector<std::string>> labels;  // per-feature vocabulary
  std::vector<std::vector<double>> cols;
  std::vector<double> y;

  size_t n_features() const { return cols.size(); }
  double at(size_t row, size_t feature) const { return cols[feature][row]; }

  int find(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i) {
      if (names[i] == name) return static_cast<int>(i);
    }
    return -1;
  }

  static FeatureMatrix from(const Dataset& ds, bool require_target = true) {
    FeatureMatrix fm;
    fm.rows = ds.n_rows();
    bool has_target = false;
    for (size_t c = 0; c < ds.n_cols(); ++c) {
      const Column& col = ds.col(c);
      if (col.role == Role::target) {
        fm.y = col.values;
        has_target = true;
        continue;
      }
      fm.names.push_back(col.name);
      fm.roles.push_back(col.role);
      fm.labels.push_back(col.labels);
      fm.cols.push_back(col.values);
    }
    if (require_target && !has_target) fail_data("MissingTarget", "dataset has no target column");
    return fm;
  }
};

}  // namespace treeclime
