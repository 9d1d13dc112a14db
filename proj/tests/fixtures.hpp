#pragma once

// Shared worked-example fixtures used across the unit and acceptance tests:
// the 14-household toy table, its fixed classification tree, and helpers for
// writing fixture CSVs.

#include <cstdio>
#include <fstream>
#include <string>

#include "treeclime/dataset.hpp"
#include "treeclime/tree.hpp"

namespace fixtures {

// age, hhsize, mabr, drought -> move, 14 instances.
inline const char* kToyCsv =
    "age,hhsize,mabr,drought,move\n"
    "young,large,yes,harsh,1\n"
    "young,large,no,harsh,1\n"
    "middle,large,yes,harsh,1\n"
    "old,medium,yes,harsh,0\n"
    "old,small,yes,soft,0\n"
    "old,small,no,soft,1\n"
    "middle,small,no,soft,0\n"
    "young,medium,yes,harsh,1\n"
    "young,small,yes,soft,0\n"
    "old,medium,yes,soft,0\n"
    "young,medium,no,soft,0\n"
    "middle,medium,no,harsh,0\n"
    "middle,large,yes,soft,0\n"
    "old,medium,no,harsh,1\n";

inline treeclime::Schema toy_schema() {
  using treeclime::Role;
  return {{"age", Role::categorical},
          {"hhsize", Role::categorical},
          {"mabr", Role::categorical},
          {"drought", Role::categorical},
          {"move", Role::target}};
}

inline std::string write_temp(const std::string& name, const std::string& content) {
  const std::string path = "/tmp/treeclime_fixture_" + name;
  std::ofstream out(path, std::ios::binary);
  out << content;
  return path;
}

inline treeclime::Dataset toy_dataset() {
  const auto path = write_temp("toy.csv", kToyCsv);
  auto ds = treeclime::ingest_survey(path, toy_schema());
  std::remove(path.c_str());
  return ds;
}

// The fixed illustrative tree over the toy table: age at the root, drought
// under young, mabr under middle, a plain leaf for old. Gains carry the
// n * (impurity drop) of each split.
inline treeclime::Tree fig_tree() {
  using treeclime::Tree;
  using treeclime::gini_impurity;
  Tree t;
  t.feature_names = {"age", "hhsize", "mabr", "drought"};
  t.feature_labels = {
      {"young", "middle", "old"}, {"large", "medium", "small"}, {"yes", "no"}, {"harsh", "soft"}};
  t.nodes.resize(8);
  auto& root = t.nodes[0];
  root.feature = 0;
  root.categorical = true;
  root.children = {1, 4, 7};
  root.majority_child = 0;
  root.n_yes = 6;
  root.n_no = 8;
  root.n_rows = 14;
  root.impurity = gini_impurity(6, 8);

  auto& young = t.nodes[1];
  young.feature = 3;
  young.categorical = true;
  young.children = {2, 3};
  young.majority_child = 0;
  young.n_yes = 3;
  young.n_no = 2;
  young.n_rows = 5;
  young.impurity = gini_impurity(3, 2);

  auto leaf = [&](int id, double yes, double no) {
    auto& nd = t.nodes[static_cast<size_t>(id)];
    nd.n_yes = yes;
    nd.n_no = no;
    nd.n_rows = static_cast<int>(yes + no);
    nd.impurity = gini_impurity(yes, no);
    nd.value = yes / (yes + no);
  };
  leaf(2, 3, 0);  // young & harsh
  leaf(3, 0, 2);  // young & soft

  auto& middle = t.nodes[4];
  middle.feature = 2;
  middle.categorical = true;
  middle.children = {5, 6};
  middle.majority_child = 0;
  middle.n_yes = 1;
  middle.n_no = 3;
  middle.n_rows = 4;
  middle.impurity = gini_impurity(1, 3);
  leaf(5, 1, 1);  // middle & mabr=yes
  leaf(6, 0, 2);  // middle & mabr=no
  leaf(7, 2, 3);  // old

  auto split_gain = [&](const treeclime::TreeNode& nd) {
    double kept = nd.n_rows * nd.impurity;
    for (const int c : nd.children) kept -= t.nodes[static_cast<size_t>(c)].n_rows *
                                            t.nodes[static_cast<size_t>(c)].impurity;
    return kept;
  };
  root.gain = split_gain(root);
  young.gain = split_gain(young);
  middle.gain = split_gain(middle);
  return t;
}

}  // namespace fixtures
