#pragma once

#include <compare>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "treeclime/common.hpp"

namespace treeclime {

enum class Role { binary, categorical, numeric, target };

std::string role_name(Role r);
Role role_from_name(const std::string& s);

// Calendar month, YYYY-MM. Lag arithmetic is pure month subtraction:
// 2015-05 minus 6 = 2014-11.
struct Month {
  int year = 0;
  int month = 1;  // 1..12

  static Month parse(const std::string& s);  // DataError(BadMonthFormat)
  Month minus(int k) const;
  int index() const { return year * 12 + (month - 1); }
  static Month from_index(int idx) { return Month{idx / 12, idx % 12 + 1}; }
  std::string str() const;
  auto operator<=>(const Month&) const = default;
};

// One column of a Dataset. Values are doubles throughout:
//   binary      -> 0/1 (NaN = missing)
//   categorical -> index into labels (NaN = missing)
//   numeric     -> finite value (NaN = missing)
//   target      -> strictly 0/1, never missing
struct Column {
  std::string name;
  Role role = Role::numeric;
  std::vector<double> values;
  std::vector<std::string> labels;  // categorical vocabulary, index order

  const std::string& label_of(double v) const { return labels[static_cast<size_t>(v)]; }
};

struct ColumnSpec {
  std::string name;
  Role role;
};
using Schema = std::vector<ColumnSpec>;

class Dataset {
public:
  Dataset() = default;

  size_t n_rows() const { return n_rows_; }
  size_t n_cols() const { return cols_.size(); }
  const std::vector<Column>& columns() const { return cols_; }

  bool has_column(const std::string& name) const;
  int column_index(const std::string& name) const;  // -1 if absent
  const Column& col(const std::string& name) const;  // DataError(UnknownColumn)
  const Column& col(size_t i) const { return cols_[i]; }
  Column& col_mut(size_t i) { return cols_[i]; }

  // Index of the target column, or -1.
  int target_index() const;

  // Appends a column; enforces unique names, length agreement, role domain,
  // and the at-most-one-target invariant.
  void add_column(Column c);

  // Replaces the named column with the given columns at its position.
  void replace_column(const std::string& name, std::vector<Column> repl);

  void drop_column(const std::string& name);

  Dataset select_rows(const std::vector<int>& rows) const;

  // First n_rows constructor for building from parsed cells.
  static Dataset with_rows(size_t n) {
    Dataset d;
    d.n_rows_ = n;
    return d;
  }

private:
  void check_column(const Column& c) const;

  size_t n_rows_ = 0;
  std::vector<Column> cols_;
};

// Long-format SPEI panel keyed by (region, month, timescale).
class SpeiPanel {
public:
  static const std::set<int>& allowed_timescales();

  // DataError(DuplicateKey) on repeated key, DataError(UnknownTimescale).
  void insert(const std::string& region, Month m, int timescale, double value);
  std::optional<double> lookup(const std::string& region, Month m, int timescale) const;

  size_t size() const { return values_.size(); }
  const std::set<int>& timescales() const { return seen_timescales_; }
  const std::vector<std::string>& regions() const { return regions_; }

private:
  uint64_t key(int region_id, int month_index, int timescale) const;
  int region_id(const std::string& region, bool insert_if_new);

  std::unordered_map<std::string, int> region_ids_;
  std::vector<std::string> regions_;
  std::unordered_map<uint64_t, double> values_;
  std::set<int> seen_timescales_;
};

// Reads a survey CSV against a declared schema. Every schema name must be
// present in the header (DataError(MissingColumn)); file columns not named in
// the schema are ignored. Cell parse failures raise DataError(TypeMismatch)
// naming file, column, and row. Categorical vocabularies are built in
// first-encounter order.
Dataset ingest_survey(const std::string& path, const Schema& schema);

// Reads a long-format SPEI CSV with columns region_id, month, timescale, value.
SpeiPanel ingest_spei(const std::string& path);

struct JoinOptions {
  std::string region_column = "region_id";
  std::string month_column = "month";
  // When false, a missing panel key raises DataError(MissingPanelValue)
  // naming the offending (region, month, timescale); when true the cell
  // becomes a missing marker instead.
  bool allow_missing = false;
};

// Appends numeric columns spei<T>_lag<L> for every requested timescale T
// (ascending) and lag L in 0..max_lag: the panel value at the row's region
// and interview month minus L. DataError(NegativeLag) if max_lag < 0.
Dataset join_and_lag(const Dataset& survey, const SpeiPanel& panel,
                     const std::vector<int>& timescales, int max_lag,
                     const JoinOptions& opts = {});

// Writes a Dataset back to CSV (binary as 0/1, categorical as labels, numeric
// in shortest round-trip form, missing as empty cells).
void write_dataset_csv(const Dataset& ds, const std::string& path);

}  // namespace treeclime
