#include "treeclime/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

#include "treeclime/csv.hpp"

namespace treeclime {

std::string role_name(Role r) {
  switch (r) {
    case Role::binary: return "binary";
    case Role::categorical: return "categorical";
    case Role::numeric: return "numeric";
    case Role::target: return "target";
  }
  return "?";
}

Role role_from_name(const std::string& s) {
  if (s == "binary") return Role::binary;
  if (s == "categorical") return Role::categorical;
  if (s == "numeric") return Role::numeric;
  if (s == "target") return Role::target;
  fail_config("UnknownRole", "no such column role: " + s);
}

Month Month::parse(const std::string& s) {
  auto bad = [&s]() -> Month {
    fail_data("BadMonthFormat", "expected YYYY-MM, got '" + s + "'");
  };
  if (s.size() != 7 || s[4] != '-') return bad();
  for (size_t i : {0u, 1u, 2u, 3u, 5u, 6u}) {
    if (s[i] < '0' || s[i] > '9') return bad();
  }
  Month m;
  m.year = std::stoi(s.substr(0, 4));
  m.month = std::stoi(s.substr(5, 2));
  if (m.month < 1 || m.month > 12) return bad();
  return m;
}

Month Month::minus(int k) const { return from_index(index() - k); }

std::string Month::str() const {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "%04d-%02d", year, month);
  return std::string(buf);
}

bool Dataset::has_column(const std::string& name) const { return column_index(name) >= 0; }

int Dataset::column_index(const std::string& name) const {
  for (size_t i = 0; i < cols_.size(); ++i) {
    if (cols_[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const Column& Dataset::col(const std::string& name) const {
  const int i = column_index(name);
  if (i < 0) fail_data("UnknownColumn", "no column named '" + name + "'");
  return cols_[i];
}

int Dataset::target_index() const {
  for (size_t i = 0; i < cols_.size(); ++i) {
    if (cols_[i].role == Role::target) return static_cast<int>(i);
  }
  return -1;
}

void Dataset::check_column(const Column& c) const {
  if (c.values.size() != n_rows_) {
    fail_data("LengthMismatch", "column '" + c.name + "' has " + std::to_string(c.values.size()) +
                                    " values, dataset has " + std::to_string(n_rows_) + " rows");
  }
  if (has_column(c.name)) {
    fail_data("DuplicateColumn", "column '" + c.name + "' already exists");
  }
  if (c.role == Role::target && target_index() >= 0) {
    fail_data("MultipleTargets", "dataset already has a target column");
  }
  for (size_t r = 0; r < c.values.size(); ++r) {
    const double v = c.values[r];
    switch (c.role) {
      case Role::binary:
        if (!is_missing(v) && v != 0.0 && v != 1.0) {
          fail_data("TypeMismatch", "binary column '" + c.name + "' row " + std::to_string(r) +
                                        " has value " + format_double(v));
        }
        break;
      case Role::target:
        if (v != 0.0 && v != 1.0) {
          fail_data("TypeMismatch", "target column '" + c.name + "' row " + std::to_string(r) +
                                        " has value " + format_double(v));
        }
        break;
      case Role::categorical:
        if (!is_missing(v)) {
          if (v != std::floor(v) || v < 0.0 || v >= static_cast<double>(c.labels.size())) {
            fail_data("TypeMismatch", "categorical column '" + c.name + "' row " +
                                          std::to_string(r) + " has label index " +
                                          format_double(v) + " outside its vocabulary");
          }
        }
        break;
      case Role::numeric:
        if (!is_missing(v) && !std::isfinite(v)) {
          fail_data("TypeMismatch",
                    "numeric column '" + c.name + "' row " + std::to_string(r) + " is not finite");
        }
        break;
    }
  }
}

void Dataset::add_column(Column c) {
  check_column(c);
  cols_.push_back(std::move(c));
}

void Dataset::replace_column(const std::string& name, std::vector<Column> repl) {
  const int idx = column_index(name);
  if (idx < 0) fail_data("UnknownColumn", "no column named '" + name + "'");
  Column removed = std::move(cols_[idx]);
  cols_.erase(cols_.begin() + idx);
  for (size_t k = 0; k < repl.size(); ++k) {
    check_column(repl[k]);
    cols_.insert(cols_.begin() + idx + static_cast<int>(k), std::move(repl[k]));
  }
}

void Dataset::drop_column(const std::string& name) {
  const int idx = column_index(name);
  if (idx < 0) fail_data("UnknownColumn", "no column named '" + name + "'");
  cols_.erase(cols_.begin() + idx);
}

Dataset Dataset::select_rows(const std::vector<int>& rows) const {
  Dataset out = Dataset::with_rows(rows.size());
  for (const auto& c : cols_) {
    Column nc;
    nc.name = c.name;
    nc.role = c.role;
    nc.labels = c.labels;
    nc.values.reserve(rows.size());
    for (int r : rows) nc.values.push_back(c.values[static_cast<size_t>(r)]);
    out.cols_.push_back(std::move(nc));
  }
  return out;
}

const std::set<int>& SpeiPanel::allowed_timescales() {
  static const std::set<int> k = {1, 2, 3, 6, 12, 18, 24};
  return k;
}

uint64_t SpeiPanel::key(int region_id, int month_index, int timescale) const {
  return (static_cast<uint64_t>(region_id) << 40) |
         (static_cast<uint64_t>(static_cast<uint32_t>(month_index)) << 8) |
         static_cast<uint64_t>(timescale);
}

int SpeiPanel::region_id(const std::string& region, bool insert_if_new) {
  auto it = region_ids_.find(region);
  if (it != region_ids_.end()) return it->second;
  if (!insert_if_new) return -1;
  const int id = static_cast<int>(regions_.size());
  region_ids_.emplace(region, id);
  regions_.push_back(region);
  return id;
}

void SpeiPanel::insert(const std::string& region, Month m, int timescale, double value) {
  if (!allowed_timescales().count(timescale)) {
    fail_data("UnknownTimescale", "timescale " + std::to_string(timescale) +
                                      " is not one of {1,2,3,6,12,18,24}");
  }
  const int rid = region_id(region, true);
  const uint64_t k = key(rid, m.index(), timescale);
  if (!values_.emplace(k, value).second) {
    fail_data("DuplicateKey",
              "(" + region + ", " + m.str() + ", " + std::to_string(timescale) + ") appears twice");
  }
  seen_timescales_.insert(timescale);
}

std::optional<double> SpeiPanel::lookup(const std::string& region, Month m, int timescale) const {
  auto it = region_ids_.find(region);
  if (it == region_ids_.end()) return std::nullopt;
  auto vit = values_.find(key(it->second, m.index(), timescale));
  if (vit == values_.end()) return std::nullopt;
  return vit->second;
}

namespace {

double parse_cell(const std::string& cell, Role role, std::vector<std::string>& labels,
                  std::unordered_map<std::string, int>& label_ids, const std::string& path,
                  const std::string& colname, size_t row) {
  auto mismatch = [&](const std::string& why) -> double {
    fail_data("TypeMismatch", path + ": column '" + colname + "' row " + std::to_string(row + 1) +
                                  ": " + why + " (got '" + cell + "')");
  };
  switch (role) {
    case Role::binary:
      if (cell.empty()) return kMissing;
      if (cell == "0") return 0.0;
      if (cell == "1") return 1.0;
      return mismatch("binary cells must be 0 or 1");
    case Role::target:
      if (cell == "0") return 0.0;
      if (cell == "1") return 1.0;
      return mismatch("target cells must be 0 or 1 and never missing");
    case Role::numeric: {
      if (cell.empty()) return kMissing;
      double v = 0.0;
      const char* begin = cell.data();
      const char* end = begin + cell.size();
      auto res = std::from_chars(begin, end, v);
      if (res.ec != std::errc() || res.ptr != end || !std::isfinite(v)) {
        return mismatch("numeric cells must be finite numbers");
      }
      return v;
    }
    case Role::categorical: {
      if (cell.empty()) return kMissing;
      auto it = label_ids.find(cell);
      if (it != label_ids.end()) return static_cast<double>(it->second);
      const int id = static_cast<int>(labels.size());
      label_ids.emplace(cell, id);
      labels.push_back(cell);
      return static_cast<double>(id);
    }
  }
  return kMissing;
}

}  // namespace

Dataset ingest_survey(const std::string& path, const Schema& schema) {
  const CsvTable table = read_csv(path);
  Dataset ds = Dataset::with_rows(table.rows.size());
  for (const auto& spec : schema) {
    const auto hit = std::find(table.header.begin(), table.header.end(), spec.name);
    if (hit == table.header.end()) {
      fail_data("MissingColumn", path + ": schema column '" + spec.name + "' not in header");
    }
    const size_t ci = static_cast<size_t>(hit - table.header.begin());
    Column c;
    c.name = spec.name;
    c.role = spec.role;
    c.values.reserve(table.rows.size());
    std::unordered_map<std::string, int> label_ids;
    for (size_t r = 0; r < table.rows.size(); ++r) {
      c.values.push_back(
          parse_cell(table.rows[r][ci], spec.role, c.labels, label_ids, path, spec.name, r));
    }
    ds.add_column(std::move(c));
  }
  return ds;
}

SpeiPanel ingest_spei(const std::string& path) {
  const CsvTable table = read_csv(path);
  auto col_of = [&](const std::string& name) -> size_t {
    const auto hit = std::find(table.header.begin(), table.header.end(), name);
    if (hit == table.header.end()) {
      fail_data("MissingColumn", path + ": expected column '" + name + "' in SPEI header");
    }
    return static_cast<size_t>(hit - table.header.begin());
  };
  const size_t c_region = col_of("region_id");
  const size_t c_month = col_of("month");
  const size_t c_ts = col_of("timescale");
  const size_t c_value = col_of("value");

  SpeiPanel panel;
  for (size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    const Month m = Month::parse(row[c_month]);
    int ts = 0;
    {
      const auto& cell = row[c_ts];
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), ts);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size()) {
        fail_data("UnknownTimescale",
                  path + " row " + std::to_string(r + 1) + ": bad timescale '" + cell + "'");
      }
    }
    double v = 0.0;
    {
      const auto& cell = row[c_value];
      auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
      if (res.ec != std::errc() || res.ptr != cell.data() + cell.size() || !std::isfinite(v)) {
        fail_data("TypeMismatch",
                  path + " row " + std::to_string(r + 1) + ": bad SPEI value '" + cell + "'");
      }
    }
    panel.insert(row[c_region], m, ts, v);
  }
  return panel;
}

Dataset join_and_lag(const Dataset& survey, const SpeiPanel& panel,
                     const std::vector<int>& timescales, int max_lag, const JoinOptions& opts) {
  if (max_lag < 0) {
    fail_data("NegativeLag", "max_lag must be >= 0, got " + std::to_string(max_lag));
  }
  std::vector<int> ts_sorted = timescales;
  std::sort(ts_sorted.begin(), ts_sorted.end());
  ts_sorted.erase(std::unique(ts_sorted.begin(), ts_sorted.end()), ts_sorted.end());
  for (int t : ts_sorted) {
    if (!SpeiPanel::allowed_timescales().count(t)) {
      fail_data("UnknownTimescale",
                "timescale " + std::to_string(t) + " is not one of {1,2,3,6,12,18,24}");
    }
  }

  const Column& region_col = survey.col(opts.region_column);
  const Column& month_col = survey.col(opts.month_column);
  if (region_col.role != Role::categorical || month_col.role != Role::categorical) {
    fail_data("TypeMismatch", "join key columns must be categorical text columns");
  }

  // Parse each distinct month label once.
  std::vector<Month> month_of_label;
  month_of_label.reserve(month_col.labels.size());
  for (const auto& s : month_col.labels) month_of_label.push_back(Month::parse(s));

  const size_t n = survey.n_rows();
  for (size_t r = 0; r < n; ++r) {
    if (is_missing(region_col.values[r]) || is_missing(month_col.values[r])) {
      fail_data("MissingJoinKey", "row " + std::to_string(r + 1) + " lacks " +
                                      opts.region_column + "/" + opts.month_column);
    }
  }

  Dataset out = survey;
  for (int t : ts_sorted) {
    for (int lag = 0; lag <= max_lag; ++lag) {
      Column c;
      c.name = "spei" + std::to_string(t) + "_lag" + std::to_string(lag);
      c.role = Role::numeric;
      c.values.resize(n);
      for (size_t r = 0; r < n; ++r) {
        const auto& region = region_col.labels[static_cast<size_t>(region_col.values[r])];
        const Month m = month_of_label[static_cast<size_t>(month_col.values[r])].minus(lag);
        const auto v = panel.lookup(region, m, t);
        if (v.has_value()) {
          c.values[r] = *v;
        } else if (opts.allow_missing) {
          c.values[r] = kMissing;
        } else {
          fail_data("MissingPanelValue", "no SPEI value for (" + region + ", " + m.str() + ", " +
                                             std::to_string(t) + ")");
        }
      }
      out.add_column(std::move(c));
    }
  }
  return out;
}

void write_dataset_csv(const Dataset& ds, const std::string& path) {
  CsvTable table;
  for (const auto& c : ds.columns()) table.header.push_back(c.name);
  table.rows.resize(ds.n_rows());
  for (size_t r = 0; r < ds.n_rows(); ++r) {
    auto& row = table.rows[r];
    row.reserve(ds.n_cols());
    for (const auto& c : ds.columns()) {
      const double v = c.values[r];
      if (is_missing(v)) {
        row.emplace_back();
      } else if (c.role == Role::categorical) {
        row.push_back(c.labels[static_cast<size_t>(v)]);
      } else {
        row.push_back(format_double(v));
      }
    }
  }
  write_csv(path, table);
}

}  // namespace treeclime
