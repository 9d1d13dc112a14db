#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>

namespace treeclime {

// Every error carries a stable kind tag ("MissingColumn", "BadMonthFormat", ...)
// so callers and tests can dispatch without parsing messages.
class Error : public std::runtime_error {
public:
  Error(std::string kind, const std::string& msg)
      : std::runtime_error(kind + ": " + msg), kind_(std::move(kind)) {}
  const std::string& kind() const { return kind_; }

private:
  std::string kind_;
};

// Configuration problems (bad flags, malformed config JSON) -> exit code 2.
class ConfigError : public Error {
public:
  using Error::Error;
};

// Data problems (unreadable files, schema violations, bad values) -> exit code 3.
class DataError : public Error {
public:
  using Error::Error;
};

[[noreturn]] inline void fail_data(const std::string& kind, const std::string& msg) {
  throw DataError(kind, msg);
}

[[noreturn]] inline void fail_config(const std::string& kind, const std::string& msg) {
  throw ConfigError(kind, msg);
}

constexpr double kMissing = std::numeric_limits<double>::quiet_NaN();

inline bool is_missing(double v) { return std::isnan(v); }

}  // namespace treeclime
