#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "treeclime/dataset.hpp"

namespace treeclime {

// A planted effect: driver is a survey one-hot column name (e.g. "male",
// "age_1524"), a lagged climate value "spei<T>_lag<L>", or its magnitude
// "|spei<T>_lag<L>|".
struct EffectTerm {
  std::string driver;
  double weight = 0.0;
};

// Generator for the survey + climate-panel pair: one-hot survey rows shaped
// like the GWP table, a per-region AR(1) SPEI panel (autocorrelation 0.8,
// longer timescales as standardized rolling means), and both move targets
// drawn from sigmoid(sum of weight*driver) with logistic noise of the given
// scale. Deterministic per seed; the feature draws do not depend on the
// effect list, so two configs differing only in effects share every feature
// column.
struct SynthConfig {
  int n_rows = 5000;
  int countries = 6;  // Burkina Faso, Ivory Coast, Mali, Mauritania, Niger, Senegal
  int years = 7;      // interviews 2009..2015
  int regions_per_country = 3;
  int max_lag = 48;  // panel history horizon, months before the first interview year
  double noise = 1.0;
  uint64_t seed = 0;
  std::vector<EffectTerm> effects;

  // Block shares; each block must sum to 1 within 0.02 (renormalized exactly).
  std::vector<double> origin_shares = {0.16, 0.10, 0.16, 0.21, 0.19, 0.18};
  std::vector<double> year_shares = {0.13, 0.12, 0.15, 0.13, 0.15, 0.16, 0.16};
  std::vector<double> hhsize_shares = {0.34, 0.18, 0.28, 0.19};
  std::vector<double> income_shares = {0.25, 0.25, 0.25, 0.25};
  std::vector<double> age_shares = {0.36, 0.34, 0.30};
  double male_share = 0.53;
  double urban_share = 0.24;
  double mabr_share = 0.47;
  double hskill_share = 0.03;
};

struct SynthFiles {
  std::string survey;  // wide CSV: join keys, 28 one-hot features, both targets
  std::string spei;    // long CSV: region_id,month,timescale,value
  std::string truth;   // JSON record of the planted drivers and realized rates
};

// Writes the three artifacts. ConfigError(InvalidShares/UnknownDriver/BadParams).
void generate(const SynthConfig& cfg, const SynthFiles& out);

// The 28 one-hot feature columns, in emitted order.
std::vector<std::string> synth_onehot_columns(const SynthConfig& cfg = {});

// Ingestion schema for a generated survey: join keys, features, and the
// chosen move column as target ("move_general" or "move_international").
Schema synth_schema(const std::string& target, const SynthConfig& cfg = {});

}  // namespace treeclime
