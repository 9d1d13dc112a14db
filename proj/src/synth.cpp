#include "treeclime/synth.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "nlohmann/json.hpp"
#include "treeclime/common.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/rng.hpp"
#include "treeclime/stats.hpp"

namespace treeclime {
namespace {

constexpr const char* kCountryCodes[] = {"BFA", "IVC", "MAL", "MRT", "NIG", "SEN"};
constexpr int kMaxCountries = 6;
constexpr int kBaseYear = 2009;
constexpr double kAr1 = 0.8;

const std::vector<std::string>& hhsize_labels() {
  static const std::vector<std::string> v = {"inf-3", "3-4", "4-6", "6-inf"};
  return v;
}

const std::vector<std::string>& income_labels() {
  static const std::vector<std::string> v = {"q1", "q2", "q3", "q4"};
  return v;
}

const std::vector<std::string>& age_labels() {
  static const std::vector<std::string> v = {"1524", "2534", "35plus"};
  return v;
}

void check_shares(const std::string& block, const std::vector<double>& shares,
                  size_t want) {
  if (shares.size() != want) {
    fail_config("InvalidShares", block + " needs " + std::to_string(want) +
                                     " shares, got " + std::to_string(shares.size()));
  }
  double sum = 0.0;
  for (double s : shares) {
    if (s < 0.0) fail_config("InvalidShares", block + " has a negative share");
    sum += s;
  }
  if (std::fabs(sum - 1.0) > 0.02) {
    fail_config("InvalidShares",
                block + " shares sum to " + format_double(sum) + ", expected 1");
  }
}

void normalize(std::vector<double>& shares) {
  double sum = 0.0;
  for (double s : shares) sum += s;
  for (double& s : shares) s /= sum;
}

void check_rate(const std::string& name, double p) {
  if (!(p >= 0.0 && p <= 1.0)) {
    fail_config("InvalidShares", name + " must lie in [0,1]");
  }
}

SynthConfig validated(const SynthConfig& cfg) {
  if (cfg.n_rows < 1) fail_config("BadParams", "n_rows must be positive");
  if (cfg.countries < 1 || cfg.countries > kMaxCountries) {
    fail_config("BadParams", "countries must be in 1..6");
  }
  if (cfg.years < 1) fail_config("BadParams", "years must be positive");
  if (cfg.regions_per_country < 1) {
    fail_config("BadParams", "regions_per_country must be positive");
  }
  if (cfg.max_lag < 0) fail_config("BadParams", "max_lag must be non-negative");
  if (!(cfg.noise > 0.0)) fail_config("BadParams", "noise must be positive");

  SynthConfig c = cfg;
  check_shares("origin_shares", c.origin_shares, static_cast<size_t>(c.countries));
  check_shares("year_shares", c.year_shares, static_cast<size_t>(c.years));
  check_shares("hhsize_shares", c.hhsize_shares, hhsize_labels().size());
  check_shares("income_shares", c.income_shares, income_labels().size());
  check_shares("age_shares", c.age_shares, age_labels().size());
  normalize(c.origin_shares);
  normalize(c.year_shares);
  normalize(c.hhsize_shares);
  normalize(c.income_shares);
  normalize(c.age_shares);
  check_rate("male_share", c.male_share);
  check_rate("urban_share", c.urban_share);
  check_rate("mabr_share", c.mabr_share);
  check_rate("hskill_share", c.hskill_share);
  return c;
}

struct ResolvedEffect {
  double weight = 0.0;
  bool is_spei = false;
  bool absolute = false;
  int timescale = 0;
  int lag = 0;
  size_t onehot = 0;  // index into synth_onehot_columns when !is_spei
};

bool parse_nonneg_int(const std::string& s, size_t from, size_t to, int& out) {
  if (from >= to) return false;
  long v = 0;
  for (size_t i = from; i < to; ++i) {
    if (s[i] < '0' || s[i] > '9') return false;
    v = v * 10 + (s[i] - '0');
    if (v > 1000000) return false;
  }
  out = static_cast<int>(v);
  return true;
}

// spei<T>_lag<L>, full match.
bool parse_spei_driver(const std::string& s, int& timescale, int& lag) {
  if (s.rfind("spei", 0) != 0) return false;
  size_t underscore = s.find("_lag", 4);
  if (underscore == std::string::npos) return false;
  if (!parse_nonneg_int(s, 4, underscore, timescale)) return false;
  return parse_nonneg_int(s, underscore + 4, s.size(), lag);
}

std::vector<ResolvedEffect> resolve_effects(const SynthConfig& cfg,
                                            const std::vector<std::string>& onehots) {
  std::vector<ResolvedEffect> out;
  for (const EffectTerm& e : cfg.effects) {
    ResolvedEffect r;
    r.weight = e.weight;
    std::string body = e.driver;
    if (body.size() >= 2 && body.front() == '|' && body.back() == '|') {
      r.absolute = true;
      body = body.substr(1, body.size() - 2);
    }
    if (parse_spei_driver(body, r.timescale, r.lag)) {
      if (!SpeiPanel::allowed_timescales().count(r.timescale)) {
        fail_config("UnknownDriver",
                    e.driver + ": no timescale " + std::to_string(r.timescale));
      }
      if (r.lag > cfg.max_lag) {
        fail_config("UnknownDriver", e.driver + ": lag exceeds max_lag " +
                                         std::to_string(cfg.max_lag));
      }
      r.is_spei = true;
      out.push_back(r);
      continue;
    }
    if (r.absolute) fail_config("UnknownDriver", e.driver);
    bool found = false;
    for (size_t i = 0; i < onehots.size(); ++i) {
      if (onehots[i] == body) {
        r.onehot = i;
        found = true;
        break;
      }
    }
    if (!found) fail_config("UnknownDriver", e.driver);
    out.push_back(r);
  }
  return out;
}

int draw_share(Rng& rng, const std::vector<double>& shares) {
  double u = rng.uniform();
  double cum = 0.0;
  for (size_t i = 0; i + 1 < shares.size(); ++i) {
    cum += shares[i];
    if (u < cum) return static_cast<int>(i);
  }
  return static_cast<int>(shares.size()) - 1;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out.good()) fail_data("FileWrite", "cannot open " + path);
  out << text;
  if (!out.good()) fail_data("FileWrite", "failed writing " + path);
}

}  // namespace

std::vector<std::string> synth_onehot_columns(const SynthConfig& cfg) {
  std::vector<std::string> cols;
  for (int c = 0; c < cfg.countries && c < kMaxCountries; ++c) {
    cols.push_back(std::string("origin_") + kCountryCodes[c]);
  }
  for (int y = 0; y < cfg.years; ++y) {
    cols.push_back("year_" + std::to_string(kBaseYear + y));
  }
  for (const std::string& l : hhsize_labels()) cols.push_back("hhsize_" + l);
  for (const std::string& l : income_labels()) cols.push_back("lnhhincpc_" + l);
  for (const std::string& l : age_labels()) cols.push_back("age_" + l);
  cols.push_back("male");
  cols.push_back("urban");
  cols.push_back("mabr");
  cols.push_back("hskill");
  return cols;
}

Schema synth_schema(const std::string& target, const SynthConfig& cfg) {
  if (target != "move_general" && target != "move_international") {
    fail_config("BadParams", "unknown target column " + target);
  }
  Schema schema = {{"region_id", Role::categorical}, {"month", Role::categorical}};
  for (const std::string& c : synth_onehot_columns(cfg)) {
    schema.push_back({c, Role::binary});
  }
  schema.push_back({target, Role::target});
  return schema;
}

void generate(const SynthConfig& cfg, const SynthFiles& out) {
  const SynthConfig c = validated(cfg);
  const std::vector<std::string> onehots = synth_onehot_columns(c);
  const std::vector<ResolvedEffect> effects = resolve_effects(c, onehots);

  std::vector<std::string> regions;
  for (int cc = 0; cc < c.countries; ++cc) {
    for (int k = 0; k < c.regions_per_country; ++k) {
      regions.push_back(std::string(kCountryCodes[cc]) + "_r" + std::to_string(k));
    }
  }

  // Panel: per-region AR(1) monthlies; each timescale is the rolling mean of
  // the last T monthlies, standardized empirically over the emitted window.
  const auto& timescales = SpeiPanel::allowed_timescales();
  const int max_t = *timescales.rbegin();
  const int first_index = Month{kBaseYear, 1}.index() - c.max_lag;
  const int n_months = c.years * 12 + c.max_lag;
  const int warm = max_t - 1;

  SpeiPanel panel;
  std::ostringstream spei_csv;
  spei_csv << "region_id,month,timescale,value\n";
  for (size_t ri = 0; ri < regions.size(); ++ri) {
    Rng r(mix_seed(c.seed, 0x59E1, ri));
    double b = r.normal() / std::sqrt(1.0 - kAr1 * kAr1);
    for (int i = 0; i < 120; ++i) b = kAr1 * b + r.normal();
    std::vector<double> base(static_cast<size_t>(n_months + warm));
    for (double& v : base) {
      b = kAr1 * b + r.normal();
      v = b;
    }

    std::map<int, std::vector<double>> series;
    for (int t : timescales) {
      std::vector<double> raw(static_cast<size_t>(n_months));
      for (int i = 0; i < n_months; ++i) {
        double s = 0.0;
        for (int j = 0; j < t; ++j) s += base[static_cast<size_t>(warm + i - j)];
        raw[static_cast<size_t>(i)] = s / t;
      }
      double mu = mean(raw);
      double sq = 0.0;
      for (double v : raw) sq += (v - mu) * (v - mu);
      double sd = std::sqrt(sq / static_cast<double>(raw.size()));
      if (!(sd > 0.0)) sd = 1.0;
      for (double& v : raw) v = (v - mu) / sd;
      series[t] = std::move(raw);
    }

    for (int i = 0; i < n_months; ++i) {
      Month m = Month::from_index(first_index + i);
      for (int t : timescales) {
        double v = series[t][static_cast<size_t>(i)];
        panel.insert(regions[ri], m, t, v);
        spei_csv << regions[ri] << ',' << m.str() << ',' << t << ','
                 << format_double(v) << '\n';
      }
    }
  }

  // Survey: one generator, fixed per-row draw order, so the feature columns
  // depend only on the seed, never on the effect list.
  const size_t n = static_cast<size_t>(c.n_rows);
  std::vector<double> region_vals(n), month_vals(n), yg(n), yi(n);
  std::vector<std::vector<double>> feature_vals(onehots.size(),
                                                std::vector<double>(n, 0.0));
  const size_t origin_at = 0;
  const size_t year_at = origin_at + static_cast<size_t>(c.countries);
  const size_t hhsize_at = year_at + static_cast<size_t>(c.years);
  const size_t income_at = hhsize_at + hhsize_labels().size();
  const size_t age_at = income_at + income_labels().size();
  const size_t male_at = age_at + age_labels().size();

  std::vector<std::string> month_labels;
  const int interview_first = Month{kBaseYear, 1}.index();
  for (int i = 0; i < c.years * 12; ++i) {
    month_labels.push_back(Month::from_index(interview_first + i).str());
  }

  Rng rng(mix_seed(c.seed, 0x6E4));
  for (size_t row = 0; row < n; ++row) {
    int origin = draw_share(rng, c.origin_shares);
    int rk = static_cast<int>(rng.below(static_cast<uint64_t>(c.regions_per_country)));
    int year = draw_share(rng, c.year_shares);
    int mon = static_cast<int>(rng.below(12));
    int hh = draw_share(rng, c.hhsize_shares);
    int inc = draw_share(rng, c.income_shares);
    int age = draw_share(rng, c.age_shares);
    double male = rng.uniform() < c.male_share ? 1.0 : 0.0;
    double urban = rng.uniform() < c.urban_share ? 1.0 : 0.0;
    double mabr = rng.uniform() < c.mabr_share ? 1.0 : 0.0;
    double hskill = rng.uniform() < c.hskill_share ? 1.0 : 0.0;
    double ug = rng.uniform();
    double ui = rng.uniform();

    size_t region = static_cast<size_t>(origin) *
                        static_cast<size_t>(c.regions_per_country) +
                    static_cast<size_t>(rk);
    Month interview{kBaseYear + year, mon + 1};
    region_vals[row] = static_cast<double>(region);
    month_vals[row] = static_cast<double>(interview.index() - interview_first);
    feature_vals[origin_at + static_cast<size_t>(origin)][row] = 1.0;
    feature_vals[year_at + static_cast<size_t>(year)][row] = 1.0;
    feature_vals[hhsize_at + static_cast<size_t>(hh)][row] = 1.0;
    feature_vals[income_at + static_cast<size_t>(inc)][row] = 1.0;
    feature_vals[age_at + static_cast<size_t>(age)][row] = 1.0;
    feature_vals[male_at + 0][row] = male;
    feature_vals[male_at + 1][row] = urban;
    feature_vals[male_at + 2][row] = mabr;
    feature_vals[male_at + 3][row] = hskill;

    double eta = 0.0;
    for (const ResolvedEffect& e : effects) {
      double v;
      if (e.is_spei) {
        v = *panel.lookup(regions[region], interview.minus(e.lag), e.timescale);
        if (e.absolute) v = std::fabs(v);
      } else {
        v = feature_vals[e.onehot][row];
      }
      eta += e.weight * v;
    }
    yg[row] = eta + c.noise * std::log(ug / (1.0 - ug)) > 0.0 ? 1.0 : 0.0;
    yi[row] = eta + c.noise * std::log(ui / (1.0 - ui)) > 0.0 ? 1.0 : 0.0;
  }

  Dataset ds = Dataset::with_rows(n);
  ds.add_column({"region_id", Role::categorical, region_vals, regions});
  ds.add_column({"month", Role::categorical, month_vals, month_labels});
  for (size_t i = 0; i < onehots.size(); ++i) {
    ds.add_column({onehots[i], Role::binary, std::move(feature_vals[i]), {}});
  }
  ds.add_column({"move_general", Role::binary, yg, {}});
  ds.add_column({"move_international", Role::binary, yi, {}});

  write_text(out.spei, spei_csv.str());
  write_dataset_csv(ds, out.survey);

  nlohmann::json truth;
  truth["seed"] = c.seed;
  truth["n_rows"] = c.n_rows;
  truth["countries"] = c.countries;
  truth["years"] = c.years;
  truth["regions_per_country"] = c.regions_per_country;
  truth["max_lag"] = c.max_lag;
  truth["noise"] = c.noise;
  truth["effects"] = nlohmann::json::array();
  for (const EffectTerm& e : c.effects) {
    truth["effects"].push_back({{"driver", e.driver}, {"weight", e.weight}});
  }
  truth["positive_rate"] = {{"move_general", mean(yg)},
                            {"move_international", mean(yi)}};
  write_text(out.truth, truth.dump(2) + "\n");
}

}  // namespace treeclime
