#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <fstream>

#include "fixtures.hpp"
#include "treeclime/csv.hpp"
#include "treeclime/dataset.hpp"

using namespace treeclime;

namespace {

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

TEST_CASE("month parse, format, lag arithmetic") {
  const Month m = Month::parse("2015-05");
  CHECK(m.year == 2015);
  CHECK(m.month == 5);
  CHECK(m.str() == "2015-05");
  CHECK(m.minus(6).str() == "2014-11");
  CHECK(m.minus(0).str() == "2015-05");
  CHECK(m.minus(48).str() == "2011-05");
  CHECK(Month::parse("2009-01").minus(1).str() == "2008-12");
  for (const char* bad : {"2015-5", "201505", "2015/05", "2015-13", "2015-00", "x015-05"}) {
    CHECK_THROWS_WITH_AS(Month::parse(bad), doctest::Contains("BadMonthFormat"), DataError);
  }
}

TEST_CASE("ingest survey with mixed roles") {
  const auto path = fixtures::write_temp(
      "mixed.csv", "male,origin,age,move\n1,BFA,24,0\n0,SEN,31,1\n1,BFA,47,0\n");
  const Schema schema = {{"male", Role::binary},
                         {"origin", Role::categorical},
                         {"age", Role::numeric},
                         {"move", Role::target}};
  const auto ds = ingest_survey(path, schema);
  CHECK(ds.n_rows() == 3);
  CHECK(ds.n_cols() == 4);
  CHECK(ds.col("male").role == Role::binary);
  CHECK(ds.col("origin").role == Role::categorical);
  CHECK(ds.col("origin").labels == std::vector<std::string>{"BFA", "SEN"});
  CHECK(ds.col("origin").values == std::vector<double>{0, 1, 0});
  CHECK(ds.col("age").values == std::vector<double>{24, 31, 47});
  CHECK(ds.target_index() == 3);
  std::remove(path.c_str());
}

TEST_CASE("target value outside {0,1} is a TypeMismatch") {
  const auto path = fixtures::write_temp("badtarget.csv", "x,move\n1,0\n2,2\n");
  const Schema schema = {{"x", Role::numeric}, {"move", Role::target}};
  CHECK_THROWS_WITH_AS(ingest_survey(path, schema), doctest::Contains("TypeMismatch"), DataError);
  CHECK_THROWS_WITH_AS(ingest_survey(path, schema), doctest::Contains("move"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("missing schema column is reported by name") {
  const auto path = fixtures::write_temp("nocol.csv", "x\n1\n");
  const Schema schema = {{"x", Role::numeric}, {"move", Role::target}};
  CHECK_THROWS_WITH_AS(ingest_survey(path, schema), doctest::Contains("MissingColumn"), DataError);
  std::remove(path.c_str());
}

TEST_CASE("extra file columns are ignored; schema order wins") {
  const auto path =
      fixtures::write_temp("extra.csv", "ignored,move,x\nfoo,0,1.5\nbar,1,2.5\n");
  const Schema schema = {{"x", Role::numeric}, {"move", Role::target}};
  const auto ds = ingest_survey(path, schema);
  CHECK(ds.n_cols() == 2);
  CHECK(ds.col(0).name == "x");
  CHECK(ds.col(1).name == "move");
  std::remove(path.c_str());
}

TEST_CASE("toy table ingests with expected shape and vocabularies") {
  const auto ds = fixtures::toy_dataset();
  CHECK(ds.n_rows() == 14);
  CHECK(ds.n_cols() == 5);
  CHECK(ds.col("age").labels == std::vector<std::string>{"young", "middle", "old"});
  CHECK(ds.col("drought").labels == std::vector<std::string>{"harsh", "soft"});
  int yes = 0;
  for (double v : ds.col("move").values) yes += v == 1.0;
  CHECK(yes == 6);
}

TEST_CASE("round trip: ingest then emit is byte-identical") {
  const auto p1 = fixtures::write_temp("roundtrip.csv", fixtures::kToyCsv);
  const auto ds = ingest_survey(p1, fixtures::toy_schema());
  const auto p2 = std::string("/tmp/treeclime_fixture_roundtrip2.csv");
  write_dataset_csv(ds, p2);
  CHECK(slurp(p1) == slurp(p2));
  std::remove(p1.c_str());
  std::remove(p2.c_str());
}

TEST_CASE("spei panel ingest and lookup") {
  const auto path = fixtures::write_temp(
      "spei.csv",
      "region_id,month,timescale,value\nR1,2014-11,12,-0.271\nR1,2014-12,12,0.131\nR2,2014-11,12,"
      "0.806\n");
  const auto panel = ingest_spei(path);
  CHECK(panel.size() == 3);
  CHECK(panel.lookup("R1", Month::parse("2014-11"), 12).value() == doctest::Approx(-0.271));
  CHECK(!panel.lookup("R1", Month::parse("2014-10"), 12).has_value());
  CHECK(!panel.lookup("R9", Month::parse("2014-11"), 12).has_value());
  CHECK(!panel.lookup("R1", Month::parse("2014-11"), 6).has_value());
  std::remove(path.c_str());
}

TEST_CASE("duplicate panel key and unknown timescale") {
  const auto dup = fixtures::write_temp(
      "dup.csv", "region_id,month,timescale,value\nR1,2014-11,12,0.1\nR1,2014-11,12,0.2\n");
  CHECK_THROWS_WITH_AS(ingest_spei(dup), doctest::Contains("DuplicateKey"), DataError);
  CHECK_THROWS_WITH_AS(ingest_spei(dup), doctest::Contains("2014-11"), DataError);
  const auto bad = fixtures::write_temp(
      "badts.csv", "region_id,month,timescale,value\nR1,2014-11,9,0.1\n");
  CHECK_THROWS_WITH_AS(ingest_spei(bad), doctest::Contains("UnknownTimescale"), DataError);
  std::remove(dup.c_str());
  std::remove(bad.c_str());
}

namespace {

// A small joined fixture: 2 regions, complete panel for T in {1,12}.
struct JoinFixture {
  Dataset survey;
  SpeiPanel panel;
};

JoinFixture make_join_fixture(int month_shift = 0) {
  const std::string survey_csv = [&] {
    auto shift = [&](const std::string& ym) {
      return Month::parse(ym).minus(-month_shift).str();
    };
    std::string s = "region_id,month,male,move\n";
    s += "R1," + shift("2015-05") + ",1,0\n";
    s += "R2," + shift("2015-07") + ",0,1\n";
    s += "R1," + shift("2015-07") + ",1,1\n";
    return s;
  }();
  const auto spath = fixtures::write_temp("join_survey.csv", survey_csv);
  const Schema schema = {{"region_id", Role::categorical},
                         {"month", Role::categorical},
                         {"male", Role::binary},
                         {"move", Role::target}};
  JoinFixture f{ingest_survey(spath, schema), SpeiPanel{}};
  std::remove(spath.c_str());
  // Panel values encode (region, month index, timescale) so expectations are
  // easy to state: value = region_number*1000 + months_since_2010_01 + ts/100.
  for (const auto& region : {std::string("R1"), std::string("R2")}) {
    const double rbase = region == "R1" ? 1000.0 : 2000.0;
    for (int idx = Month{2010, 1}.index(); idx <= Month{2015, 12}.index(); ++idx) {
      for (int ts : {1, 12}) {
        const Month m = Month::from_index(idx + month_shift);
        f.panel.insert(region, m, ts,
                       rbase + (idx - Month{2010, 1}.index()) + ts / 100.0);
      }
    }
  }
  return f;
}

}  // namespace

TEST_CASE("join_and_lag: lag arithmetic, naming, ordering") {
  auto f = make_join_fixture();
  const auto joined = join_and_lag(f.survey, f.panel, {12, 1}, 6);
  // Original columns retained in order, then spei1_lag0..6, spei12_lag0..6.
  CHECK(joined.n_cols() == 4 + 2 * 7);
  CHECK(joined.col(0).name == "region_id");
  CHECK(joined.col(4).name == "spei1_lag0");
  CHECK(joined.col(10).name == "spei1_lag6");
  CHECK(joined.col(11).name == "spei12_lag0");
  CHECK(joined.col(17).name == "spei12_lag6");

  // Row 0: R1, 2015-05. months_since(2015-05) = 64; lag 6 -> 2014-11 -> 58.
  CHECK(joined.col("spei12_lag0").values[0] == doctest::Approx(1064.12));
  CHECK(joined.col("spei12_lag6").values[0] == doctest::Approx(1058.12));
  CHECK(joined.col("spei1_lag6").values[0] == doctest::Approx(1058.01));
  // Row 1: R2, 2015-07 -> 66.
  CHECK(joined.col("spei12_lag0").values[1] == doctest::Approx(2066.12));
  CHECK(joined.col("spei12_lag6").values[1] == doctest::Approx(2060.12));
}

TEST_CASE("join_and_lag: full grid produces 343 columns") {
  auto f = make_join_fixture();
  // Build a complete panel for all 7 timescales over a wide range.
  SpeiPanel panel;
  for (const auto& region : {std::string("R1"), std::string("R2")}) {
    for (int idx = Month{2008, 1}.index(); idx <= Month{2015, 12}.index(); ++idx) {
      for (int ts : {1, 2, 3, 6, 12, 18, 24}) {
        panel.insert(region, Month::from_index(idx), ts, 0.0);
      }
    }
  }
  const auto joined = join_and_lag(f.survey, panel, {1, 2, 3, 6, 12, 18, 24}, 48);
  CHECK(joined.n_cols() == 4 + 7 * 49);  // 343 spei columns
}

TEST_CASE("join_and_lag: missing panel value names the key") {
  auto f = make_join_fixture();
  SpeiPanel sparse;
  sparse.insert("R1", Month::parse("2015-05"), 12, 0.5);
  try {
    join_and_lag(f.survey, sparse, {12}, 0);
    FAIL("expected MissingPanelValue");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("MissingPanelValue") != std::string::npos);
    CHECK(msg.find("R2") != std::string::npos);
    CHECK(msg.find("2015-07") != std::string::npos);
    CHECK(msg.find("12") != std::string::npos);
  }
  // With allow_missing the same join succeeds and marks cells missing.
  JoinOptions opts;
  opts.allow_missing = true;
  const auto joined = join_and_lag(f.survey, sparse, {12}, 0, opts);
  CHECK(joined.col("spei12_lag0").values[0] == doctest::Approx(0.5));
  CHECK(is_missing(joined.col("spei12_lag0").values[1]));
}

TEST_CASE("join_and_lag: negative lag and bad timescale rejected") {
  auto f = make_join_fixture();
  CHECK_THROWS_WITH_AS(join_and_lag(f.survey, f.panel, {12}, -1),
                       doctest::Contains("NegativeLag"), DataError);
  CHECK_THROWS_WITH_AS(join_and_lag(f.survey, f.panel, {9}, 0),
                       doctest::Contains("UnknownTimescale"), DataError);
}

TEST_CASE("join_and_lag: translation invariance in calendar time") {
  auto base = make_join_fixture(0);
  auto shifted = make_join_fixture(17);
  const auto j0 = join_and_lag(base.survey, base.panel, {1, 12}, 12);
  const auto j1 = join_and_lag(shifted.survey, shifted.panel, {1, 12}, 12);
  for (size_t c = 4; c < j0.n_cols(); ++c) {
    CHECK(j0.col(c).values == j1.col(c).values);
  }
}

TEST_CASE("dataset invariants: duplicate names, length, multiple targets") {
  Dataset ds = Dataset::with_rows(2);
  Column a{"a", Role::numeric, {1.0, 2.0}, {}};
  ds.add_column(a);
  CHECK_THROWS_WITH_AS(ds.add_column(a), doctest::Contains("DuplicateColumn"), DataError);
  Column b{"b", Role::numeric, {1.0}, {}};
  CHECK_THROWS_WITH_AS(ds.add_column(b), doctest::Contains("LengthMismatch"), DataError);
  Column t1{"t1", Role::target, {0.0, 1.0}, {}};
  Column t2{"t2", Role::target, {0.0, 1.0}, {}};
  ds.add_column(t1);
  CHECK_THROWS_WITH_AS(ds.add_column(t2), doctest::Contains("MultipleTargets"), DataError);
  Column bad{"bad", Role::binary, {0.0, 2.0}, {}};
  CHECK_THROWS_WITH_AS(ds.add_column(bad), doctest::Contains("TypeMismatch"), DataError);
}

TEST_CASE("select_rows keeps vocabularies and order") {
  const auto ds = fixtures::toy_dataset();
  const auto sub = ds.select_rows({0, 3, 13});
  CHECK(sub.n_rows() == 3);
  CHECK(sub.col("age").labels == ds.col("age").labels);
  CHECK(sub.col("age").values == std::vector<double>{0, 2, 2});  // young, old, old
  CHECK(sub.col("move").values == std::vector<double>{1, 0, 1});
}
