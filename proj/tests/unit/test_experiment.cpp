#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <sstream>

#include "dmamiso/experiment.hpp"
#include "support.hpp"

using namespace dmamiso;

namespace {

Scenario small() {
  Scenario sc = testutil::scenario(2, 4, 2);
  sc.trials = 40;
  return sc;
}

std::string csv_of(const std::vector<ExperimentResult>& rs) {
  std::ostringstream os;
  write_csv(os, rs);
  return os.str();
}

}  // namespace

TEST_CASE("scheme names round-trip") {
  for (const auto& name : scheme_names()) CHECK(to_string(scheme_from_string(name)) == name);
  try {
    scheme_from_string("gradient-descent");
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "scheme");
  }
  CHECK(is_downlink(Scheme::Pdd, small()));
  CHECK_FALSE(is_downlink(Scheme::WmmseSic, small()));
}

TEST_CASE("sweep values") {
  const Scenario sc = small();
  const Scenario n = apply_sweep_value(sc, "N", 16);
  CHECK(n.num_microstrips == 2);
  CHECK(n.elements_per_strip == 8);
  CHECK_THROWS_AS(apply_sweep_value(sc, "N", 15), ConfigError);
  CHECK(apply_sweep_value(sc, "K0", 10).rician_factor == doctest::Approx(10.0));
  CHECK(*apply_sweep_value(sc, "Pmax", 0).pmax == doctest::Approx(1e-3));
  CHECK(apply_sweep_value(sc, "K", 3).num_users == 3);
  CHECK_THROWS_AS(apply_sweep_value(sc, "K", 2.5), ConfigError);
  CHECK_THROWS_AS(apply_sweep_value(sc, "bandwidth", 1), ConfigError);
  CHECK_THROWS_AS(sweep(sc, Scheme::NoOpt, "bandwidth", {1}, 1), ConfigError);
}

TEST_CASE("CSV round-trip") {
  std::vector<ExperimentResult> rs(2);
  rs[0].scheme = "pdd";
  rs[0].variable = "K0";
  rs[0].value = 0.1;
  rs[0].rate.surrogate_bits = 1.0 / 3.0;
  rs[0].rate.mc_mean_bits = 12.345678901234567;
  rs[0].rate.mc_se_bits = 1e-300;
  rs[0].ee = 2.5;
  rs[0].iterations = 17;
  rs[0].seed = 18446744073709551615ull;
  rs[0].flags = {"not_converged", "dropped=3"};
  rs[1].scheme = "no-opt";
  rs[1].rate.surrogate_bits = std::numeric_limits<double>::quiet_NaN();
  rs[1].rate.mc_mean_bits = std::numeric_limits<double>::infinity();

  std::istringstream is(csv_of(rs));
  const auto rows = read_csv(is);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].scheme == "pdd");
  CHECK(rows[0].variable == "K0");
  CHECK(rows[0].value == 0.1);
  CHECK(rows[0].surrogate_bits == 1.0 / 3.0);
  CHECK(rows[0].mc_mean == 12.345678901234567);
  CHECK(rows[0].mc_se == 1e-300);
  CHECK(rows[0].iterations == 17);
  CHECK(rows[0].seed == 18446744073709551615ull);
  CHECK(rows[0].flags == "not_converged;dropped=3");
  CHECK(std::isnan(rows[1].surrogate_bits));
  CHECK(std::isinf(rows[1].mc_mean));
  CHECK(std::isnan(rows[1].ee));
  CHECK(rows[1].variable == "none");
}

TEST_CASE("CSV header and malformed rows") {
  CHECK(csv_of({}) == std::string(kCsvHeader) + "\n");
  std::istringstream empty(csv_of({}));
  CHECK(read_csv(empty).empty());
  std::istringstream bad_header("scheme,value\n");
  CHECK_THROWS_AS(read_csv(bad_header), ConfigError);
  std::istringstream short_row(std::string(kCsvHeader) + "\npdd,none,1\n");
  CHECK_THROWS_AS(read_csv(short_row), ConfigError);
}

TEST_CASE("no-opt baseline") {
  Scenario sc = small();
  const ExperimentResult up = run_experiment(sc, Scheme::NoOpt);
  CHECK(up.iterations == 0);
  CHECK(up.flags.empty());
  CHECK(std::isnan(up.ee));
  sc.link = "downlink";
  const ExperimentResult down = run_experiment(sc, Scheme::NoOpt);
  CHECK(down.iterations == 0);
  CHECK(std::isfinite(down.ee));
  CHECK(down.rate.per_user_bits.size() == 2);
}

TEST_CASE("optimised schemes beat the baseline on their surrogate") {
  const Scenario sc = small();
  const ExperimentResult base = run_experiment(sc, Scheme::NoOpt);
  const ExperimentResult sic = run_experiment(sc, Scheme::WmmseSic);
  CHECK(sic.rate.surrogate_bits >= base.rate.surrogate_bits - 1e-9);
  CHECK(sic.iterations > 0);
  CHECK(sic.trace_bits.size() == static_cast<std::size_t>(sic.iterations) + 1);
  const ExperimentResult pdd = run_experiment(sc, Scheme::Pdd);
  CHECK(pdd.violation.size() == static_cast<std::size_t>(pdd.iterations));
  CHECK(pdd.violation.back() < 1e-5);
}

TEST_CASE("downlink without Pmax is a configuration error") {
  Scenario sc = small();
  sc.pmax.reset();
  try {
    run_experiment(sc, Scheme::Pdd);
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.key() == "Pmax_dbm");
  }
}

TEST_CASE("sweep is ordered and deterministic across worker counts") {
  const Scenario sc = small();
  const std::vector<double> k0{0, 10, 20};
  const auto one = sweep(sc, Scheme::WmmseNsic, "K0", k0, 1);
  const auto two = sweep(sc, Scheme::WmmseNsic, "K0", k0, 2);
  REQUIRE(one.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(one[i].value == k0[i]);
    CHECK(one[i].variable == "K0");
  }
  CHECK(csv_of(one) == csv_of(two));
  CHECK(csv_of(one) == csv_of(sweep(sc, Scheme::WmmseNsic, "K0", k0, 1)));
}

TEST_CASE("per-point configuration errors become flags") {
  const Scenario sc = small();
  const auto rs = sweep(sc, Scheme::NoOpt, "N", {8, 9}, 1);
  REQUIRE(rs.size() == 2);
  CHECK(rs[0].flags.empty());
  REQUIRE(rs[1].flags.size() == 1);
  CHECK(rs[1].flags[0].rfind("error=", 0) == 0);
  std::istringstream is(csv_of(rs));
  const auto rows = read_csv(is);
  CHECK(rows[1].flags.find(',') == std::string::npos);
}

TEST_CASE("imperfect-CSI benchmark re-optimises per realisation") {
  Scenario sc = small();
  sc.trials = 3;
  const ExperimentResult r = run_experiment(sc, Scheme::IcsiWmmse);
  CHECK(std::isnan(r.rate.surrogate_bits));
  CHECK(r.rate.trials == 3);
  CHECK(r.iterations >= 3);
}

TEST_CASE("trace CSV lists one row per recorded iteration") {
  const Scenario sc = small();
  std::vector<ExperimentResult> rs{run_experiment(sc, Scheme::WmmseSic), run_experiment(sc, Scheme::Pdd)};
  std::ostringstream os;
  write_trace_csv(os, rs);
  std::istringstream is(os.str());
  std::string line;
  std::getline(is, line);
  CHECK(line == "scheme,variable,value,iteration,surrogate_bits,violation");
  std::vector<std::vector<std::string>> rows;
  while (std::getline(is, line)) {
    std::vector<std::string> f;
    std::stringstream ls(line);
    for (std::string cell; std::getline(ls, cell, ',');) f.push_back(cell);
    REQUIRE(f.size() == 6);
    rows.push_back(f);
  }
  REQUIRE(rows.size() == rs[0].trace_bits.size() + rs[1].trace_bits.size());
  CHECK(rows.front()[0] == "wmmse-sic");
  CHECK(rows.front()[3] == "0");
  CHECK(rows.front()[5] == "nan");
  const auto& last = rows.back();
  CHECK(last[0] == "pdd");
  CHECK(std::stoi(last[3]) == rs[1].iterations);
  CHECK(std::stod(last[5]) < 1e-5);
  CHECK(std::stod(last[4]) == rs[1].trace_bits.back());
}
