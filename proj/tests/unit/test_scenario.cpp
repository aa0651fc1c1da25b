#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "support.hpp"

using namespace dmamiso;

namespace {

std::string write_temp(const std::string& name, const std::string& text) {
  const auto path = std::filesystem::temp_directory_path() / name;
  std::ofstream(path) << text;
  return path.string();
}

template <class F>
std::string config_error_key(F&& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.key();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("table values resolve to linear units") {
  const auto raw = parse_key_value("L = 2\nS = 2\nK = 1\nalpha0_db = -30\nK0_db = 10 # Rician\n");
  const Scenario sc = resolve_scenario(raw);
  CHECK(sc.ref_loss == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(sc.rician_factor == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(sc.noise_bs == doctest::Approx(1e-8).epsilon(1e-12));
  CHECK(sc.noise_ue == doctest::Approx(1e-11).epsilon(1e-12));
  CHECK(sc.dx == doctest::Approx(0.0107 / 2));
}

TEST_CASE("pmax is optional until a downlink scheme asks for it") {
  const Scenario sc = testutil::scenario(2, 2, 1, 10.0, std::nullopt);
  CHECK_FALSE(sc.pmax.has_value());
  CHECK(config_error_key([&] { sc.pmax_or_throw(); }) == "Pmax_dbm");
  CHECK(testutil::scenario(2, 2, 1, 10.0, 5.0).pmax_or_throw() == doctest::Approx(std::pow(10.0, -2.5)));
}

TEST_CASE("bad configurations name the offending key") {
  CHECK(config_error_key([] { parse_key_value("L = 2\nbogus = 1\n"); }) == "bogus");
  CHECK(config_error_key([] { parse_key_value("L = 2\nL = 3\n"); }) == "L");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("S = 2\nK = 1\n")); }) == "L");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = 2\nS = 2\nK = 1\nK0 = 3\nK0_db = 3\n")); }) ==
        "K0");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = x\nS = 2\nK = 1\n")); }) == "L");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = 2.5\nS = 2\nK = 1\n")); }) == "L");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = 2\nS = 2\nK = 1\nr = 1\n")); }) == "r");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = 2\nS = 2\nK = 1\nconstraint = XY\n")); }) ==
        "constraint");
  CHECK(config_error_key([] { resolve_scenario(parse_key_value("L = 2\nS = 2\nK = 1\nq0_theta = 1,2\n")); }) ==
        "q0_theta");
  CHECK(config_error_key([] { read_raw_config("/nonexistent/dir/cfg"); }).empty());
}

TEST_CASE("JSON and key-value files resolve to the same scenario") {
  const auto kv = write_temp("dmamiso_kv.cfg", "L = 4\nS = 2\nK = 2\nPmax_dbm = 5\nuser_center_m = 0,200,0\n");
  const auto js = write_temp("dmamiso_js.json",
                             R"({"L": 4, "S": 2, "K": 2, "Pmax_dbm": 5, "user_center_m": [0, 200, 0]})");
  const Scenario a = load_scenario(kv);
  const Scenario b = load_scenario(js);
  CHECK(canonical_dump(a) == canonical_dump(b));
  CHECK(fingerprint(a) == fingerprint(b));
}

TEST_CASE("overrides replace the K0 alias and env vars are collected") {
  const auto path = write_temp("dmamiso_alias.cfg", "L = 2\nS = 2\nK = 1\nK0_db = 10\n");
  const Scenario sc = load_scenario(path, {{"K0", "3"}});
  CHECK(sc.rician_factor == 3.0);
  ::setenv("DMASIM_K", "3", 1);
  const RawConfig env = env_overrides();
  ::unsetenv("DMASIM_K");
  REQUIRE(env.count("K") == 1);
  CHECK(env.at("K") == "3");
  CHECK(load_scenario(path, env).num_users == 3);
}

TEST_CASE("fingerprint is stable and sensitive") {
  const Scenario a = testutil::scenario(4, 4, 2);
  const Scenario b = testutil::scenario(4, 4, 2);
  CHECK(fingerprint(a) == fingerprint(b));
  Scenario c = a;
  c.corr_coeff = 0.7000000000000001;
  CHECK(fingerprint(a) != fingerprint(c));
}

TEST_CASE("path loss") {
  const Scenario sc = testutil::scenario(2, 2, 1);
  // 200^2.5 = 40000 * sqrt(200)
  const double oracle = 1e-3 / (40000.0 * std::sqrt(200.0));
  CHECK(path_loss(sc, 200.0) == doctest::Approx(oracle).epsilon(1e-12));
  CHECK(path_loss(sc, 200.0) == doctest::Approx(1.7678e-9).epsilon(1e-4));
  CHECK(path_loss(sc, 1.0) == doctest::Approx(sc.ref_loss).epsilon(1e-15));
  double prev = path_loss(sc, 1.0);
  for (double d = 2.0; d < 500.0; d *= 1.3) {
    const double a = path_loss(sc, d);
    CHECK(a < prev);
    prev = a;
  }
}

TEST_CASE("user placement geometry") {
  const Scenario sc = testutil::scenario(2, 2, 1);
  const auto users = place_users(sc);
  REQUIRE(users.size() == 1);
  CHECK(users[0].distance >= std::sqrt(180.0 * 180.0 + 400.0) - 1e-9);
  CHECK(users[0].distance <= std::sqrt(220.0 * 220.0 + 400.0) + 1e-9);

  const Scenario sc4 = testutil::scenario(2, 2, 4);
  const auto a = place_users(sc4);
  const auto b = place_users(sc4);
  for (std::size_t k = 0; k < a.size(); ++k) {
    CHECK(a[k].distance == b[k].distance);
    CHECK(a[k].azimuth == b[k].azimuth);
    CHECK(a[k].elevation == b[k].elevation);
    const Vec3 dir = direction_from_angles(a[k].azimuth, a[k].elevation);
    for (int i = 0; i < 3; ++i) {
      const double expect = (a[k].position[i] - sc4.dma_position[i]) / a[k].distance;
      CHECK(std::abs(dir[i] - expect) < 1e-12);
    }
    CHECK(a[k].pathloss == path_loss(sc4, a[k].distance));
  }
}

TEST_CASE("random users are seeded") {
  Scenario sc = testutil::scenario(2, 2, 3);
  sc.randomize_users = true;
  const auto a = place_users(sc);
  const auto b = place_users(sc);
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].position == b[k].position);
  sc.seed = 2;
  CHECK(place_users(sc)[0].position != a[0].position);
}

TEST_CASE("rng streams") {
  RngStream a(42, 0), b(42, 0), c(42, 1);
  double sxy = 0, sxx = 0, syy = 0;
  for (int i = 0; i < 10000; ++i) {
    const double x = a.gaussian();
    CHECK(x == b.gaussian());
    const double y = c.gaussian();
    sxy += x * y;
    sxx += x * x;
    syy += y * y;
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.05);

  RngStream d(7, 3);
  double re2 = 0, im2 = 0;
  for (int i = 0; i < 20000; ++i) {
    const cplx z = d.complex_gaussian();
    re2 += z.real() * z.real();
    im2 += z.imag() * z.imag();
  }
  CHECK(re2 / 20000 == doctest::Approx(0.5).epsilon(0.05));
  CHECK(im2 / 20000 == doctest::Approx(0.5).epsilon(0.05));
}
