#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dmamiso/types.hpp"

namespace dmamiso {

using Vec3 = std::array<double, 3>;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double dbm_to_watts(double dbm) { return std::pow(10.0, (dbm - 30.0) / 10.0); }
inline double linear_to_db(double lin) { return 10.0 * std::log10(lin); }

struct SolverOptions {
  double ewr_tol = 1e-6;
  int ewr_max_sweeps = 100;
  double wmmse_tol = 1e-4;
  int wmmse_max_iter = 200;
  double pdd_beta0 = 1e5;
  double pdd_c1 = 0.5;
  double pdd_c2 = 1.0 / 6.0;
  double pdd_eps = 1e-5;
  double pdd_eta0 = 1.0;
  double pdd_inner_tol = 1e-4;
  int pdd_inner_max = 100;
  int pdd_outer_max = 200;
};

/// Power-consumption model used for energy efficiency (all in watts).
struct PowerModel {
  double p_rf = dbm_to_watts(27.0);
  double p_bs = dbm_to_watts(39.0);
  double p_ps = dbm_to_watts(17.0);
  double amp_efficiency = 0.35;
};

/// Fully resolved experiment description. Every power is linear.
struct Scenario {
  int num_microstrips = 0;     // L
  int elements_per_strip = 0;  // S
  int num_users = 0;           // K

  double wavelength = 0.0107;
  double dx = 0.0107 / 2;
  double dz = 0.0107 / 2;
  double alpha_wg = 0.6;
  double gamma_wg = 827.67;
  std::vector<double> element_distances;  // optional override of rho_{l,s}, length S

  double rician_factor = 10.0;  // K0, linear
  double corr_coeff = 0.7;      // r
  double pathloss_exponent = 2.5;
  double ref_loss = 1e-3;       // alpha0, linear
  double ref_distance = 1.0;    // D0

  double noise_bs = 1e-8;       // N0
  double noise_ue = 1e-11;      // N_k, watts
  std::optional<double> pmax;   // watts

  Vec3 dma_position{0.0, 0.0, 20.0};
  Vec3 user_center{0.0, 200.0, 0.0};
  double user_radius = 20.0;
  bool randomize_users = false;

  ConstraintSet constraint = ConstraintSet::Lorentzian;
  std::vector<double> q0_theta;  // optional explicit initial phases, length N

  int trials = 10000;
  std::uint64_t seed = 1;
  std::string link = "uplink";   // used by the no-opt baseline
  int workers = 1;

  SolverOptions solver;
  PowerModel power;

  int num_elements() const { return num_microstrips * elements_per_strip; }
  double pmax_or_throw() const;

  /// Throws ConfigError naming the first violated field.
  void validate() const;
};

struct UserGeometry {
  Vec3 position{};
  double distance = 0.0;   // D_k
  double azimuth = 0.0;    // psi_k
  double elevation = 0.0;  // omega_k, polar angle from the z-axis
  double pathloss = 0.0;   // alpha_k
};

using RawConfig = std::map<std::string, std::string>;

/// Reads a key = value file (or JSON when the file ends in .json) into raw
/// strings. Comments start with '#'.
RawConfig read_raw_config(const std::string& path);
RawConfig parse_key_value(const std::string& text);
RawConfig parse_json_config(const std::string& text);

/// Collects DMASIM_<key> environment overrides for every known key.
RawConfig env_overrides(const char* prefix = "DMASIM_");

/// Resolves raw strings into a validated Scenario. Unknown keys and missing
/// required keys (L, S, K) are rejected.
Scenario resolve_scenario(const RawConfig& raw);

Scenario load_scenario(const std::string& path, const RawConfig& overrides = {});

const std::vector<std::string>& known_config_keys();

/// Canonical key=value dump of every resolved field, 17 significant digits.
std::string canonical_dump(const Scenario& sc);
std::uint64_t fingerprint(const Scenario& sc);

double path_loss(const Scenario& sc, double distance);

/// Unit direction (sin w cos p, sin w sin p, cos w).
Vec3 direction_from_angles(double azimuth, double elevation);

/// Users on the configured circle; deterministic equal spacing unless
/// `randomize_users` is set, in which case angles come from the seed.
std::vector<UserGeometry> place_users(const Scenario& sc);

/// Deterministic per-trial random stream.
class RngStream {
 public:
  RngStream(std::uint64_t master_seed, std::uint64_t trial);

  double gaussian() { return normal_(engine_); }
  /// Circularly-symmetric complex Gaussian with unit total variance.
  cplx complex_gaussian();
  double uniform(double lo, double hi);

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

RngStream rng_stream(std::uint64_t master_seed, std::uint64_t trial);

// Substream indices reserved for non-trial draws.
inline constexpr std::uint64_t kStreamUserPlacement = 0xFFFF'0001ULL;
inline constexpr std::uint64_t kStreamInitialPhases = 0xFFFF'0002ULL;

}  // namespace dmamiso
