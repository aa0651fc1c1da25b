#include "dmamiso/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <json.hpp>

namespace dmamiso {

std::string to_string(ConstraintSet set) {
  switch (set) {
    case ConstraintSet::Lorentzian: return "LP";
    case ConstraintSet::AmplitudeOnly: return "AO";
    case ConstraintSet::BinaryAmplitude: return "BA";
    case ConstraintSet::Unconstrained: return "UC";
  }
  return "?";
}

ConstraintSet constraint_from_string(const std::string& tag) {
  if (tag == "LP") return ConstraintSet::Lorentzian;
  if (tag == "AO") return ConstraintSet::AmplitudeOnly;
  if (tag == "BA") return ConstraintSet::BinaryAmplitude;
  if (tag == "UC") return ConstraintSet::Unconstrained;
  throw ConfigError("constraint", "expected one of LP, AO, BA, UC, got '" + tag + "'");
}

const std::vector<std::string>& known_config_keys() {
  static const std::vector<std::string> keys = {
      "L", "S", "K",
      "wavelength_m", "dx_m", "dz_m", "alpha_wg", "gamma_wg", "element_distances_m",
      "K0_db", "K0", "r", "pathloss_exponent", "alpha0_db", "D0_m",
      "N0_db", "Nk_dbm", "Pmax_dbm",
      "dma_position_m", "user_center_m", "user_radius_m", "randomize_users",
      "constraint", "q0_theta", "trials", "seed", "link", "workers",
      "ewr_tol", "ewr_max_sweeps", "wmmse_tol", "wmmse_max_iter",
      "pdd_beta0", "pdd_c1", "pdd_c2", "pdd_eps", "pdd_eta0",
      "pdd_inner_tol", "pdd_inner_max", "pdd_outer_max",
      "P_RF_dbm", "P_BS_dbm", "P_PS_dbm", "amp_efficiency"};
  return keys;
}

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

double parse_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE)
    throw ConfigError(key, "not a number: '" + text + "'");
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  const double v = parse_double(key, text);
  if (v != std::floor(v) || std::abs(v) > 9.0e15) throw ConfigError(key, "not an integer: '" + text + "'");
  return static_cast<long long>(v);
}

bool parse_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key, "not a boolean: '" + text + "'");
}

std::vector<double> parse_list(const std::string& key, const std::string& text) {
  std::string t = trim(text);
  if (!t.empty() && t.front() == '[' && t.back() == ']') t = t.substr(1, t.size() - 2);
  std::vector<double> out;
  std::stringstream ss(t);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (trim(item).empty()) continue;
    out.push_back(parse_double(key, item));
  }
  return out;
}

Vec3 parse_vec3(const std::string& key, const std::string& text) {
  const auto v = parse_list(key, text);
  if (v.size() != 3) throw ConfigError(key, "expected three comma-separated coordinates");
  return {v[0], v[1], v[2]};
}

void check_known(const std::string& key) {
  const auto& keys = known_config_keys();
  if (std::find(keys.begin(), keys.end(), key) == keys.end())
    throw ConfigError(key, "unknown configuration key");
}

}  // namespace

RawConfig parse_key_value(const std::string& text) {
  RawConfig raw;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    check_known(key);
    if (raw.count(key)) throw ConfigError(key, "duplicate key");
    raw[key] = trim(line.substr(eq + 1));
  }
  return raw;
}

RawConfig parse_json_config(const std::string& text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("", std::string("JSON parse failure: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("", "JSON config must be an object");
  RawConfig raw;
  for (const auto& [key, value] : doc.items()) {
    check_known(key);
    if (value.is_string()) {
      raw[key] = value.get<std::string>();
    } else if (value.is_array()) {
      std::ostringstream os;
      os << std::setprecision(17);
      bool first = true;
      for (const auto& x : value) {
        if (!x.is_number()) throw ConfigError(key, "array entries must be numbers");
        os << (first ? "" : ",") << x.get<double>();
        first = false;
      }
      raw[key] = os.str();
    } else if (value.is_boolean()) {
      raw[key] = value.get<bool>() ? "true" : "false";
    } else if (value.is_number()) {
      std::ostringstream os;
      os << std::setprecision(17) << value.get<double>();
      raw[key] = os.str();
    } else {
      throw ConfigError(key, "unsupported JSON value type");
    }
  }
  return raw;
}

RawConfig read_raw_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  const bool json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
  return json ? parse_json_config(buf.str()) : parse_key_value(buf.str());
}

RawConfig env_overrides(const char* prefix) {
  RawConfig raw;
  for (const auto& key : known_config_keys()) {
    const std::string name = std::string(prefix) + key;
    if (const char* v = std::getenv(name.c_str())) raw[key] = v;
  }
  return raw;
}

double Scenario::pmax_or_throw() const {
  if (!pmax) throw ConfigError("Pmax_dbm", "required for downlink schemes");
  return *pmax;
}

void Scenario::validate() const {
  auto require = [](bool ok, const char* key, const char* what) {
    if (!ok) throw ConfigError(key, what);
  };
  require(num_microstrips >= 1, "L", "must be >= 1");
  require(elements_per_strip >= 1, "S", "must be >= 1");
  require(num_users >= 1, "K", "must be >= 1");
  require(wavelength > 0, "wavelength_m", "must be > 0");
  require(dx > 0, "dx_m", "must be > 0");
  require(dz > 0, "dz_m", "must be > 0");
  require(alpha_wg >= 0, "alpha_wg", "must be >= 0");
  require(gamma_wg > 0, "gamma_wg", "must be > 0");
  require(element_distances.empty() || static_cast<int>(element_distances.size()) == elements_per_strip,
          "element_distances_m", "must list exactly S distances");
  for (double d : element_distances) require(d >= 0, "element_distances_m", "distances must be >= 0");
  require(rician_factor >= 0, "K0", "must be >= 0");
  require(corr_coeff > 0 && corr_coeff < 1, "r", "must lie in (0, 1)");
  require(pathloss_exponent > 0, "pathloss_exponent", "must be > 0");
  require(ref_loss > 0, "alpha0_db", "must be finite");
  require(ref_distance > 0, "D0_m", "must be > 0");
  require(noise_bs > 0, "N0_db", "must be finite");
  require(noise_ue > 0, "Nk_dbm", "must be finite");
  require(!pmax || *pmax > 0, "Pmax_dbm", "must be finite");
  require(user_radius > 0, "user_radius_m", "must be > 0");
  require(q0_theta.empty() || static_cast<int>(q0_theta.size()) == num_elements(), "q0_theta",
          "must list exactly N = L*S phases");
  require(trials >= 1, "trials", "must be >= 1");
  require(link == "uplink" || link == "downlink", "link", "must be 'uplink' or 'downlink'");
  require(workers >= 1, "workers", "must be >= 1");
  require(solver.ewr_tol > 0 && solver.ewr_max_sweeps >= 1, "ewr_tol", "EWR tolerances must be positive");
  require(solver.wmmse_tol > 0 && solver.wmmse_max_iter >= 1, "wmmse_tol", "WMMSE tolerances must be positive");
  require(solver.pdd_beta0 > 0, "pdd_beta0", "must be > 0");
  require(solver.pdd_c1 > 0 && solver.pdd_c1 < 1, "pdd_c1", "must lie in (0, 1)");
  require(solver.pdd_c2 > 0 && solver.pdd_c2 < 1, "pdd_c2", "must lie in (0, 1)");
  require(solver.pdd_eps > 0 && solver.pdd_eta0 > 0, "pdd_eps", "thresholds must be > 0");
  require(solver.pdd_inner_tol > 0 && solver.pdd_inner_max >= 1 && solver.pdd_outer_max >= 1, "pdd_inner_tol",
          "PDD loop limits must be positive");
  require(power.amp_efficiency > 0 && power.amp_efficiency <= 1, "amp_efficiency", "must lie in (0, 1]");
  // dma position must not sit on the user circle centre plane at zero distance
  require(std::hypot(dma_position[0] - user_center[0], dma_position[1] - user_center[1],
                     dma_position[2] - user_center[2]) > 0,
          "dma_position_m", "must differ from user_center_m");
}

Scenario resolve_scenario(const RawConfig& raw) {
  for (const auto& kv : raw) check_known(kv.first);
  for (const char* key : {"L", "S", "K"})
    if (!raw.count(key)) throw ConfigError(key, "required key missing");
  if (raw.count("K0") && raw.count("K0_db")) throw ConfigError("K0", "give either K0 or K0_db, not both");

  auto get = [&](const char* key) -> const std::string* {
    auto it = raw.find(key);
    return it == raw.end() ? nullptr : &it->second;
  };

  Scenario sc;
  sc.num_microstrips = static_cast<int>(parse_int("L", *get("L")));
  sc.elements_per_strip = static_cast<int>(parse_int("S", *get("S")));
  sc.num_users = static_cast<int>(parse_int("K", *get("K")));

  if (auto v = get("wavelength_m")) sc.wavelength = parse_double("wavelength_m", *v);
  sc.dx = sc.wavelength / 2;
  sc.dz = sc.wavelength / 2;
  if (auto v = get("dx_m")) sc.dx = parse_double("dx_m", *v);
  if (auto v = get("dz_m")) sc.dz = parse_double("dz_m", *v);
  if (auto v = get("alpha_wg")) sc.alpha_wg = parse_double("alpha_wg", *v);
  if (auto v = get("gamma_wg")) sc.gamma_wg = parse_double("gamma_wg", *v);
  if (auto v = get("element_distances_m")) sc.element_distances = parse_list("element_distances_m", *v);

  if (auto v = get("K0_db")) sc.rician_factor = db_to_linear(parse_double("K0_db", *v));
  if (auto v = get("K0")) sc.rician_factor = parse_double("K0", *v);
  if (auto v = get("r")) sc.corr_coeff = parse_double("r", *v);
  if (auto v = get("pathloss_exponent")) sc.pathloss_exponent = parse_double("pathloss_exponent", *v);
  if (auto v = get("alpha0_db")) sc.ref_loss = db_to_linear(parse_double("alpha0_db", *v));
  if (auto v = get("D0_m")) sc.ref_distance = parse_double("D0_m", *v);
  if (auto v = get("N0_db")) sc.noise_bs = db_to_linear(parse_double("N0_db", *v));
  if (auto v = get("Nk_dbm")) sc.noise_ue = dbm_to_watts(parse_double("Nk_dbm", *v));
  if (auto v = get("Pmax_dbm")) sc.pmax = dbm_to_watts(parse_double("Pmax_dbm", *v));

  if (auto v = get("dma_position_m")) sc.dma_position = parse_vec3("dma_position_m", *v);
  if (auto v = get("user_center_m")) sc.user_center = parse_vec3("user_center_m", *v);
  if (auto v = get("user_radius_m")) sc.user_radius = parse_double("user_radius_m", *v);
  if (auto v = get("randomize_users")) sc.randomize_users = parse_bool("randomize_users", *v);

  if (auto v = get("constraint")) sc.constraint = constraint_from_string(trim(*v));
  if (auto v = get("q0_theta")) sc.q0_theta = parse_list("q0_theta", *v);
  if (auto v = get("trials")) sc.trials = static_cast<int>(parse_int("trials", *v));
  if (auto v = get("seed")) {
    const long long s = parse_int("seed", *v);
    if (s < 0) throw ConfigError("seed", "must be >= 0");
    sc.seed = static_cast<std::uint64_t>(s);
  }
  if (auto v = get("link")) sc.link = trim(*v);
  if (auto v = get("workers")) sc.workers = static_cast<int>(parse_int("workers", *v));

  auto& so = sc.solver;
  if (auto v = get("ewr_tol")) so.ewr_tol = parse_double("ewr_tol", *v);
  if (auto v = get("ewr_max_sweeps")) so.ewr_max_sweeps = static_cast<int>(parse_int("ewr_max_sweeps", *v));
  if (auto v = get("wmmse_tol")) so.wmmse_tol = parse_double("wmmse_tol", *v);
  if (auto v = get("wmmse_max_iter")) so.wmmse_max_iter = static_cast<int>(parse_int("wmmse_max_iter", *v));
  if (auto v = get("pdd_beta0")) so.pdd_beta0 = parse_double("pdd_beta0", *v);
  if (auto v = get("pdd_c1")) so.pdd_c1 = parse_double("pdd_c1", *v);
  if (auto v = get("pdd_c2")) so.pdd_c2 = parse_double("pdd_c2", *v);
  if (auto v = get("pdd_eps")) so.pdd_eps = parse_double("pdd_eps", *v);
  if (auto v = get("pdd_eta0")) so.pdd_eta0 = parse_double("pdd_eta0", *v);
  if (auto v = get("pdd_inner_tol")) so.pdd_inner_tol = parse_double("pdd_inner_tol", *v);
  if (auto v = get("pdd_inner_max")) so.pdd_inner_max = static_cast<int>(parse_int("pdd_inner_max", *v));
  if (auto v = get("pdd_outer_max")) so.pdd_outer_max = static_cast<int>(parse_int("pdd_outer_max", *v));

  auto& pw = sc.power;
  if (auto v = get("P_RF_dbm")) pw.p_rf = dbm_to_watts(parse_double("P_RF_dbm", *v));
  if (auto v = get("P_BS_dbm")) pw.p_bs = dbm_to_watts(parse_double("P_BS_dbm", *v));
  if (auto v = get("P_PS_dbm")) pw.p_ps = dbm_to_watts(parse_double("P_PS_dbm", *v));
  if (auto v = get("amp_efficiency")) pw.amp_efficiency = parse_double("amp_efficiency", *v);

  sc.validate();
  return sc;
}

Scenario load_scenario(const std::string& path, const RawConfig& overrides) {
  RawConfig raw = read_raw_config(path);
  for (const auto& [k, v] : overrides) {
    check_known(k);
    // K0 and K0_db are aliases: an override of one replaces the other.
    if (k == "K0") raw.erase("K0_db");
    if (k == "K0_db") raw.erase("K0");
    raw[k] = v;
  }
  return resolve_scenario(raw);
}

std::string canonical_dump(const Scenario& sc) {
  std::ostringstream os;
  os << std::setprecision(17);
  auto list = [&os](const char* key, const auto& xs) {
    os << key << '=';
    bool first = true;
    for (double x : xs) {
      os << (first ? "" : ",") << x;
      first = false;
    }
    os << '\n';
  };
  os << "L=" << sc.num_microstrips << "\nS=" << sc.elements_per_strip << "\nK=" << sc.num_users << '\n';
  os << "wavelength=" << sc.wavelength << "\ndx=" << sc.dx << "\ndz=" << sc.dz << '\n';
  os << "alpha_wg=" << sc.alpha_wg << "\ngamma_wg=" << sc.gamma_wg << '\n';
  list("element_distances", sc.element_distances);
  os << "K0=" << sc.rician_factor << "\nr=" << sc.corr_coeff << "\nexponent=" << sc.pathloss_exponent << '\n';
  os << "alpha0=" << sc.ref_loss << "\nD0=" << sc.ref_distance << '\n';
  os << "N0=" << sc.noise_bs << "\nNk=" << sc.noise_ue << "\nPmax=";
  if (sc.pmax) os << *sc.pmax;
  os << '\n';
  list("dma_position", sc.dma_position);
  list("user_center", sc.user_center);
  os << "user_radius=" << sc.user_radius << "\nrandomize_users=" << sc.randomize_users << '\n';
  os << "constraint=" << to_string(sc.constraint) << '\n';
  list("q0_theta", sc.q0_theta);
  os << "trials=" << sc.trials << "\nseed=" << sc.seed << "\nlink=" << sc.link << '\n';
  const auto& so = sc.solver;
  os << "ewr=" << so.ewr_tol << ',' << so.ewr_max_sweeps << "\nwmmse=" << so.wmmse_tol << ','
     << so.wmmse_max_iter << "\npdd=" << so.pdd_beta0 << ',' << so.pdd_c1 << ',' << so.pdd_c2 << ','
     << so.pdd_eps << ',' << so.pdd_eta0 << ',' << so.pdd_inner_tol << ',' << so.pdd_inner_max << ','
     << so.pdd_outer_max << '\n';
  const auto& pw = sc.power;
  os << "power=" << pw.p_rf << ',' << pw.p_bs << ',' << pw.p_ps << ',' << pw.amp_efficiency << '\n';
  return os.str();
}

std::uint64_t fingerprint(const Scenario& sc) {
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : canonical_dump(sc)) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

double path_loss(const Scenario& sc, double distance) {
  return sc.ref_loss * std::pow(distance / sc.ref_distance, -sc.pathloss_exponent);
}

Vec3 direction_from_angles(double azimuth, double elevation) {
  return {std::sin(elevation) * std::cos(azimuth), std::sin(elevation) * std::sin(azimuth), std::cos(elevation)};
}

std::vector<UserGeometry> place_users(const Scenario& sc) {
  const int k_users = sc.num_users;
  std::vector<double> angles(k_users);
  if (sc.randomize_users) {
    RngStream rng(sc.seed, kStreamUserPlacement);
    for (auto& a : angles) a = rng.uniform(0.0, 2.0 * kPi);
  } else {
    for (int k = 0; k < k_users; ++k) angles[k] = 2.0 * kPi * k / k_users;
  }
  std::vector<UserGeometry> users(k_users);
  for (int k = 0; k < k_users; ++k) {
    UserGeometry& u = users[k];
    u.position = {sc.user_center[0] + sc.user_radius * std::cos(angles[k]),
                  sc.user_center[1] + sc.user_radius * std::sin(angles[k]), sc.user_center[2]};
    const double dx = u.position[0] - sc.dma_position[0];
    const double dy = u.position[1] - sc.dma_position[1];
    const double dz = u.position[2] - sc.dma_position[2];
    u.distance = std::sqrt(dx * dx + dy * dy + dz * dz);
    u.elevation = std::acos(std::clamp(dz / u.distance, -1.0, 1.0));
    u.azimuth = std::atan2(dy, dx);
    u.pathloss = path_loss(sc, u.distance);
  }
  return users;
}

RngStream::RngStream(std::uint64_t master_seed, std::uint64_t trial) {
  std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                    static_cast<std::uint32_t>(trial), static_cast<std::uint32_t>(trial >> 32), 0x9E3779B9u};
  engine_.seed(seq);
}

cplx RngStream::complex_gaussian() {
  constexpr double s = 0.70710678118654752440;
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {s * re, s * im};
}

double RngStream::uniform(double lo, double hi) {
  return std::uniform_real_distribution<double>(lo, hi)(engine_);
}

RngStream rng_stream(std::uint64_t master_seed, std::uint64_t trial) { return RngStream(master_seed, trial); }

}  // namespace dmamiso
