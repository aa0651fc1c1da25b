#include "dmamiso/experiment.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "dmamiso/channel.hpp"
#include "dmamiso/dma.hpp"
#include "dmamiso/downlink.hpp"
#include "dmamiso/uplink.hpp"

namespace dmamiso {

namespace {

const std::vector<std::pair<Scheme, std::string>>& registry() {
  static const std::vector<std::pair<Scheme, std::string>> r{
      {Scheme::WmmseSic, "wmmse-sic"}, {Scheme::WmmseNsic, "wmmse-nsic"}, {Scheme::Pdd, "pdd"},
      {Scheme::RelaxedAo, "relaxed-ao"}, {Scheme::NoOpt, "no-opt"},      {Scheme::IcsiWmmse, "icsi-wmmse"},
      {Scheme::IcsiPdd, "icsi-pdd"},
  };
  return r;
}

std::string sanitize(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r' || c == ';') c = ' ';
  return s;
}

std::string join_flags(const std::vector<std::string>& flags) {
  std::string out;
  for (const auto& f : flags) {
    if (!out.empty()) out += ';';
    out += f;
  }
  return out;
}

struct Setup {
  std::vector<UserStat> stats;
  std::vector<CMat> blocks;
  DmaState start;
};

Setup prepare(const Scenario& sc) {
  Setup s;
  s.stats = stat_matrices(place_users(sc), sc).first;
  s.blocks = composite_blocks(s.stats);
  s.start = assemble_views(initial_weights(sc), microstrip_propagation(sc), sc);
  return s;
}

// Mean and standard error of per-trial rates (bits) into `rep`.
void summarise(RateReport& rep, const std::vector<double>& samples) {
  rep.trials = static_cast<int>(samples.size());
  if (samples.empty()) throw SolverError("every trial was dropped");
  double mean = 0.0;
  for (double v : samples) mean += v;
  mean /= static_cast<double>(samples.size());
  double var = 0.0;
  for (double v : samples) var += (v - mean) * (v - mean);
  rep.mc_mean_bits = mean;
  const auto n = static_cast<double>(samples.size());
  rep.mc_se_bits = samples.size() > 1 ? std::sqrt(var / (n - 1.0) / n) : 0.0;
}

// Uniform-power precoder: user k is served along (HQ)^H of its dominant
// direction, each with ||HQ w_k||^2 = Pmax / K.
CMat uniform_precoder(const DmaState& dma, const std::vector<CMat>& blocks, double pmax) {
  const CMat hq = dma.hq();
  const DownlinkContext ctx = make_downlink_context(blocks, 1.0, pmax);
  const CMat dirs = initial_beams(ctx);
  CMat w(hq.cols(), dirs.cols());
  const double share = pmax / static_cast<double>(dirs.cols());
  for (Eigen::Index k = 0; k < dirs.cols(); ++k) {
    CVec col = hq.adjoint() * dirs.col(k);
    const double used = (hq * col).squaredNorm();
    w.col(k) = used > 0 ? CVec(col * std::sqrt(share / used)) : col;
  }
  return w;
}

void run_uplink(const Scenario& sc, Decoder dec, ExperimentResult& out) {
  const Setup s = prepare(sc);
  const UplinkResult r = wmmse_run(dec, s.blocks, sc.noise_bs, s.start, wmmse_options(sc.solver));
  for (double v : r.surrogate_nats) out.trace_bits.push_back(nats_to_bits(v));
  out.iterations = r.iterations;
  if (!r.converged) out.flags.push_back("not_converged");
  if (r.ridged) out.flags.push_back("ridged");
  const RateMode mode = dec == Decoder::Sic ? RateMode::Sic : RateMode::Nsic;
  out.rate = mc_rate(mode, r.dma, nullptr, s.stats, sc, sc.trials, sc.seed);
}

void finish_downlink(const Scenario& sc, const Setup& s, const DmaState& dma, const CMat& w, ExperimentResult& out) {
  out.rate = mc_rate(RateMode::Downlink, dma, &w, s.stats, sc, sc.trials, sc.seed);
  out.ee = energy_efficiency(out.rate.mc_mean_bits, Architecture::Dma, sc.num_elements(), sc.num_microstrips,
                             sc.pmax_or_throw(), sc.power);
}

void run_pdd(const Scenario& sc, ExperimentResult& out) {
  const Setup s = prepare(sc);
  const DownlinkContext ctx = make_downlink_context(s.blocks, sc.noise_ue, sc.pmax_or_throw());
  const PddResult r = pdd_run(ctx, s.start, pdd_options(sc.solver));
  for (double v : r.surrogate_nats) out.trace_bits.push_back(nats_to_bits(v));
  out.violation = r.violation;
  out.iterations = r.outer_iterations;
  if (!r.converged) out.flags.push_back("not_converged");
  if (r.ridged) out.flags.push_back("ridged");
  finish_downlink(sc, s, r.dma, r.precoder, out);
}

void run_relaxed(const Scenario& sc, ExperimentResult& out) {
  const Setup s = prepare(sc);
  const DownlinkContext ctx = make_downlink_context(s.blocks, sc.noise_ue, sc.pmax_or_throw());
  const RelaxedResult r = relaxed_ao_run(ctx, s.start, pdd_options(sc.solver));
  for (double v : r.objective) out.trace_bits.push_back(nats_to_bits(v));
  out.iterations = r.iterations;
  if (!r.converged) out.flags.push_back("not_converged");
  finish_downlink(sc, s, r.dma, r.precoder, out);
}

void run_noopt(const Scenario& sc, ExperimentResult& out) {
  const Setup s = prepare(sc);
  const DmaState dma(CVec::Ones(sc.num_elements()), ConstraintSet::Unconstrained, microstrip_propagation(sc),
                     sc.elements_per_strip);
  if (sc.link == "downlink") {
    const CMat w = uniform_precoder(dma, s.blocks, sc.pmax_or_throw());
    finish_downlink(sc, s, dma, w, out);
  } else {
    out.rate = mc_rate(RateMode::Sic, dma, nullptr, s.stats, sc, sc.trials, sc.seed);
  }
}

// Re-optimises for every realised channel and averages the realised rates.
void run_icsi(const Scenario& sc, bool downlink, ExperimentResult& out) {
  const Setup s = prepare(sc);
  out.rate.mode = downlink ? RateMode::Downlink : RateMode::Sic;
  out.rate.surrogate_bits = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> samples;
  samples.reserve(sc.trials);
  long total_iters = 0;
  int unconverged = 0;
  for (int t = 0; t < sc.trials; ++t) {
    RngStream rng(sc.seed, static_cast<std::uint64_t>(t));
    const auto channels = sample_channels(s.stats, rng);
    double value = 0.0;
    try {
      if (downlink) {
        const DownlinkContext ctx = make_downlink_context(channels, sc.noise_ue, sc.pmax_or_throw());
        const PddResult r = pdd_run(ctx, s.start, pdd_options(sc.solver));
        value = downlink_rate_nats(r.dma, r.precoder, channels, sc.noise_ue);
        total_iters += r.outer_iterations;
        unconverged += r.converged ? 0 : 1;
      } else {
        const UplinkResult r = wmmse_run(Decoder::Sic, channels, sc.noise_bs, s.start, wmmse_options(sc.solver));
        value = sic_rate_nats(r.dma, channels, sc.noise_bs);
        total_iters += r.iterations;
        unconverged += r.converged ? 0 : 1;
      }
    } catch (const SolverError&) {
      ++out.rate.dropped;
      continue;
    }
    if (!std::isfinite(value)) {
      ++out.rate.dropped;
      continue;
    }
    samples.push_back(nats_to_bits(value));
  }
  summarise(out.rate, samples);
  out.iterations = static_cast<int>(total_iters);
  if (unconverged > 0) out.flags.push_back("not_converged=" + std::to_string(unconverged));
  if (downlink)
    out.ee = energy_efficiency(out.rate.mc_mean_bits, Architecture::Dma, sc.num_elements(), sc.num_microstrips,
                               sc.pmax_or_throw(), sc.power);
}

}  // namespace

std::string to_string(Scheme s) {
  for (const auto& [k, v] : registry())
    if (k == s) return v;
  return "?";
}

Scheme scheme_from_string(const std::string& name) {
  for (const auto& [k, v] : registry())
    if (v == name) return k;
  throw ConfigError("scheme", "unknown scheme '" + name + "'");
}

const std::vector<std::string>& scheme_names() {
  static const std::vector<std::string> names = [] {
    std::vector<std::string> n;
    for (const auto& kv : registry()) n.push_back(kv.second);
    return n;
  }();
  return names;
}

bool is_downlink(Scheme s, const Scenario& sc) {
  switch (s) {
    case Scheme::Pdd:
    case Scheme::RelaxedAo:
    case Scheme::IcsiPdd: return true;
    case Scheme::NoOpt: return sc.link == "downlink";
    default: return false;
  }
}

ExperimentResult run_experiment(const Scenario& sc, Scheme scheme) {
  sc.validate();
  if (is_downlink(scheme, sc)) sc.pmax_or_throw();
  ExperimentResult out;
  out.fingerprint = fingerprint(sc);
  out.scheme = to_string(scheme);
  out.seed = sc.seed;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    switch (scheme) {
      case Scheme::WmmseSic: run_uplink(sc, Decoder::Sic, out); break;
      case Scheme::WmmseNsic: run_uplink(sc, Decoder::Nsic, out); break;
      case Scheme::Pdd: run_pdd(sc, out); break;
      case Scheme::RelaxedAo: run_relaxed(sc, out); break;
      case Scheme::NoOpt: run_noopt(sc, out); break;
      case Scheme::IcsiWmmse: run_icsi(sc, false, out); break;
      case Scheme::IcsiPdd: run_icsi(sc, true, out); break;
    }
  } catch (const SolverError& e) {
    const double nan = std::numeric_limits<double>::quiet_NaN();
    out.rate.surrogate_bits = out.rate.mc_mean_bits = out.rate.mc_se_bits = nan;
    out.ee = nan;
    out.flags.push_back("error=" + sanitize(e.what()));
  }
  if (out.rate.dropped > 0) out.flags.push_back("dropped=" + std::to_string(out.rate.dropped));
  out.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

Scenario apply_sweep_value(const Scenario& sc, const std::string& variable, double value) {
  Scenario out = sc;
  auto as_int = [&](const char* key) {
    if (value != std::floor(value) || value < 1) throw ConfigError(key, "sweep value must be a positive integer");
    return static_cast<int>(value);
  };
  if (variable == "N") {
    const int n = as_int("N");
    if (n % sc.num_microstrips != 0) throw ConfigError("N", "must be a multiple of L");
    out.elements_per_strip = n / sc.num_microstrips;
    out.q0_theta.clear();
  } else if (variable == "L") {
    out.num_microstrips = as_int("L");
    out.q0_theta.clear();
  } else if (variable == "S") {
    out.elements_per_strip = as_int("S");
    out.q0_theta.clear();
  } else if (variable == "K") {
    out.num_users = as_int("K");
  } else if (variable == "K0") {
    out.rician_factor = db_to_linear(value);
  } else if (variable == "Pmax") {
    out.pmax = dbm_to_watts(value);
  } else {
    throw ConfigError("sweep", "unknown sweep variable '" + variable + "'");
  }
  out.validate();
  return out;
}

std::vector<ExperimentResult> sweep(const Scenario& sc, Scheme scheme, const std::string& variable,
                                    const std::vector<double>& values, int workers) {
  if (std::find(kSweepVariables.begin(), kSweepVariables.end(), variable) == kSweepVariables.end())
    throw ConfigError("sweep", "unknown sweep variable '" + variable + "'");
  std::vector<ExperimentResult> results(values.size());
  auto point = [&](std::size_t i) {
    ExperimentResult r;
    try {
      r = run_experiment(apply_sweep_value(sc, variable, values[i]), scheme);
    } catch (const ConfigError& e) {
      const double nan = std::numeric_limits<double>::quiet_NaN();
      r.scheme = to_string(scheme);
      r.seed = sc.seed;
      r.rate.surrogate_bits = r.rate.mc_mean_bits = r.rate.mc_se_bits = nan;
      r.flags.push_back("error=" + sanitize(e.what()));
    }
    r.variable = variable;
    r.value = values[i];
    results[i] = std::move(r);
  };
  const int n_threads = std::max(1, std::min<int>(workers, static_cast<int>(values.size())));
  if (n_threads == 1) {
    for (std::size_t i = 0; i < values.size(); ++i) point(i);
    return results;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::thread> pool;
  for (int t = 0; t < n_threads; ++t)
    pool.emplace_back([&] {
      for (std::size_t i = next++; i < values.size(); i = next++) point(i);
    });
  for (auto& th : pool) th.join();
  return results;
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

CsvRow to_row(const ExperimentResult& r) {
  CsvRow row;
  row.scheme = r.scheme;
  row.variable = r.variable;
  row.value = r.value;
  row.surrogate_bits = r.rate.surrogate_bits;
  row.mc_mean = r.rate.mc_mean_bits;
  row.mc_se = r.rate.mc_se_bits;
  row.ee = r.ee;
  row.iterations = r.iterations;
  row.seed = r.seed;
  row.flags = join_flags(r.flags);
  return row;
}

void write_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
  os << kCsvHeader << '\n';
  for (const auto& r : results) {
    const CsvRow row = to_row(r);
    os << row.scheme << ',' << row.variable << ',' << format_double(row.value) << ','
       << format_double(row.surrogate_bits) << ',' << format_double(row.mc_mean) << ',' << format_double(row.mc_se)
       << ',' << format_double(row.ee) << ',' << row.iterations << ',' << row.seed << ',' << row.flags << '\n';
  }
}

namespace {

double parse_double(const std::string& s, const char* col) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    throw ConfigError(col, "not a number: '" + s + "'");
  }
  if (used != s.size()) throw ConfigError(col, "trailing characters in '" + s + "'");
  return v;
}

}  // namespace

std::vector<CsvRow> read_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line != kCsvHeader) throw ConfigError("csv", "missing or unexpected header");
  std::vector<CsvRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) f.push_back(cell);
    if (!line.empty() && line.back() == ',') f.emplace_back();
    if (f.size() != 10) throw ConfigError("csv", "expected 10 fields, got " + std::to_string(f.size()));
    CsvRow r;
    r.scheme = f[0];
    r.variable = f[1];
    r.value = parse_double(f[2], "value");
    r.surrogate_bits = parse_double(f[3], "surrogate_bits");
    r.mc_mean = parse_double(f[4], "mc_mean");
    r.mc_se = parse_double(f[5], "mc_se");
    r.ee = parse_double(f[6], "ee");
    r.iterations = std::stoi(f[7]);
    r.seed = std::stoull(f[8]);
    r.flags = f[9];
    rows.push_back(std::move(r));
  }
  return rows;
}

void write_trace_csv(std::ostream& os, const std::vector<ExperimentResult>& results) {
  os << "scheme,variable,value,iteration,surrogate_bits,violation\n";
  for (const auto& r : results) {
    // PDD records one entry per outer iteration; the other traces start at iteration 0.
    const std::size_t first = r.violation.empty() ? 0 : 1;
    for (std::size_t i = 0; i < r.trace_bits.size(); ++i) {
      const double h = i < r.violation.size() ? r.violation[i] : std::numeric_limits<double>::quiet_NaN();
      os << r.scheme << ',' << r.variable << ',' << format_double(r.value) << ',' << i + first << ','
         << format_double(r.trace_bits[i]) << ',' << format_double(h) << '\n';
    }
  }
}

}  // namespace dmamiso
