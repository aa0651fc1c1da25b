#pragma once

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "dmamiso/rates.hpp"
#include "dmamiso/scenario.hpp"

namespace dmamiso {

enum class Scheme { WmmseSic, WmmseNsic, Pdd, RelaxedAo, NoOpt, IcsiWmmse, IcsiPdd };

std::string to_string(Scheme s);
Scheme scheme_from_string(const std::string& name);
const std::vector<std::string>& scheme_names();
bool is_downlink(Scheme s, const Scenario& sc);

struct ExperimentResult {
  std::uint64_t fingerprint = 0;
  std::string scheme;
  std::string variable = "none";
  double value = 0;
  RateReport rate;
  double ee = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> trace_bits;  // surrogate rate per (outer) iteration
  std::vector<double> violation;   // PDD constraint violation per outer iteration
  int iterations = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> flags;
  double wall_seconds = 0;
};

/// Runs one scheme end to end on a resolved scenario. Solver failures are
/// caught and recorded in `flags`; configuration errors propagate.
ExperimentResult run_experiment(const Scenario& sc, Scheme scheme);

inline const std::vector<std::string> kSweepVariables{"N", "L", "S", "K0", "Pmax", "K"};

/// Copy of `sc` with the sweep variable set. N keeps L and sets S = N / L;
/// K0 is in dB and Pmax in dBm.
Scenario apply_sweep_value(const Scenario& sc, const std::string& variable, double value);

/// One result per value, ordered as `values`, computed on up to `workers`
/// threads.
std::vector<ExperimentResult> sweep(const Scenario& sc, Scheme scheme, const std::string& variable,
                                    const std::vector<double>& values, int workers);

inline constexpr const char* kCsvHeader = "scheme,variable,value,surrogate_bits,mc_mean,mc_se,ee,iterations,seed,flags";

struct CsvRow {
  std::string scheme;
  std::string variable;
  double value = 0;
  double surrogate_bits = 0;
  double mc_mean = 0;
  double mc_se = 0;
  double ee = 0;
  int iterations = 0;
  std::uint64_t seed = 0;
  std::string flags;
};

CsvRow to_row(const ExperimentResult& r);
void write_csv(std::ostream& os, const std::vector<ExperimentResult>& results);
/// Parses a CSV written by write_csv. Throws ConfigError on a bad header or row.
std::vector<CsvRow> read_csv(std::istream& is);

/// Convergence traces: scheme,variable,value,iteration,surrogate_bits,violation.
void write_trace_csv(std::ostream& os, const std::vector<ExperimentResult>& results);

/// %.17g formatting used by every numeric CSV field.
std::string format_double(double v);

}  // namespace dmamiso
