#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "dmamiso/experiment.hpp"
#include "dmamiso/scenario.hpp"

namespace {

int fail(const std::string& kind, const std::string& key, const std::string& message, int code) {
  nlohmann::json j{{"error", kind}, {"key", key}, {"message", message}};
  std::cerr << j.dump() << '\n';
  return code;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    if (b == std::string::npos) continue;
    const auto e = item.find_last_not_of(" \t");
    item = item.substr(b, e - b + 1);
    std::size_t used = 0;
    double v = 0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw dmamiso::ConfigError("values", "not a number: '" + item + "'");
    }
    if (used != item.size()) throw dmamiso::ConfigError("values", "not a number: '" + item + "'");
    out.push_back(v);
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"DMA multiuser beamforming simulator"};
  std::string config_path, scheme_name, sweep_var, values_text, out_path, trace_path;
  std::vector<std::string> sets;
  std::optional<std::uint64_t> seed;
  std::optional<int> trials, workers;

  app.add_option("--config", config_path, "scenario file (key = value or .json)")->required();
  app.add_option("--scheme", scheme_name, "one of: wmmse-sic, wmmse-nsic, pdd, relaxed-ao, no-opt, icsi-wmmse, icsi-pdd")
      ->required();
  auto* sweep_opt = app.add_option("--sweep", sweep_var, "sweep variable: N, L, S, K0, Pmax, K");
  app.add_option("--values", values_text, "comma-separated sweep values")->needs(sweep_opt);
  app.add_option("--seed", seed, "master seed");
  app.add_option("--trials", trials, "Monte-Carlo trials");
  app.add_option("--workers", workers, "concurrent sweep points");
  app.add_option("--out", out_path, "results CSV (stdout when omitted)");
  app.add_option("--trace", trace_path, "convergence trace CSV");
  app.add_option("--set", sets, "config override key=value (repeatable)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    return fail("usage", "", e.what(), 2);
  }

  try {
    dmamiso::RawConfig overrides = dmamiso::env_overrides();
    for (const auto& s : sets) {
      const auto eq = s.find('=');
      if (eq == std::string::npos) throw dmamiso::ConfigError("set", "expected key=value, got '" + s + "'");
      overrides[s.substr(0, eq)] = s.substr(eq + 1);
    }
    if (seed) overrides["seed"] = std::to_string(*seed);
    if (trials) overrides["trials"] = std::to_string(*trials);
    if (workers) overrides["workers"] = std::to_string(*workers);

    const dmamiso::Scenario sc = dmamiso::load_scenario(config_path, overrides);
    const dmamiso::Scheme scheme = dmamiso::scheme_from_string(scheme_name);

    std::vector<dmamiso::ExperimentResult> results;
    if (sweep_opt->count() > 0) {
      results = dmamiso::sweep(sc, scheme, sweep_var, parse_values(values_text), sc.workers);
    } else {
      results.push_back(dmamiso::run_experiment(sc, scheme));
    }

    if (out_path.empty()) {
      dmamiso::write_csv(std::cout, results);
    } else {
      std::ofstream os(out_path, std::ios::binary);
      if (!os) throw dmamiso::ConfigError("out", "cannot open '" + out_path + "'");
      dmamiso::write_csv(os, results);
    }
    if (!trace_path.empty()) {
      std::ofstream os(trace_path, std::ios::binary);
      if (!os) throw dmamiso::ConfigError("trace", "cannot open '" + trace_path + "'");
      dmamiso::write_trace_csv(os, results);
    }
    for (const auto& r : results)
      for (const auto& f : r.flags)
        if (f.rfind("error=", 0) == 0) return fail("solver", r.variable, f.substr(6), 3);
  } catch (const dmamiso::ConfigError& e) {
    return fail("config", e.key(), e.what(), 2);
  } catch (const dmamiso::Error& e) {
    return fail("solver", "", e.what(), 3);
  } catch (const std::exception& e) {
    return fail("internal", "", e.what(), 4);
  }
  return 0;
}
