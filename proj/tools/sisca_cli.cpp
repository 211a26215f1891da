// Command-line front end for single solves, convergence traces and sweeps.

#include <cstdint>
#include <cstdio>
#include <exception>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "sisca/harness.hpp"

namespace {

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (used != item.size()) throw sisca::ConfigError("invalid grid value '" + item + "'");
    out.push_back(v);
  }
  return out;
}

void print_run(std::FILE* os, const sisca::RunResult& r) {
  std::fprintf(os, "seed %llu: %s after %d iterations, %s, gain %.6e W (%.3f dBm)\n",
              static_cast<unsigned long long>(r.seed), std::string(sisca::termination_name(r.termination)).c_str(),
              r.iterations, r.feasible ? "feasible" : "infeasible", r.gain,
              r.gain > 0.0 ? sisca::watts_to_dbm(r.gain) : -1.0 / 0.0);
  for (const auto& w : r.warnings) std::fprintf(os, "  warning: %s\n", w.c_str());
}

void print_summary(const sisca::ExperimentOutcome& out, const std::string& param) {
  std::printf("%12s %6s %9s %16s %12s %10s\n", param.c_str(), "runs", "feasible", "mean_gain_w", "mean_dbm",
              "median_it");
  for (const auto& s : out.summary) {
    std::printf("%12g %6d %9d %16.6e %12.3f %10.1f\n", s.value, s.runs, s.feasible_runs, s.mean_gain,
                s.mean_gain > 0.0 ? sisca::watts_to_dbm(s.mean_gain) : -1.0 / 0.0, s.median_iterations);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"IRS-assisted secure ISAC beampattern optimization"};
  app.require_subcommand(1);

  sisca::ExperimentSpec spec;
  std::optional<double> zeta;
  std::optional<int> max_iters;
  std::optional<double> tol;
  app.add_option("--zeta", zeta, "fixed regularization weight (W), disables the schedule");
  app.add_option("--max-iters", max_iters, "SCA iteration limit");
  app.add_option("--tol", tol, "SCA convergence tolerance");
  app.add_option("--workers", spec.workers, "worker threads (default: SISCA_WORKERS or all cores)");

  std::string config;
  std::uint64_t seed = 0;
  std::string out_dir;

  auto* solve = app.add_subcommand("solve", "solve one seeded instance");
  solve->add_option("--config", config, "scenario JSON")->required();
  solve->add_option("--seed", seed, "channel seed")->required();
  solve->add_option("--out", out_dir, "output directory for runs.csv and trace.csv");

  auto* conv = app.add_subcommand("convergence", "per-iteration trace of one instance");
  conv->add_option("--config", config, "scenario JSON")->required();
  conv->add_option("--seed", seed, "channel seed")->required();
  conv->add_option("--out", out_dir, "output directory (default: trace to stdout)");

  std::string param;
  std::string values;
  int seeds = 1;
  auto* sweep = app.add_subcommand("sweep", "average over seeds on a parameter grid");
  sweep->add_option("--config", config, "scenario JSON")->required();
  sweep->add_option("--param", param, "swept parameter")->required()->check(CLI::IsMember({"n", "power", "users"}));
  sweep->add_option("--values", values, "comma-separated grid (power in dBm)")->required();
  sweep->add_option("--seeds", seeds, "realizations per grid point")->required()->check(CLI::PositiveNumber);
  sweep->add_option("--base-seed", seed, "first seed");
  sweep->add_option("--out", out_dir, "output directory for runs.csv and summary.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : sisca::kExitConfig;
  }

  spec.config_path = config;
  spec.base_seed = seed;
  spec.out_dir = out_dir;
  spec.zeta = zeta;
  spec.max_iters = max_iters;
  spec.tol = tol;
  try {
    if (*solve) {
      spec.mode = sisca::Mode::kSolve;
    } else if (*conv) {
      spec.mode = sisca::Mode::kConvergence;
    } else {
      spec.mode = param == "n" ? sisca::Mode::kSweepN
                  : param == "power" ? sisca::Mode::kSweepPower
                                     : sisca::Mode::kSweepUsers;
      spec.grid = parse_values(values);
      spec.seed_count = seeds;
    }
    const sisca::ExperimentOutcome out = sisca::run_experiment(spec);
    const bool trace_to_stdout = spec.mode == sisca::Mode::kConvergence && out_dir.empty();
    if (trace_to_stdout && out.runs.front().initialized) {
      sisca::write_trace_csv(std::cout, out.runs.front().trace);
      std::cout.flush();
    } else if (sisca::is_sweep(spec.mode)) {
      print_summary(out, param);
    }
    if (!sisca::is_sweep(spec.mode)) print_run(trace_to_stdout ? stderr : stdout, out.runs.front());
    for (const auto& f : out.files) std::printf("wrote %s\n", f.c_str());
    return out.exit_code;
  } catch (const sisca::ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return sisca::kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return sisca::kExitConfig;
  }
}
