#pragma once

// Experiment driver: single solves, convergence traces and parameter sweeps
// over seeded channel realizations, written as versioned CSV.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

#include "sisca/config_io.hpp"
#include "sisca/sca.hpp"

namespace sisca {

enum class Mode { kSolve, kConvergence, kSweepN, kSweepPower, kSweepUsers };

inline std::string_view mode_name(Mode m) {
  switch (m) {
    case Mode::kSolve: return "solve";
    case Mode::kConvergence: return "convergence";
    case Mode::kSweepN: return "sweep-n";
    case Mode::kSweepPower: return "sweep-power";
    case Mode::kSweepUsers: return "sweep-users";
  }
  return "unknown";
}

inline bool is_sweep(Mode m) { return m == Mode::kSweepN || m == Mode::kSweepPower || m == Mode::kSweepUsers; }

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitAllInfeasible = 3;
inline constexpr int kExitSolverFailure = 4;

struct ExperimentSpec {
  Mode mode = Mode::kSolve;
  std::string config_path;  // ignored when scenario is set
  std::optional<Scenario> scenario;
  std::vector<double> grid;  // sweep values: N, power in dBm, or K
  int seed_count = 1;
  std::uint64_t base_seed = 0;
  std::string out_dir;  // empty: no files
  // Command-line overrides.
  std::optional<double> zeta;
  std::optional<int> max_iters;
  std::optional<double> tol;
  int workers = 0;  // 0: SISCA_WORKERS, else hardware concurrency

  void validate() const {
    if (seed_count < 1) throw ConfigError("seed count must be >= 1");
    if (is_sweep(mode) && grid.empty()) throw ConfigError("sweep needs at least one grid value");
    if (!is_sweep(mode) && seed_count != 1) throw ConfigError("solve and convergence take a single seed");
  }
};

struct RunResult {
  std::size_t grid_index = 0;
  double grid_value = 0.0;
  std::uint64_t seed = 0;
  bool initialized = false;
  int init_attempts = 0;
  int init_iterations = 0;
  double init_slack = 0.0;
  Termination termination = Termination::kInfeasibleStart;
  int iterations = 0;
  bool feasible = false;  // final oracle verdict, unit modulus enforced
  bool projected = false;
  double gain_initial = 0.0;
  double gain = 0.0;  // W
  double min_sinr_margin = 0.0;
  double max_leakage_margin = 0.0;
  double um_deviation = 0.0;  // before projection
  double zeta_final = 0.0;
  double init_ms = 0.0;
  double sca_ms = 0.0;
  std::vector<std::string> warnings;
  SolveTrace trace;
};

struct GridSummary {
  double value = 0.0;
  int runs = 0;
  int feasible_runs = 0;
  double mean_gain = 0.0;  // over feasible runs, W
  double mean_iterations = 0.0;
  double median_iterations = 0.0;
};

struct ExperimentOutcome {
  int exit_code = kExitOk;
  std::vector<RunResult> runs;  // (grid, seed) order
  std::vector<GridSummary> summary;
  std::vector<std::string> files;
};

/// Worker count: explicit request, else SISCA_WORKERS, else hardware.
inline int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("SISCA_WORKERS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

/// Scenario at one sweep grid point.
inline Scenario apply_grid_value(Scenario s, Mode mode, double value) {
  auto as_count = [&](const char* what) {
    const double r = std::round(value);
    if (std::abs(r - value) > 1e-9 || r < 1.0) throw ConfigError(std::string(what) + " grid values must be positive integers");
    return static_cast<int>(r);
  };
  switch (mode) {
    case Mode::kSweepN:
      s.system.N = as_count("n");
      break;
    case Mode::kSweepPower:
      s.system.power = dbm_to_watts(value);
      break;
    case Mode::kSweepUsers: {
      const int K = as_count("users");
      if (!s.geometry.fixed_user_positions.empty() && s.geometry.fixed_user_positions.size() != std::size_t(K)) {
        throw ConfigError("users sweep needs randomly dropped users (no fixed user_positions)");
      }
      auto resize = [K](std::vector<double>& v) { v.assign(static_cast<std::size_t>(K), v.front()); };
      resize(s.system.sinr_threshold);
      resize(s.system.leakage_threshold);
      resize(s.system.noise_var);
      s.system.K = K;
      break;
    }
    default:
      break;
  }
  s.system.validate();
  return s;
}

/// One seeded realization end to end: channels, initialization, SCA, final
/// projection and oracle verdict.
inline RunResult run_single(const Scenario& sc, std::uint64_t seed) {
  using clock = std::chrono::steady_clock;
  RunResult r;
  r.seed = seed;
  const Geometry geo = drop_users(sc.geometry, sc.system.K, seed);
  const ChannelSet ch = generate_channels(sc.system, geo, seed, sc.fading);
  const auto t0 = clock::now();
  const InitResult init = find_initial_point(ch, sc.system, seed, sc.options);
  const auto t1 = clock::now();
  r.init_ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  r.init_attempts = init.attempts;
  r.init_iterations = init.iterations;
  r.init_slack = init.slack;
  if (!init.point) {
    r.termination = Termination::kInfeasibleStart;
    r.warnings.push_back(init.reason);
    return r;
  }
  r.initialized = true;
  r.trace = run_sca(ch, sc.system, *init.point, sc.options);
  r.sca_ms = std::chrono::duration<double, std::milli>(clock::now() - t1).count();
  const SolveTrace& tr = r.trace;
  r.termination = tr.termination;
  r.iterations = tr.iterations();
  r.feasible = tr.final_report.feasible && tr.termination != Termination::kInfeasibleStart;
  r.projected = tr.projected;
  r.gain_initial = tr.gain_initial;
  r.gain = tr.final_gain;
  r.min_sinr_margin = tr.final_report.min_sinr_margin();
  r.max_leakage_margin = -tr.final_report.min_leakage_margin();
  r.um_deviation = tr.records.empty() ? 0.0 : tr.records.back().um_deviation;
  r.zeta_final = tr.zeta_final;
  r.warnings.insert(r.warnings.end(), tr.warnings.begin(), tr.warnings.end());
  return r;
}

namespace detail {

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10e", v);
  return buf;
}

inline std::string fmt_ms(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

inline std::string gain_dbm(double w) { return w > 0.0 ? fmt(watts_to_dbm(w)) : "nan"; }

inline std::string csv_escape(const std::string& s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

}  // namespace detail

inline constexpr std::string_view kRunsHeader = "# sisca-runs v1";
inline constexpr std::string_view kSummaryHeader = "# sisca-summary v1";
inline constexpr std::string_view kTraceHeader = "# sisca-trace v1";

/// Per-run rows; timing columns last.
inline void write_runs_csv(std::ostream& os, const std::vector<RunResult>& runs, std::string_view param) {
  os << kRunsHeader << "\n";
  os << param << ",seed,initialized,termination,iterations,feasible,projected,gain_w,gain_dbm,gain_initial_w,"
     << "min_sinr_margin,max_leakage_margin,um_deviation,zeta_final,init_attempts,init_iterations,warnings,"
     << "init_ms,sca_ms\n";
  for (const auto& r : runs) {
    std::string warn;
    for (const auto& w : r.warnings) warn += (warn.empty() ? "" : "; ") + w;
    os << detail::fmt(r.grid_value) << ',' << r.seed << ',' << int(r.initialized) << ','
       << termination_name(r.termination) << ',' << r.iterations << ',' << int(r.feasible) << ','
       << int(r.projected) << ',' << detail::fmt(r.gain) << ',' << detail::gain_dbm(r.gain) << ','
       << detail::fmt(r.gain_initial) << ',' << detail::fmt(r.min_sinr_margin) << ','
       << detail::fmt(r.max_leakage_margin) << ',' << detail::fmt(r.um_deviation) << ','
       << detail::fmt(r.zeta_final) << ',' << r.init_attempts << ',' << r.init_iterations << ','
       << detail::csv_escape(warn) << ',' << detail::fmt_ms(r.init_ms) << ',' << detail::fmt_ms(r.sca_ms) << "\n";
  }
}

inline void write_summary_csv(std::ostream& os, const std::vector<GridSummary>& rows, std::string_view param) {
  os << kSummaryHeader << "\n";
  os << param << ",runs,feasible_runs,mean_gain_w,mean_gain_dbm,mean_iterations,median_iterations\n";
  for (const auto& s : rows) {
    os << detail::fmt(s.value) << ',' << s.runs << ',' << s.feasible_runs << ',' << detail::fmt(s.mean_gain) << ','
       << detail::gain_dbm(s.mean_gain) << ',' << detail::fmt(s.mean_iterations) << ','
       << detail::fmt(s.median_iterations) << "\n";
  }
}

/// Row 0 is the initial point.
inline void write_trace_csv(std::ostream& os, const SolveTrace& tr) {
  os << kTraceHeader << "\n";
  os << "iter,gain,augmented_objective,min_sinr_margin,max_leakage_margin,um_deviation,solve_ms\n";
  if (!tr.records.empty()) {
    const auto& first = tr.records.front();
    os << 0 << ',' << detail::fmt(tr.gain_initial) << ',' << detail::fmt(first.augmented_before) << ",,,,"
       << detail::fmt_ms(0.0) << "\n";
  }
  for (const auto& r : tr.records) {
    os << r.iter << ',' << detail::fmt(r.gain) << ',' << detail::fmt(r.augmented_objective) << ','
       << detail::fmt(r.min_sinr_margin) << ',' << detail::fmt(r.max_leakage_margin) << ','
       << detail::fmt(r.um_deviation) << ',' << detail::fmt_ms(r.solve_ms) << "\n";
  }
}

inline std::vector<GridSummary> summarize(const std::vector<RunResult>& runs, const std::vector<double>& grid) {
  std::vector<GridSummary> out;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    GridSummary s;
    s.value = grid[g];
    std::vector<int> its;
    double sum = 0.0;
    for (const auto& r : runs) {
      if (r.grid_index != g) continue;
      ++s.runs;
      if (!r.feasible) continue;
      ++s.feasible_runs;
      sum += r.gain;
      its.push_back(r.iterations);
    }
    if (s.feasible_runs > 0) {
      s.mean_gain = sum / s.feasible_runs;
      double isum = 0.0;
      for (int i : its) isum += i;
      s.mean_iterations = isum / static_cast<double>(its.size());
      std::sort(its.begin(), its.end());
      const std::size_t h = its.size() / 2;
      s.median_iterations = its.size() % 2 ? its[h] : 0.5 * (its[h - 1] + its[h]);
    }
    out.push_back(s);
  }
  return out;
}

/// 0 when some run is feasible; otherwise 4 if any run hit a solver
/// failure, else 3.
inline int outcome_code(const std::vector<RunResult>& runs) {
  bool any_feasible = false;
  bool any_failure = false;
  for (const auto& r : runs) {
    any_feasible = any_feasible || r.feasible;
    any_failure = any_failure || r.termination == Termination::kNumericalFailure;
  }
  if (any_feasible) return kExitOk;
  return any_failure ? kExitSolverFailure : kExitAllInfeasible;
}

/// Runs every (grid point, seed) pair on a worker pool and writes the CSV
/// files. Throws ConfigError for invalid input and std::runtime_error for
/// I/O failures.
inline ExperimentOutcome run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  Scenario base = spec.scenario ? *spec.scenario : load_scenario(spec.config_path);
  if (spec.zeta) base.system.zeta = *spec.zeta;
  if (spec.max_iters) base.system.max_iters = *spec.max_iters;
  if (spec.tol) base.system.tol_converge = *spec.tol;
  try {
    base.system.validate();
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  base.sync_options();

  const std::vector<double> grid = is_sweep(spec.mode) ? spec.grid : std::vector<double>{0.0};
  std::vector<Scenario> scenarios;
  for (double v : grid) scenarios.push_back(apply_grid_value(base, spec.mode, v));

  struct Job {
    std::size_t g;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    for (int s = 0; s < spec.seed_count; ++s) jobs.push_back({g, spec.base_seed + static_cast<std::uint64_t>(s)});
  }
  ExperimentOutcome out;
  out.runs.resize(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      RunResult r = run_single(scenarios[jobs[i].g], jobs[i].seed);
      r.grid_index = jobs[i].g;
      r.grid_value = grid[jobs[i].g];
      out.runs[i] = std::move(r);
    }
  };
  const int nw = std::min<int>(resolve_workers(spec.workers), static_cast<int>(jobs.size()));
  if (nw <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < nw; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  out.summary = summarize(out.runs, grid);
  out.exit_code = outcome_code(out.runs);

  if (!spec.out_dir.empty()) {
    namespace fs = std::filesystem;
    std::error_code ec;
    fs::create_directories(spec.out_dir, ec);
    if (ec) throw std::runtime_error("cannot create output directory '" + spec.out_dir + "': " + ec.message());
    auto open = [&](const std::string& name) {
      const std::string path = (fs::path(spec.out_dir) / name).string();
      std::ofstream f(path);
      if (!f) throw std::runtime_error("cannot write '" + path + "'");
      out.files.push_back(path);
      return f;
    };
    const std::string_view param = spec.mode == Mode::kSweepN       ? "n"
                                   : spec.mode == Mode::kSweepPower ? "power_dbm"
                                   : spec.mode == Mode::kSweepUsers ? "users"
                                                                    : "grid";
    {
      auto f = open("runs.csv");
      write_runs_csv(f, out.runs, param);
    }
    if (is_sweep(spec.mode)) {
      auto f = open("summary.csv");
      write_summary_csv(f, out.summary, param);
    } else if (out.runs.front().initialized) {
      auto f = open("trace.csv");
      write_trace_csv(f, out.runs.front().trace);
    }
  }
  return out;
}

}  // namespace sisca
