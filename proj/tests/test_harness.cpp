#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "sisca/harness.hpp"

namespace sisca {
namespace {

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) out.push_back(line);
  return out;
}

std::string read_file(const std::string& path) {
  std::ifstream f(path);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

/// Drops the trailing timing columns.
std::string strip_timing(const std::string& csv, int timing_cols) {
  std::string out;
  for (const auto& line : lines_of(csv)) {
    std::string l = line;
    if (!l.empty() && l[0] != '#') {
      for (int i = 0; i < timing_cols; ++i) l = l.substr(0, l.rfind(','));
    }
    out += l + "\n";
  }
  return out;
}

Scenario tiny() {
  Scenario s = default_scenario();
  s.system.N = 8;
  s.system.max_iters = 15;
  s.sync_options();
  return s;
}

TEST(Harness, TraceCsvContract) {
  const RunResult r = run_single(tiny(), 1);
  ASSERT_TRUE(r.initialized);
  std::ostringstream os;
  write_trace_csv(os, r.trace);
  const auto lines = lines_of(os.str());
  ASSERT_GE(lines.size(), 3u);
  EXPECT_EQ(lines[0], "# sisca-trace v1");
  EXPECT_EQ(lines[1], "iter,gain,augmented_objective,min_sinr_margin,max_leakage_margin,um_deviation,solve_ms");
  EXPECT_EQ(lines.size(), r.trace.records.size() + 3);
  EXPECT_EQ(lines[2].substr(0, 2), "0,");
  for (std::size_t i = 2; i < lines.size(); ++i) {
    EXPECT_EQ(std::count(lines[i].begin(), lines[i].end(), ','), 6) << lines[i];
  }
}

TEST(Harness, GridApplication) {
  const Scenario base = tiny();
  EXPECT_EQ(apply_grid_value(base, Mode::kSweepN, 36).system.N, 36);
  EXPECT_NEAR(apply_grid_value(base, Mode::kSweepPower, 35).system.power, dbm_to_watts(35), 1e-12);
  const Scenario k4 = apply_grid_value(base, Mode::kSweepUsers, 4);
  EXPECT_EQ(k4.system.K, 4);
  EXPECT_EQ(k4.system.sinr_threshold.size(), 4u);
  EXPECT_EQ(k4.system.noise_var.size(), 4u);
  EXPECT_THROW(apply_grid_value(base, Mode::kSweepN, 2.5), ConfigError);
  EXPECT_THROW(apply_grid_value(base, Mode::kSweepUsers, 0), ConfigError);
}

TEST(Harness, AveragesOnlyFeasibleRuns) {
  std::vector<RunResult> runs(4);
  runs[0].feasible = true;
  runs[0].gain = 1.0;
  runs[0].iterations = 10;
  runs[1].feasible = false;
  runs[1].gain = 100.0;
  runs[2].feasible = true;
  runs[2].gain = 3.0;
  runs[2].iterations = 20;
  runs[3].grid_index = 1;
  const auto s = summarize(runs, {64, 144});
  ASSERT_EQ(s.size(), 2u);
  EXPECT_EQ(s[0].runs, 3);
  EXPECT_EQ(s[0].feasible_runs, 2);
  EXPECT_DOUBLE_EQ(s[0].mean_gain, 2.0);
  EXPECT_DOUBLE_EQ(s[0].median_iterations, 15.0);
  EXPECT_EQ(s[1].feasible_runs, 0);
  EXPECT_EQ(s[1].mean_gain, 0.0);
}

TEST(Harness, ExitCodes) {
  std::vector<RunResult> runs(2);
  EXPECT_EQ(outcome_code(runs), kExitAllInfeasible);
  runs[1].termination = Termination::kNumericalFailure;
  EXPECT_EQ(outcome_code(runs), kExitSolverFailure);
  runs[0].feasible = true;
  EXPECT_EQ(outcome_code(runs), kExitOk);
}

TEST(Harness, SpecValidation) {
  ExperimentSpec spec;
  spec.mode = Mode::kSweepN;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.grid = {8};
  spec.seed_count = 0;
  EXPECT_THROW(spec.validate(), ConfigError);
  spec.mode = Mode::kSolve;
  spec.seed_count = 2;
  EXPECT_THROW(spec.validate(), ConfigError);
}

TEST(Harness, WorkerCountFromEnvironment) {
  EXPECT_EQ(resolve_workers(3), 3);
  ::setenv("SISCA_WORKERS", "2", 1);
  EXPECT_EQ(resolve_workers(0), 2);
  ::unsetenv("SISCA_WORKERS");
  EXPECT_GE(resolve_workers(0), 1);
}

TEST(Harness, SweepIsReproducibleAcrossWorkerCounts) {
  const auto dir = std::filesystem::temp_directory_path() / "sisca_harness_test";
  std::filesystem::remove_all(dir);
  ExperimentSpec spec;
  spec.mode = Mode::kSweepN;
  spec.scenario = tiny();
  spec.grid = {4, 8};
  spec.seed_count = 2;
  spec.out_dir = (dir / "a").string();
  spec.workers = 1;
  const ExperimentOutcome a = run_experiment(spec);
  spec.out_dir = (dir / "b").string();
  spec.workers = 3;
  const ExperimentOutcome b = run_experiment(spec);
  EXPECT_EQ(a.exit_code, kExitOk);
  ASSERT_EQ(a.runs.size(), 4u);
  EXPECT_EQ(a.runs[1].seed, 1u);
  EXPECT_EQ(a.runs[2].grid_value, 8.0);
  ASSERT_EQ(a.files.size(), 2u);

  const std::string runs_a = read_file((dir / "a" / "runs.csv").string());
  const std::string runs_b = read_file((dir / "b" / "runs.csv").string());
  EXPECT_EQ(lines_of(runs_a)[0], "# sisca-runs v1");
  EXPECT_EQ(strip_timing(runs_a, 2), strip_timing(runs_b, 2));
  const std::string sum_a = read_file((dir / "a" / "summary.csv").string());
  EXPECT_EQ(sum_a, read_file((dir / "b" / "summary.csv").string()));
  const auto sl = lines_of(sum_a);
  ASSERT_EQ(sl.size(), 4u);
  EXPECT_EQ(sl[0], "# sisca-summary v1");
  EXPECT_EQ(sl[1], "n,runs,feasible_runs,mean_gain_w,mean_gain_dbm,mean_iterations,median_iterations");
  std::filesystem::remove_all(dir);
}

TEST(Harness, OverridesReachTheRun) {
  ExperimentSpec spec;
  spec.mode = Mode::kSolve;
  spec.scenario = tiny();
  spec.max_iters = 2;
  spec.zeta = 1e-7;
  spec.base_seed = 3;
  const ExperimentOutcome out = run_experiment(spec);
  ASSERT_EQ(out.runs.size(), 1u);
  ASSERT_TRUE(out.runs[0].initialized);
  EXPECT_LE(out.runs[0].iterations, 2);
  EXPECT_NEAR(out.runs[0].zeta_final / 1e-7, 1.0, 1e-12);
  spec.tol = -1.0;
  EXPECT_THROW(run_experiment(spec), ConfigError);
}

}  // namespace
}  // namespace sisca
