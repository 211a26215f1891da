// End-to-end acceptance run. Prints one PASS/FAIL line per criterion and
// exits nonzero when any criterion fails. Tolerances are fixed below.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "sisca/assemble.hpp"
#include "sisca/harness.hpp"
#include "sisca/surrogate.hpp"
#include "test_util.hpp"

namespace {

using namespace sisca;

constexpr double kIdentityTol = 1e-12;
constexpr double kTightnessTol = 1e-9;
constexpr double kValidityTol = 1e-9;
constexpr double kGradientTol = 1e-4;
constexpr int kAuditSamples = 1000;
constexpr double kExpansionTol = 1e-8;
constexpr double kMonotoneGapFactor = 10.0;
constexpr double kOracleTol = 1e-6;
constexpr int kMedianIterLimit = 50;
constexpr double kProjectedShare = 0.90;
constexpr double kInitShare = 0.95;
constexpr double kInitSlackTol = 1e-6;
constexpr int kSeeds = 20;
constexpr int kMaxSeeds = 30;

int failures = 0;

void report(int id, bool pass, const std::string& what) {
  if (!pass) ++failures;
  std::printf("[%s] criterion %d: %s\n", pass ? "PASS" : "FAIL", id, what.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

Scenario scenario(int N, double power_dbm) {
  Scenario sc = default_scenario();
  sc.system.N = N;
  sc.system.power = dbm_to_watts(power_dbm);
  sc.system.tol_feas = kOracleTol;
  sc.sync_options();
  return sc;
}

std::vector<RunResult> run_seeds(const Scenario& sc, std::uint64_t first, int count) {
  ExperimentSpec spec;
  spec.mode = Mode::kSweepN;
  spec.grid = {static_cast<double>(sc.system.N)};
  spec.scenario = sc;
  spec.seed_count = count;
  spec.base_seed = first;
  return run_experiment(spec).runs;
}

int count_feasible(const std::vector<RunResult>& runs) {
  return static_cast<int>(std::count_if(runs.begin(), runs.end(), [](const RunResult& r) { return r.feasible; }));
}

/// Seeds from 0 upward until `kSeeds` feasible runs or `kMaxSeeds` seeds.
std::vector<RunResult> feasible_batch(const Scenario& sc, std::vector<RunResult> runs = {}) {
  if (runs.empty()) runs = run_seeds(sc, 0, kSeeds);
  while (count_feasible(runs) < kSeeds && static_cast<int>(runs.size()) < kMaxSeeds) {
    const int more = std::min(kSeeds - count_feasible(runs), kMaxSeeds - static_cast<int>(runs.size()));
    auto extra = run_seeds(sc, runs.size(), more);
    runs.insert(runs.end(), extra.begin(), extra.end());
  }
  return runs;
}

double mean_feasible_gain(const std::vector<RunResult>& runs) {
  double s = 0.0;
  int n = 0;
  for (const auto& r : runs) {
    if (!r.feasible) continue;
    s += r.gain;
    ++n;
  }
  return n ? s / n : 0.0;
}

void identities() {
  std::mt19937_64 rng(101);
  std::uniform_int_distribution<int> dim(1, 32);
  double worst_eq = 0.0;
  double worst_gap = 0.0;  // most negative norm_lhs - norm_rhs
  double worst_tight = 0.0;
  for (int t = 0; t < 10000; ++t) {
    const int n = dim(rng);
    const CVector u = testing::random_cvector(rng, n);
    const CVector v = testing::random_cvector(rng, n);
    const IdentitySides s = basic_identities_check(u, v);
    worst_eq = std::max({worst_eq, std::abs(s.re_lhs - s.re_rhs), std::abs(s.im_lhs - s.im_rhs)});
    worst_gap = std::min(worst_gap, s.norm_lhs - s.norm_rhs);
    const IdentitySides same = basic_identities_check(u, u);
    worst_tight = std::max(worst_tight, std::abs(same.norm_lhs - same.norm_rhs));
  }
  const bool pass = worst_eq <= kIdentityTol && worst_gap >= -kIdentityTol && worst_tight <= kIdentityTol;
  report(1, pass,
         fmt("identities over 1e4 pairs: worst equality error %.2e, worst inequality slack %.2e, tightness %.2e",
             worst_eq, worst_gap, worst_tight));
}

void surrogate_audit() {
  std::mt19937_64 dims(202);
  std::uniform_int_distribution<int> dL(1, 4), dK(1, 3), dN(1, 16);
  testing::SurrogateAudit worst;
  std::string where;
  for (int i = 0; i < 100; ++i) {
    const int L = dL(dims), K = dK(dims), N = dN(dims);
    const auto inst = testing::random_small_instance(5000 + i, L, K, N);
    const auto ctx = make_surrogate_context(inst.ch, inst.cfg, inst.point, ProblemKind::kBeampattern);
    const auto cases = testing::all_surrogate_cases(ctx, inst.ch, inst.cfg);
    std::mt19937_64 rng(7000 + i);
    const auto a = testing::audit_surrogates(cases, ctx.z0, rng, kAuditSamples, 5);
    if (a.worst_tightness > worst.worst_tightness) where = a.worst_case;
    worst.worst_tightness = std::max(worst.worst_tightness, a.worst_tightness);
    worst.worst_violation = std::max(worst.worst_violation, a.worst_violation);
    worst.worst_gradient = std::max(worst.worst_gradient, a.worst_gradient);
    worst.curvature_ok = worst.curvature_ok && a.curvature_ok;
  }
  const bool pass = worst.curvature_ok && worst.worst_tightness <= kTightnessTol &&
                    worst.worst_violation <= kValidityTol && worst.worst_gradient <= kGradientTol;
  report(2, pass,
         fmt("surrogates on 100 instances: tightness %.2e (%s), bound violation %.2e, slope error %.2e, curvature %s",
             worst.worst_tightness, where.empty() ? "-" : where.c_str(), worst.worst_violation, worst.worst_gradient,
             worst.curvature_ok ? "ok" : "wrong"));
}

void expansion_feasible() {
  std::mt19937_64 dims(303);
  std::uniform_int_distribution<int> dL(1, 4), dK(1, 3), dN(1, 16);
  std::uniform_real_distribution<double> lz(-4.0, 1.0);
  double worst = 0.0;
  for (int i = 0; i < 50; ++i) {
    const int L = dL(dims), K = dK(dims), N = dN(dims);
    auto inst = testing::random_small_instance(9000 + i, L, K, N);
    for (int k = 0; k < K; ++k) {
      inst.cfg.sinr_threshold[k] = 0.5 * std::max(1e-6, user_sinr(inst.point, inst.ch, inst.cfg, k));
      inst.cfg.leakage_threshold[k] = 2.0 * target_wiretap_sinr(inst.point, inst.ch, inst.cfg, k) + 1e-6;
    }
    const double zeta = std::pow(10.0, lz(dims));
    const auto ctx = make_surrogate_context(inst.ch, inst.cfg, inst.point, ProblemKind::kBeampattern);
    worst = std::max(worst, assemble_subproblem(ctx, zeta).max_residual(expansion_point(ctx, zeta)));
    const auto fctx = make_surrogate_context(inst.ch, inst.cfg, inst.point, ProblemKind::kFeasibility);
    worst = std::max(worst, assemble_feasibility_subproblem(fctx).max_residual(expansion_point(fctx)));
  }
  report(3, worst <= kExpansionTol, fmt("expansion point in every cone of 50 feasible instances: worst residual %.2e", worst));
}

void counts() {
  int mismatches = 0;
  for (int L = 1; L <= 4; ++L) {
    for (int K = 1; K <= 3; ++K) {
      for (int N : {4, 16, 64}) {
        const auto inst = testing::random_small_instance(L * 1000 + K * 100 + N, L, K, N);
        const auto ctx = make_surrogate_context(inst.ch, inst.cfg, inst.point, ProblemKind::kBeampattern);
        const CountReport r = count_report(assemble_subproblem(ctx, 0.1));
        if (r.variable_offset() != 0 || r.cone_offset() != 0) ++mismatches;
      }
    }
  }
  const auto inst = testing::random_small_instance(4300, 4, 3, 100);
  const auto ctx = make_surrogate_context(inst.ch, inst.cfg, inst.point, ProblemKind::kBeampattern);
  const CountReport big = count_report(assemble_subproblem(ctx, 0.1));
  const bool pass = mismatches == 0 && big.num_real_variables == 299 && big.num_cones == 192;
  report(7, pass,
         fmt("size counts: %d of 36 grid points off the formulas; (4,3,100) gives %lld variables, %lld cones",
             mismatches, static_cast<long long>(big.num_real_variables), static_cast<long long>(big.num_cones)));
}

void trajectory(const std::vector<RunResult>& runs) {
  int initialized = 0, bad_runs = 0, monotone_breaks = 0, infeasible_iterates = 0, failed_solves = 0;
  double worst_excess = 0.0;  // decrease divided by the gap bound
  for (const auto& r : runs) {
    if (!r.initialized) continue;
    ++initialized;
    bool ok = r.termination != Termination::kNumericalFailure;
    if (!ok) ++failed_solves;
    for (const auto& rec : r.trace.records) {
      const double drop = rec.augmented_before - rec.augmented_objective;
      if (drop > 0.0) worst_excess = std::max(worst_excess, drop / std::max(rec.solver_gap, 1e-300));
      if (drop > kMonotoneGapFactor * rec.solver_gap) {
        ++monotone_breaks;
        ok = false;
      }
      if (!rec.oracle_feasible) {
        ++infeasible_iterates;
        ok = false;
      }
    }
    if (!ok) ++bad_runs;
  }
  const bool pass = initialized > 0 && bad_runs == 0;
  report(4, pass,
         fmt("N=64 trajectories: %d/%d initialized seeds clean; %d objective decreases beyond %.0fx gap "
             "(worst %.2fx), %d infeasible iterates, %d solver failures",
             initialized - bad_runs, initialized, monotone_breaks, kMonotoneGapFactor, worst_excess,
             infeasible_iterates, failed_solves));
}

void median_iterations(const std::vector<RunResult>& runs) {
  std::vector<int> its;
  for (const auto& r : runs) {
    if (r.initialized) its.push_back(r.iterations);
  }
  std::sort(its.begin(), its.end());
  double median = -1.0;
  if (!its.empty()) {
    const std::size_t h = its.size() / 2;
    median = its.size() % 2 ? its[h] : 0.5 * (its[h - 1] + its[h]);
  }
  std::string list;
  for (int v : its) list += (list.empty() ? "" : ",") + std::to_string(v);
  report(5, !its.empty() && median <= kMedianIterLimit,
         fmt("N=100 median SCA iterations %.1f over %zu seeds (limit %d): %s", median, its.size(), kMedianIterLimit,
             list.c_str()));
}

void projected_feasible(const std::vector<RunResult>& runs) {
  const int n = static_cast<int>(runs.size());
  const int ok = count_feasible(runs);
  report(6, n > 0 && ok >= kProjectedShare * n,
         fmt("N=64 final points feasible with unit modulus enforced: %d/%d (need %.0f%%)", ok, n, 100 * kProjectedShare));
}

void initialization(const std::vector<RunResult>& runs) {
  const int n = static_cast<int>(runs.size());
  int ok = 0;
  for (const auto& r : runs) {
    if (r.initialized && r.init_slack < kInitSlackTol) ++ok;
  }
  Scenario sc = scenario(64, 30.0);
  sc.system.sinr_threshold.assign(sc.system.K, 1e12);
  sc.sync_options();
  const auto impossible = run_seeds(sc, 0, 1);
  const bool none = !impossible.front().initialized;
  report(9, n > 0 && ok >= kInitShare * n && none,
         fmt("initialization: %d/%d seeds reached slack < %.0e (need %.0f%%); impossible instance %s", ok, n,
             kInitSlackTol, 100 * kInitShare, none ? "rejected" : "ACCEPTED"));
}

void trends(const std::vector<RunResult>& n64, const std::vector<RunResult>& n100) {
  struct Point {
    double x;
    std::vector<RunResult> runs;
  };
  std::vector<Point> byN{{64, feasible_batch(scenario(64, 40.0), n64)},
                         {144, feasible_batch(scenario(144, 40.0))},
                         {256, feasible_batch(scenario(256, 40.0))}};
  std::vector<Point> byP{{35, feasible_batch(scenario(100, 35.0))},
                         {40, feasible_batch(scenario(100, 40.0), n100)},
                         {45, feasible_batch(scenario(100, 45.0))}};
  bool pass = true;
  std::string text;
  auto walk = [&](const std::vector<Point>& pts, const char* name) {
    double prev = -1.0;
    text += name;
    for (const auto& p : pts) {
      const int f = count_feasible(p.runs);
      const double g = mean_feasible_gain(p.runs);
      if (f < kSeeds || g <= prev) pass = false;
      prev = g;
      text += fmt(" %g:%.3fdBm(%d/%zu)", p.x, g > 0.0 ? watts_to_dbm(g) : -1.0 / 0.0, f, p.runs.size());
    }
    text += ";";
  };
  walk(byN, "gain vs N");
  walk(byP, " gain vs P[dBm]");
  report(8, pass, text);
}

}  // namespace

int main() {
  const auto t0 = std::chrono::steady_clock::now();
  identities();
  surrogate_audit();
  expansion_feasible();
  counts();

  const std::vector<RunResult> n64 = run_seeds(scenario(64, 40.0), 0, kSeeds);
  trajectory(n64);
  projected_feasible(n64);
  initialization(n64);

  const std::vector<RunResult> n100 = run_seeds(scenario(100, 40.0), 0, kSeeds);
  median_iterations(n100);
  trends(n64, n100);

  const double mins = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() / 60.0;
  std::printf("%d criteria failed, %.1f min\n", failures, mins);
  return failures == 0 ? 0 : 1;
}
