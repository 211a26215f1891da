#pragma once

// SCA outer loop, the slack-minimizing initialization phase and the final
// unit-modulus projection. Subproblems are built on the normalized instance
// (normalize.hpp); every recorded quantity is physical and every feasibility
// verdict comes from the model-module oracle on the physical instance.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sisca/assemble.hpp"
#include "sisca/model.hpp"
#include "sisca/normalize.hpp"
#include "sisca/socp_solver.hpp"
#include "sisca/surrogate.hpp"

namespace sisca {

struct SolveOptions {
  std::optional<double> zeta;  // physical units; fixes zeta and disables the schedule
  double zeta_initial_fraction = 0.1;  // zeta0 = fraction * gain(X0, theta0) / N
  double zeta_growth = 5.0;
  double zeta_cap_factor = 1e3;
  int stall_window = 5;
  double stall_decrease = 0.01;
  double um_target = 1e-8;  // deviation below which zeta is never raised
  double tol_converge = 1e-4;
  int max_iters = 100;
  int init_attempts = 5;
  double init_slack_tol = 1e-6;
  double init_rel_change_tol = 1e-6;
  double eps_um = 1e-3;
  SurrogateScaling scaling = SurrogateScaling::kBalanced;
  SolverOptions solver;

  static SolveOptions from_config(const SystemConfig& cfg) {
    SolveOptions o;
    o.zeta = cfg.zeta;
    o.tol_converge = cfg.tol_converge;
    o.max_iters = cfg.max_iters;
    return o;
  }

  void validate() const {
    if (zeta && !(*zeta > 0.0)) throw std::invalid_argument("SolveOptions: zeta must be positive");
    if (!(zeta_initial_fraction > 0.0) || !(zeta_growth >= 1.0) || !(zeta_cap_factor >= 1.0) || stall_window < 1 ||
        !(tol_converge > 0.0) || max_iters < 1 || init_attempts < 1 || !(init_slack_tol > 0.0) ||
        !(eps_um > 0.0) || !(um_target >= 0.0)) {
      throw std::invalid_argument("SolveOptions: parameters must be positive");
    }
  }
};

enum class Termination { kConverged, kMaxIters, kNumericalFailure, kInfeasibleStart };

inline std::string_view termination_name(Termination t) {
  switch (t) {
    case Termination::kConverged: return "converged";
    case Termination::kMaxIters: return "max-iters";
    case Termination::kNumericalFailure: return "numerical-failure";
    case Termination::kInfeasibleStart: return "infeasible-start";
  }
  return "unknown";
}

/// One SCA step from iterate i to i + 1. Both augmented values use the
/// zeta of this step, so augmented_objective >= augmented_before is the
/// monotonicity the surrogates guarantee.
struct IterationRecord {
  int iter = 0;
  double gain = 0.0;  // at the new iterate
  double augmented_before = 0.0;
  double augmented_objective = 0.0;
  double zeta = 0.0;
  double min_sinr_margin = 0.0;  // min_k (gamma_k - Gamma_k)
  double max_leakage_margin = 0.0;  // max_k (gamma_hat_k - Gamma_hat_k), <= 0 when satisfied
  double power_margin = 0.0;
  double um_deviation = 0.0;
  double solve_ms = 0.0;
  double solver_gap = 0.0;  // duality gap bound of the subproblem, physical units
  int solver_iterations = 0;
  bool reduced_accuracy = false;
  bool oracle_feasible = false;  // relaxed |theta_n| <= 1
};

struct SolveTrace {
  std::vector<IterationRecord> records;
  Iterate final_iterate;
  Termination termination = Termination::kMaxIters;
  FeasibilityReport final_report;
  bool projected = false;
  std::vector<std::string> warnings;
  double zeta_initial = 0.0;  // physical
  double zeta_final = 0.0;
  double gain_initial = 0.0;

  int iterations() const { return static_cast<int>(records.size()); }
  double final_gain = 0.0;
};

struct InitResult {
  std::optional<Iterate> point;
  int attempts = 0;
  int iterations = 0;  // total feasibility subproblems solved
  double slack = std::numeric_limits<double>::infinity();  // best slack sum reached
  std::string reason;
};

namespace detail {

inline double augmented(const Iterate& it, const ChannelSet& ch, double zeta) {
  return beampattern_gain(it, ch) + zeta * it.theta.squaredNorm();
}

inline std::string format_double(double v) {
  std::ostringstream os;
  os.precision(3);
  os << std::scientific << v;
  return os.str();
}

}  // namespace detail

/// theta_n <- theta_n / |theta_n| when every deviation is within eps_um,
/// otherwise no projection and a warning. The report always enforces
/// |theta_n| = 1.
inline std::pair<Iterate, FeasibilityReport> finalize(const Iterate& it, const ChannelSet& ch,
                                                      const SystemConfig& cfg, const SolveOptions& opts,
                                                      std::vector<std::string>* warnings = nullptr,
                                                      bool* projected = nullptr) {
  const double dev = it.unit_modulus_deviation();
  Iterate out = it;
  const bool project = dev <= opts.eps_um;
  if (project) {
    for (Index n = 0; n < out.theta.size(); ++n) {
      const double r = std::abs(out.theta[n]);
      out.theta[n] = r > 0.0 ? out.theta[n] / r : cd(1.0, 0.0);
    }
  } else if (warnings) {
    warnings->push_back("unit modulus not binding: max deviation " + detail::format_double(dev) +
                        " exceeds " + detail::format_double(opts.eps_um) + "; not projected");
  }
  if (projected) *projected = project;
  FeasibilityReport rep = check_feasibility(out, ch, cfg, true);
  if (project && !rep.feasible && warnings) {
    warnings->push_back("post-projection violation: min relative margin " +
                        detail::format_double(rep.min_relative_margin()));
  }
  return {std::move(out), std::move(rep)};
}

/// Algorithm loop from a relaxed-feasible start.
inline SolveTrace run_sca(const ChannelSet& ch, const SystemConfig& cfg, const Iterate& start,
                          const SolveOptions& opts) {
  opts.validate();
  SolveTrace tr;
  const FeasibilityReport start_rep = check_feasibility(start, ch, cfg, false);
  if (!start_rep.feasible) {
    tr.termination = Termination::kInfeasibleStart;
    tr.final_iterate = start;
    tr.final_report = start_rep;
    tr.warnings.push_back("start point fails the feasibility oracle");
    return tr;
  }
  const NormalizedInstance ni = normalize_instance(ch, cfg);
  Iterate cur = ni.to_normalized(start);
  const double gain0 = beampattern_gain(cur, ni.channels);
  tr.gain_initial = ni.gain_to_physical(gain0);

  const bool fixed = opts.zeta.has_value();
  double zeta = fixed ? ni.zeta_to_normalized(*opts.zeta)
                      : std::max(opts.zeta_initial_fraction * gain0 / cfg.N, 1e-12);
  const double zeta_cap = zeta * opts.zeta_cap_factor;
  tr.zeta_initial = ni.zeta_to_physical(zeta);
  int last_escalation = 0;
  std::vector<double> um_history;
  auto escalate = [&](int i) {
    if (fixed || zeta >= zeta_cap) return false;
    zeta = std::min(zeta * opts.zeta_growth, zeta_cap);
    last_escalation = i + 1;
    return true;
  };

  tr.termination = Termination::kMaxIters;
  for (int i = 0; i < opts.max_iters; ++i) {
    const SurrogateContext ctx = make_surrogate_context(ni.channels, ni.config, cur, ProblemKind::kBeampattern,
                                                        opts.scaling);
    const ConeProgram prog = assemble_subproblem(ctx, zeta);
    const SolverResult res = solve(prog, opts.solver);
    if (res.status != SolverStatus::kOptimal) {
      tr.termination = Termination::kNumericalFailure;
      tr.warnings.push_back("subproblem " + std::to_string(i) + ": solver status " +
                            std::string(status_name(res.status)));
      break;
    }
    const Iterate next = ctx.layout.unpack(*res.z);
    const double before = detail::augmented(cur, ni.channels, zeta);
    const double after = detail::augmented(next, ni.channels, zeta);

    const Iterate phys = ni.to_physical(next);
    const FeasibilityReport rep = check_feasibility(phys, ch, cfg, false);
    IterationRecord rec;
    rec.iter = i + 1;
    rec.gain = beampattern_gain(phys, ch);
    rec.augmented_before = ni.gain_to_physical(before);
    rec.augmented_objective = ni.gain_to_physical(after);
    rec.zeta = ni.zeta_to_physical(zeta);
    rec.min_sinr_margin = rep.min_sinr_margin();
    rec.max_leakage_margin = -rep.min_leakage_margin();
    rec.power_margin = rep.power_margin;
    rec.um_deviation = next.unit_modulus_deviation();
    rec.solve_ms = res.stats.wall_ms;
    rec.solver_iterations = res.stats.iterations;
    rec.solver_gap = ni.gain_to_physical(res.stats.relative_gap *
                                         std::max(std::abs(after), std::abs(prog.objective_value(*res.z))));
    rec.reduced_accuracy = res.stats.reduced_accuracy;
    rec.oracle_feasible = rep.feasible;
    tr.records.push_back(rec);
    if (res.stats.reduced_accuracy) {
      tr.warnings.push_back("subproblem " + std::to_string(i) + ": reduced solver accuracy");
    }
    cur = next;

    const double um = rec.um_deviation;
    um_history.push_back(um);
    const double rel = std::abs(after - before) / std::max(std::abs(before), 1e-300);
    if (rel < opts.tol_converge) {
      if (um > opts.um_target && escalate(i)) continue;
      tr.termination = Termination::kConverged;
      break;
    }
    const int w = opts.stall_window;
    if (um > opts.um_target && i + 1 - last_escalation >= w &&
        um > (1.0 - opts.stall_decrease) * um_history[um_history.size() - 1 - w]) {
      escalate(i);
    }
  }
  tr.zeta_final = ni.zeta_to_physical(zeta);
  auto [fin, rep] = finalize(ni.to_physical(cur), ch, cfg, opts, &tr.warnings, &tr.projected);
  tr.final_iterate = std::move(fin);
  tr.final_report = std::move(rep);
  tr.final_gain = beampattern_gain(tr.final_iterate, ch);
  return tr;
}

/// Random restarts of the slack-minimizing SCA. Attempt a uses a stream
/// seeded from (seed, a); returns a point the oracle accepts, or nothing.
inline InitResult find_initial_point(const ChannelSet& ch, const SystemConfig& cfg, std::uint64_t seed,
                                     const SolveOptions& opts) {
  opts.validate();
  const NormalizedInstance ni = normalize_instance(ch, cfg);
  InitResult out;
  for (int attempt = 0; attempt < opts.init_attempts; ++attempt) {
    ++out.attempts;
    std::seed_seq sq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                     static_cast<std::uint32_t>(attempt), 0x1a17u};
    std::mt19937_64 rng(sq);
    std::uniform_real_distribution<double> phase(0.0, 2.0 * kPi);
    std::normal_distribution<double> nd;
    Iterate cur;
    cur.theta.resize(cfg.N);
    for (int n = 0; n < cfg.N; ++n) cur.theta[n] = std::polar(1.0, phase(rng));
    cur.X.resize(cfg.L, cfg.num_columns());
    for (Index j = 0; j < cur.X.cols(); ++j) {
      for (Index i = 0; i < cur.X.rows(); ++i) cur.X(i, j) = cd(nd(rng), nd(rng));
    }
    cur.X *= 0.9 / cur.X.norm();  // normalized budget is 1

    double prev = std::numeric_limits<double>::infinity();
    for (int it = 0; it < opts.max_iters; ++it) {
      const SurrogateContext ctx = make_surrogate_context(ni.channels, ni.config, cur, ProblemKind::kFeasibility,
                                                          opts.scaling);
      const SolverResult res = solve(assemble_feasibility_subproblem(ctx), opts.solver);
      ++out.iterations;
      if (res.status != SolverStatus::kOptimal) {
        out.reason = "attempt " + std::to_string(attempt) + ": solver status " + std::string(status_name(res.status));
        break;
      }
      cur = ctx.layout.unpack(*res.z);
      const double slack = std::max(0.0, -res.objective);
      out.slack = std::min(out.slack, slack);
      if (slack < opts.init_slack_tol) {
        const Iterate phys = ni.to_physical(cur);
        if (check_feasibility(phys, ch, cfg, false).feasible) {
          out.point = phys;
          out.reason.clear();
          return out;
        }
      }
      if (std::isfinite(prev) && std::abs(prev - slack) <= opts.init_rel_change_tol * std::max(prev, 1e-300)) {
        out.reason = "attempt " + std::to_string(attempt) + ": slack stalled at " + detail::format_double(slack);
        break;
      }
      prev = slack;
    }
    if (out.reason.empty()) out.reason = "attempt " + std::to_string(attempt) + ": iteration limit";
  }
  out.reason = "declared infeasible after " + std::to_string(out.attempts) + " attempts (" + out.reason + ")";
  return out;
}

}  // namespace sisca
