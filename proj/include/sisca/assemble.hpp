#pragma once

// SCA subproblems as second-order cone programs.
//
// Every constraint "convex quadratic <= concave quadratic" is one cone via
// quadratic_cone; the power budget and |theta_n| <= 1 are plain norm cones.
// Per subproblem: 4K(K+L-1) + 4K majorant cones, K user-SINR cones, K
// leakage cones, one power cone, N unit-modulus cones and one epigraph
// cone; the feasibility variant drops the epigraph and adds 2K slack cones.

#include <cmath>
#include <string>

#include "sisca/cone_program.hpp"
#include "sisca/surrogate.hpp"

namespace sisca {

namespace detail {

inline SurrogateExpr linear_var(Index var, double coef, Index n, Curvature curv) {
  SurrogateExpr e;
  e.curvature = curv;
  e.linear = RVector::Zero(n);
  e.linear[var] = coef;
  return e;
}

inline SurrogateExpr constant_expr(double c, Index n, Curvature curv) {
  SurrogateExpr e;
  e.curvature = curv;
  e.constant = c;
  e.linear = RVector::Zero(n);
  return e;
}

inline SurrogateExpr scaled(SurrogateExpr e, double s) {
  e.constant *= s;
  e.linear *= s;
  for (auto& t : e.terms) t.coef *= s;
  return e;
}

// lhs (convex) <= rhs (concave) as one cone.
inline SecondOrderCone encode_inequality(const SurrogateExpr& lhs, const SurrogateExpr& rhs, ConstraintTag tag,
                                         std::string label) {
  if (lhs.curvature != Curvature::kConvex || rhs.curvature != Curvature::kConcave ||
      !lhs.curvature_consistent() || !rhs.curvature_consistent()) {
    throw std::logic_error("encode_inequality: curvature mismatch");
  }
  std::vector<QuadTerm> terms;
  for (const auto& t : lhs.terms) {
    if (t.coef > 0.0) terms.push_back(t);
  }
  for (const auto& t : rhs.terms) {
    if (t.coef < 0.0) terms.push_back({-t.coef, t.expr});
  }
  return quadratic_cone(terms, rhs.linear - lhs.linear, rhs.constant - lhs.constant, tag, std::move(label));
}

inline std::string pair_label(int k, int l) { return "k=" + std::to_string(k) + ",l=" + std::to_string(l); }
inline std::string user_label(int k) { return "k=" + std::to_string(k); }

// Constraints shared by the beampattern and feasibility programs.
inline void add_common_cones(const SurrogateContext& ctx, ConeProgram& prog) {
  const auto& lay = ctx.layout;
  const auto& cfg = ctx.config;
  const Index n = lay.size();
  const int K = lay.K();
  const int M = lay.M();
  const bool slacked = lay.kind() == ProblemKind::kFeasibility;

  for (int k = 0; k < K; ++k) {
    for (int l = 0; l < M; ++l) {
      if (l == k) continue;
      const MajorantSet mj = interference_majorants(ctx, k, l);
      const auto p = linear_var(lay.p(k, l), 1.0, n, Curvature::kConcave);
      const auto pb = linear_var(lay.p_bar(k, l), 1.0, n, Curvature::kConcave);
      prog.cones.push_back(encode_inequality(mj.re_pos, p, ConstraintTag::kInterferenceRePos, pair_label(k, l)));
      prog.cones.push_back(encode_inequality(mj.re_neg, p, ConstraintTag::kInterferenceReNeg, pair_label(k, l)));
      prog.cones.push_back(encode_inequality(mj.im_pos, pb, ConstraintTag::kInterferenceImPos, pair_label(k, l)));
      prog.cones.push_back(encode_inequality(mj.im_neg, pb, ConstraintTag::kInterferenceImNeg, pair_label(k, l)));
    }
  }
  for (int k = 0; k < K; ++k) {
    const MajorantSet mj = leakage_signal_majorants(ctx, k);
    const auto t = linear_var(lay.tau(k), 1.0, n, Curvature::kConcave);
    const auto tb = linear_var(lay.tau_bar(k), 1.0, n, Curvature::kConcave);
    prog.cones.push_back(encode_inequality(mj.re_pos, t, ConstraintTag::kLeakageRePos, user_label(k)));
    prog.cones.push_back(encode_inequality(mj.re_neg, t, ConstraintTag::kLeakageReNeg, user_label(k)));
    prog.cones.push_back(encode_inequality(mj.im_pos, tb, ConstraintTag::kLeakageImPos, user_label(k)));
    prog.cones.push_back(encode_inequality(mj.im_neg, tb, ConstraintTag::kLeakageImNeg, user_label(k)));
  }

  // sigma_k^2 + sum_l (p_kl^2 + p_bar_kl^2) <= f_bar_k / Gamma_k (+ delta_k)
  for (int k = 0; k < K; ++k) {
    SurrogateExpr lhs = constant_expr(cfg.noise_var[k], n, Curvature::kConvex);
    for (int l = 0; l < M; ++l) {
      if (l == k) continue;
      lhs.terms.push_back({1.0, AffineVectorExpr::select(lay.p(k, l), n)});
      lhs.terms.push_back({1.0, AffineVectorExpr::select(lay.p_bar(k, l), n)});
    }
    SurrogateExpr rhs = scaled(user_signal_minorant(ctx, k), 1.0 / cfg.sinr_threshold[k]);
    if (slacked) rhs.linear[lay.delta(k)] += 1.0;
    prog.cones.push_back(encode_inequality(lhs, rhs, ConstraintTag::kUserSinr, user_label(k)));
  }

  // (tau_k^2 + tau_bar_k^2) / Gamma_hat_k <= sigma_T^2 + sum_{l != k} f_l (+ delta_bar_k)
  for (int k = 0; k < K; ++k) {
    SurrogateExpr lhs = constant_expr(0.0, n, Curvature::kConvex);
    const double w = 1.0 / cfg.leakage_threshold[k];
    lhs.terms.push_back({w, AffineVectorExpr::select(lay.tau(k), n)});
    lhs.terms.push_back({w, AffineVectorExpr::select(lay.tau_bar(k), n)});
    SurrogateExpr rhs = leakage_interference_minorant(ctx, k);
    if (slacked) rhs.linear[lay.delta_bar(k)] += 1.0;
    prog.cones.push_back(encode_inequality(lhs, rhs, ConstraintTag::kTargetLeakage, user_label(k)));
  }

  // ||vec X|| <= sqrt(P)
  {
    const Range xb = lay.x_block();
    RMatrix A = RMatrix::Zero(xb.size, n);
    for (Index i = 0; i < xb.size; ++i) A(i, xb.start + i) = 1.0;
    prog.cones.push_back(norm_cone(A, RVector::Zero(xb.size), RVector::Zero(n), std::sqrt(cfg.power),
                                   ConstraintTag::kTransmitPower));
  }

  // |theta_n| <= 1
  for (int i = 0; i < lay.N(); ++i) {
    RMatrix A = RMatrix::Zero(2, n);
    A(0, lay.theta_re(i)) = 1.0;
    A(1, lay.theta_im(i)) = 1.0;
    prog.cones.push_back(norm_cone(A, RVector::Zero(2), RVector::Zero(n), 1.0, ConstraintTag::kUnitModulus,
                                   "n=" + std::to_string(i)));
  }
}

}  // namespace detail

/// Beampattern subproblem: maximize t s.t. t <= sum_m f_m + zeta * regularizer
/// and the surrogate-restricted constraints.
inline ConeProgram assemble_subproblem(const SurrogateContext& ctx, double zeta) {
  if (ctx.layout.kind() != ProblemKind::kBeampattern) {
    throw std::invalid_argument("assemble_subproblem: context was built for the feasibility problem");
  }
  if (!(zeta >= 0.0) || !std::isfinite(zeta)) throw std::invalid_argument("assemble_subproblem: invalid zeta");
  const auto& lay = ctx.layout;
  const Index n = lay.size();
  ConeProgram prog;
  prog.num_vars = n;
  prog.layout = lay;
  prog.objective = RVector::Zero(n);
  prog.objective[lay.epigraph()] = 1.0;
  detail::add_common_cones(ctx, prog);

  SurrogateExpr rhs = detail::scaled(regularizer_minorant(ctx), zeta);
  for (int m = 0; m < lay.M(); ++m) rhs += objective_minorant(ctx, m);
  const auto lhs = detail::linear_var(lay.epigraph(), 1.0, n, Curvature::kConvex);
  prog.cones.push_back(detail::encode_inequality(lhs, rhs, ConstraintTag::kObjectiveEpigraph, {}));
  return prog;
}

/// Initialization subproblem: minimize sum_k (delta_k + delta_bar_k) with the
/// slacked user-SINR and leakage constraints.
inline ConeProgram assemble_feasibility_subproblem(const SurrogateContext& ctx) {
  if (ctx.layout.kind() != ProblemKind::kFeasibility) {
    throw std::invalid_argument("assemble_feasibility_subproblem: context was built for the beampattern problem");
  }
  const auto& lay = ctx.layout;
  const Index n = lay.size();
  ConeProgram prog;
  prog.num_vars = n;
  prog.layout = lay;
  prog.objective = RVector::Zero(n);
  for (int k = 0; k < lay.K(); ++k) {
    prog.objective[lay.delta(k)] = -1.0;
    prog.objective[lay.delta_bar(k)] = -1.0;
  }
  detail::add_common_cones(ctx, prog);
  for (int k = 0; k < lay.K(); ++k) {
    RVector head = RVector::Zero(n);
    head[lay.delta(k)] = 1.0;
    prog.cones.push_back(norm_cone(RMatrix(0, n), RVector(0), head, 0.0, ConstraintTag::kSlackNonneg,
                                   "delta,k=" + std::to_string(k)));
    head.setZero();
    head[lay.delta_bar(k)] = 1.0;
    prog.cones.push_back(norm_cone(RMatrix(0, n), RVector(0), head, 0.0, ConstraintTag::kSlackNonneg,
                                   "delta_bar,k=" + std::to_string(k)));
  }
  return prog;
}

/// The expansion point as a decision vector, with every auxiliary at its
/// tightest feasible value. The beampattern epigraph takes
/// sum_m |g x_m|^2 + zeta ||theta||^2; the feasibility slacks take the
/// smallest values that satisfy their constraints.
inline RVector expansion_point(const SurrogateContext& ctx, double zeta = 0.0) {
  const auto& lay = ctx.layout;
  const auto& cfg = ctx.config;
  const CMatrix& X = ctx.point.X;
  RVector z = ctx.z0;
  for (int k = 0; k < lay.K(); ++k) {
    for (int l = 0; l < lay.M(); ++l) {
      if (l == k) continue;
      const cd v = (ctx.h[k] * X.col(l)).value();
      z[lay.p(k, l)] = std::abs(v.real());
      z[lay.p_bar(k, l)] = std::abs(v.imag());
    }
    const cd t = (ctx.g * X.col(k)).value();
    z[lay.tau(k)] = std::abs(t.real());
    z[lay.tau_bar(k)] = std::abs(t.imag());
  }
  if (lay.kind() == ProblemKind::kBeampattern) {
    z[lay.epigraph()] = ctx.a.squaredNorm() + zeta * ctx.point.theta.squaredNorm();
  } else {
    for (int k = 0; k < lay.K(); ++k) {
      double interference = cfg.noise_var[k];
      for (int l = 0; l < lay.M(); ++l) {
        if (l != k) interference += std::norm((ctx.h[k] * X.col(l)).value());
      }
      z[lay.delta(k)] = std::max(0.0, interference - std::norm(ctx.c[k]) / cfg.sinr_threshold[k]);
      double target_side = cfg.target_noise_var;
      for (int l = 0; l < lay.M(); ++l) {
        if (l != k) target_side += std::norm(ctx.a[l]);
      }
      z[lay.delta_bar(k)] = std::max(0.0, std::norm(ctx.a[k]) / cfg.leakage_threshold[k] - target_side);
    }
  }
  return z;
}

/// Actual sizes next to 2(L^2 + K^2 + 2KL + N) + 1 variables and
/// 4K^2 + 4KL + 2K + N + 2 cones.
struct CountReport {
  Index num_real_variables = 0;
  Index num_cones = 0;
  Index formula_variables = 0;
  Index formula_cones = 0;

  Index variable_offset() const { return num_real_variables - formula_variables; }
  Index cone_offset() const { return num_cones - formula_cones; }
};

inline Index formula_variable_count(Index L, Index K, Index N) { return 2 * (L * L + K * K + 2 * K * L + N) + 1; }
inline Index formula_cone_count(Index L, Index K, Index N) { return 4 * K * K + 4 * K * L + 2 * K + N + 2; }

inline CountReport count_report(const ConeProgram& prog) {
  if (!prog.layout) throw std::invalid_argument("count_report: program has no layout");
  const auto& lay = *prog.layout;
  CountReport r;
  r.num_real_variables = prog.num_vars;
  r.num_cones = static_cast<Index>(prog.cones.size());
  r.formula_variables = formula_variable_count(lay.L(), lay.K(), lay.N());
  r.formula_cones = formula_cone_count(lay.L(), lay.K(), lay.N());
  return r;
}

}  // namespace sisca
