#pragma once

// Convex/concave surrogates of every non-convex term of the beampattern
// problem, built around an expansion point and materialized as data over the
// real decision vector.
//
// Every bound here comes from two facts for complex vectors u, v and s > 0:
//   ||w||^2 >= 2 Re{b^H w} - ||b||^2                 (tight at w = b)
//   Re{u^H v} = 1/4 (||u/s + s v||^2 - ||u/s - s v||^2)
// With s = 1 these are the textbook forms. SurrogateScaling::kBalanced picks
// s per term so that ||u/s|| = ||s v|| at the expansion point; bounds stay
// tight and first-order exact, only the curvature of the dropped part is
// spread evenly between the two factors.

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "sisca/layout.hpp"
#include "sisca/model.hpp"
#include "sisca/scenario.hpp"

namespace sisca {

enum class SurrogateScaling { kLiteral, kBalanced };

enum class Curvature { kConcave, kConvex };

struct QuadTerm {
  double coef = 0.0;
  AffineVectorExpr expr;
};

/// constant + linear . z + sum_j coef_j ||A_j z + b_j||^2
struct SurrogateExpr {
  Curvature curvature = Curvature::kConcave;
  double constant = 0.0;
  RVector linear;
  std::vector<QuadTerm> terms;

  double operator()(const RVector& z) const {
    double v = constant + linear.dot(z);
    for (const auto& t : terms) v += t.coef * t.expr(z).squaredNorm();
    return v;
  }

  /// Concave expressions carry only nonpositive quadratic coefficients,
  /// convex ones only nonnegative.
  bool curvature_consistent() const {
    for (const auto& t : terms) {
      if (curvature == Curvature::kConcave ? t.coef > 0.0 : t.coef < 0.0) return false;
    }
    return true;
  }

  SurrogateExpr& operator+=(const SurrogateExpr& o) {
    if (o.curvature != curvature) throw std::logic_error("SurrogateExpr: mixing curvatures");
    constant += o.constant;
    linear += o.linear;
    terms.insert(terms.end(), o.terms.begin(), o.terms.end());
    return *this;
  }
};

inline double balance_scale(double u_norm, double v_norm, SurrogateScaling scaling) {
  if (scaling == SurrogateScaling::kLiteral || !(u_norm > 0.0) || !(v_norm > 0.0)) return 1.0;
  return std::sqrt(u_norm / v_norm);
}

/// Concave minorant of 2 Re{u^H v}:
///   Re{b^H (u/s + s v)} - 1/2 ||b||^2 - 1/2 ||u/s - s v||^2,  b = (u/s + s v)(z0).
inline SurrogateExpr twice_real_minorant(const ComplexAffine& u, const ComplexAffine& v, const RVector& z0,
                                         double s) {
  const ComplexAffine sum = (1.0 / s) * u + s * v;
  const ComplexAffine diff = (1.0 / s) * u - s * v;
  const CVector b = sum(z0);
  auto [lin, c] = real_inner(b, sum);
  SurrogateExpr e;
  e.curvature = Curvature::kConcave;
  e.linear = std::move(lin);
  e.constant = c - 0.5 * b.squaredNorm();
  e.terms.push_back({-0.5, AffineVectorExpr::lift(diff)});
  return e;
}

/// Convex majorant of Re{u^H v}:
///   1/4 ||u/s + s v||^2 - 1/4 (2 Re{e^H (u/s - s v)} - ||e||^2),  e = (u/s - s v)(z0).
inline SurrogateExpr real_part_majorant(const ComplexAffine& u, const ComplexAffine& v, const RVector& z0,
                                        double s) {
  const ComplexAffine sum = (1.0 / s) * u + s * v;
  const ComplexAffine diff = (1.0 / s) * u - s * v;
  const CVector e0 = diff(z0);
  auto [lin, c] = real_inner(e0, diff);
  SurrogateExpr e;
  e.curvature = Curvature::kConvex;
  e.linear = -0.5 * lin;
  e.constant = -0.5 * c + 0.25 * e0.squaredNorm();
  e.terms.push_back({0.25, AffineVectorExpr::lift(sum)});
  return e;
}

/// Expansion-point constants and cached composite channels.
///   g, h[k]      composite channels at theta^(i)
///   a[m] = g x_m^(i),   b[m] = a[m] g^H / s_m + s_m x_m^(i)
///   c[k] = h_k x_k^(i), d[k] = c[k] h_k^H / t_k + t_k x_k^(i)
/// where s_m = objective_scale[m], t_k = user_scale[k] (all 1 when literal).
struct SurrogateContext {
  explicit SurrogateContext(VariableLayout lay) : layout(std::move(lay)) {}

  VariableLayout layout;
  SystemConfig config;
  SurrogateScaling scaling = SurrogateScaling::kBalanced;
  Iterate point;
  RVector z0;

  CRowVector g;
  std::vector<CRowVector> h;
  CVector a;
  std::vector<CVector> b;
  RVector objective_scale;
  CVector c;
  std::vector<CVector> d;
  RVector user_scale;

  ComplexAffine g_herm;
  std::vector<ComplexAffine> h_herm;
  std::vector<ComplexAffine> columns;
};

inline SurrogateContext make_surrogate_context(const ChannelSet& ch, const SystemConfig& cfg,
                                               const Iterate& point, ProblemKind kind,
                                               SurrogateScaling scaling = SurrogateScaling::kBalanced) {
  ch.validate(cfg);
  SurrogateContext ctx(VariableLayout(cfg.L, cfg.N, cfg.K, kind));
  ctx.config = cfg;
  ctx.scaling = scaling;
  ctx.point = point;
  const auto& lay = ctx.layout;
  ctx.z0 = lay.pack(point);
  const int K = cfg.K;
  const int M = lay.M();

  ctx.g = composite_target_channel(ch, point.theta);
  const CMatrix target_cascade = ch.g_R.asDiagonal() * ch.G;
  ctx.g_herm = hermitian_channel_expr(lay, CRowVector::Zero(cfg.L), target_cascade);
  for (int k = 0; k < K; ++k) {
    ctx.h.push_back(composite_user_channel(ch, point.theta, k));
    const CMatrix cascade = ch.h_R.row(k).transpose().asDiagonal() * ch.G;
    ctx.h_herm.push_back(hermitian_channel_expr(lay, ch.h_D.row(k), cascade));
  }
  for (int m = 0; m < M; ++m) ctx.columns.push_back(column_expr(lay, m));

  ctx.a.resize(M);
  ctx.objective_scale.resize(M);
  for (int m = 0; m < M; ++m) {
    const CVector x = point.X.col(m);
    ctx.a[m] = (ctx.g * x).value();
    const CVector u = ctx.a[m] * ctx.g.adjoint();
    const double s = balance_scale(u.norm(), x.norm(), scaling);
    ctx.objective_scale[m] = s;
    ctx.b.push_back(u / s + s * x);
  }
  ctx.c.resize(K);
  ctx.user_scale.resize(K);
  for (int k = 0; k < K; ++k) {
    const CVector x = point.X.col(k);
    ctx.c[k] = (ctx.h[k] * x).value();
    const CVector u = ctx.c[k] * ctx.h[k].adjoint();
    const double t = balance_scale(u.norm(), x.norm(), scaling);
    ctx.user_scale[k] = t;
    ctx.d.push_back(u / t + t * x);
  }
  return ctx;
}

/// f_m: concave minorant of |g x_m|^2, jointly in (x_m, theta).
inline SurrogateExpr objective_minorant(const SurrogateContext& ctx, int m) {
  if (m < 0 || m >= ctx.layout.M()) throw std::invalid_argument("objective_minorant: column out of range");
  SurrogateExpr e = twice_real_minorant(ctx.a[m] * ctx.g_herm, ctx.columns[m], ctx.z0, ctx.objective_scale[m]);
  e.constant -= std::norm(ctx.a[m]);
  return e;
}

/// f_bar_k: concave minorant of |h_k x_k|^2.
inline SurrogateExpr user_signal_minorant(const SurrogateContext& ctx, int k) {
  if (k < 0 || k >= ctx.layout.K()) throw std::invalid_argument("user_signal_minorant: user out of range");
  SurrogateExpr e = twice_real_minorant(ctx.c[k] * ctx.h_herm[k], ctx.columns[k], ctx.z0, ctx.user_scale[k]);
  e.constant -= std::norm(ctx.c[k]);
  return e;
}

/// One-sided convex majorants of the real and imaginary part of a bilinear
/// form w(theta) x:  re_pos >= Re, re_neg >= -Re, im_pos >= Im, im_neg >= -Im.
struct MajorantSet {
  SurrogateExpr re_pos;
  SurrogateExpr re_neg;
  SurrogateExpr im_pos;
  SurrogateExpr im_neg;
};

namespace detail {

// u = w^H (affine), v = x; Re{u^H v} = Re{w x}, Re{u^H (-j v)} = Im{w x}.
inline MajorantSet bilinear_majorants(const ComplexAffine& u, const ComplexAffine& v, const RVector& z0,
                                      SurrogateScaling scaling) {
  const double s = balance_scale(u(z0).norm(), v(z0).norm(), scaling);
  return {real_part_majorant(u, v, z0, s), real_part_majorant(u, -1.0 * v, z0, s),
          real_part_majorant(u, -kJ * v, z0, s), real_part_majorant(u, kJ * v, z0, s)};
}

}  // namespace detail

/// Majorants of +-Re{h_k x_l} and +-Im{h_k x_l} for l != k.
inline MajorantSet interference_majorants(const SurrogateContext& ctx, int k, int l) {
  ctx.layout.pair(k, l);  // validates
  return detail::bilinear_majorants(ctx.h_herm[k], ctx.columns[l], ctx.z0, ctx.scaling);
}

/// Majorants of +-Re{g x_k} and +-Im{g x_k}.
inline MajorantSet leakage_signal_majorants(const SurrogateContext& ctx, int k) {
  if (k < 0 || k >= ctx.layout.K()) throw std::invalid_argument("leakage_signal_majorants: user out of range");
  return detail::bilinear_majorants(ctx.g_herm, ctx.columns[k], ctx.z0, ctx.scaling);
}

/// sigma_T^2 + sum_{l != k} f_l: concave minorant of the target's noise plus
/// interference when it listens to user k.
inline SurrogateExpr leakage_interference_minorant(const SurrogateContext& ctx, int k) {
  if (k < 0 || k >= ctx.layout.K()) throw std::invalid_argument("leakage_interference_minorant: user out of range");
  SurrogateExpr e;
  e.curvature = Curvature::kConcave;
  e.constant = ctx.config.target_noise_var;
  e.linear = RVector::Zero(ctx.layout.size());
  for (int l = 0; l < ctx.layout.M(); ++l) {
    if (l != k) e += objective_minorant(ctx, l);
  }
  return e;
}

/// 2 Re{theta^(i)H theta} - ||theta^(i)||^2, a linear minorant of ||theta||^2.
inline SurrogateExpr regularizer_minorant(const SurrogateContext& ctx) {
  auto [lin, c] = real_inner(ctx.point.theta, theta_expr(ctx.layout));
  SurrogateExpr e;
  e.curvature = Curvature::kConcave;
  e.linear = 2.0 * lin;
  e.constant = 2.0 * c - ctx.point.theta.squaredNorm();
  return e;
}

/// Both sides of the three basic relations, for tests:
///   ||u||^2 >= 2 Re{v^H u} - ||v||^2
///   Re{u^H v} = 1/4 (||u + v||^2 - ||u - v||^2)
///   Im{u^H v} = 1/4 (||u - j v||^2 - ||u + j v||^2)
struct IdentitySides {
  double norm_lhs, norm_rhs;
  double re_lhs, re_rhs;
  double im_lhs, im_rhs;
};

inline IdentitySides basic_identities_check(const CVector& u, const CVector& v) {
  if (u.size() != v.size()) throw std::invalid_argument("basic_identities_check: length mismatch");
  const cd uv = u.dot(v);  // u^H v
  IdentitySides r{};
  r.norm_lhs = u.squaredNorm();
  r.norm_rhs = 2.0 * v.dot(u).real() - v.squaredNorm();
  r.re_lhs = uv.real();
  r.re_rhs = 0.25 * ((u + v).squaredNorm() - (u - v).squaredNorm());
  r.im_lhs = uv.imag();
  r.im_rhs = 0.25 * ((u - kJ * v).squaredNorm() - (u + kJ * v).squaredNorm());
  return r;
}

}  // namespace sisca
