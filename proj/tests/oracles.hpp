#pragma once

// Independent reference evaluations for surrogate checks. Exact functions
// are recomputed from the unpacked iterate through the model module only.

#include <algorithm>
#include <cmath>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "sisca/model.hpp"
#include "sisca/surrogate.hpp"

namespace sisca::testing {

enum class BoundSide { kMinorant, kMajorant };

struct SurrogateCase {
  std::string name;
  SurrogateExpr expr;
  std::function<double(const RVector&)> exact;
  BoundSide side;
};

inline std::vector<SurrogateCase> all_surrogate_cases(const SurrogateContext& ctx, const ChannelSet& ch,
                                                      const SystemConfig& cfg) {
  const VariableLayout lay = ctx.layout;
  std::vector<SurrogateCase> out;
  auto target_proj = [lay, ch](const RVector& z, int m) {
    const Iterate it = lay.unpack(z);
    return (composite_target_channel(ch, it.theta) * it.X.col(m)).value();
  };
  auto user_proj = [lay, ch](const RVector& z, int k, int m) {
    const Iterate it = lay.unpack(z);
    return (composite_user_channel(ch, it.theta, k) * it.X.col(m)).value();
  };
  for (int m = 0; m < lay.M(); ++m) {
    out.push_back({"f_" + std::to_string(m), objective_minorant(ctx, m),
                   [=](const RVector& z) { return std::norm(target_proj(z, m)); }, BoundSide::kMinorant});
  }
  for (int k = 0; k < lay.K(); ++k) {
    out.push_back({"f_bar_" + std::to_string(k), user_signal_minorant(ctx, k),
                   [=](const RVector& z) { return std::norm(user_proj(z, k, k)); }, BoundSide::kMinorant});
    for (int l = 0; l < lay.M(); ++l) {
      if (l == k) continue;
      const MajorantSet mj = interference_majorants(ctx, k, l);
      const std::string s = std::to_string(k) + "_" + std::to_string(l);
      out.push_back({"mu_" + s, mj.re_pos, [=](const RVector& z) { return user_proj(z, k, l).real(); },
                     BoundSide::kMajorant});
      out.push_back({"mu_bar_" + s, mj.re_neg, [=](const RVector& z) { return -user_proj(z, k, l).real(); },
                     BoundSide::kMajorant});
      out.push_back({"upsilon_" + s, mj.im_pos, [=](const RVector& z) { return user_proj(z, k, l).imag(); },
                     BoundSide::kMajorant});
      out.push_back({"upsilon_bar_" + s, mj.im_neg, [=](const RVector& z) { return -user_proj(z, k, l).imag(); },
                     BoundSide::kMajorant});
    }
    const MajorantSet lk = leakage_signal_majorants(ctx, k);
    const std::string s = std::to_string(k);
    out.push_back({"eta_" + s, lk.re_pos, [=](const RVector& z) { return target_proj(z, k).real(); },
                   BoundSide::kMajorant});
    out.push_back({"eta_bar_" + s, lk.re_neg, [=](const RVector& z) { return -target_proj(z, k).real(); },
                   BoundSide::kMajorant});
    out.push_back({"chi_" + s, lk.im_pos, [=](const RVector& z) { return target_proj(z, k).imag(); },
                   BoundSide::kMajorant});
    out.push_back({"chi_bar_" + s, lk.im_neg, [=](const RVector& z) { return -target_proj(z, k).imag(); },
                   BoundSide::kMajorant});
    const double noise = cfg.target_noise_var;
    out.push_back({"leakage_lhs_" + s, leakage_interference_minorant(ctx, k),
                   [=](const RVector& z) {
                     double v = noise;
                     for (int l = 0; l < lay.M(); ++l) {
                       if (l != k) v += std::norm(target_proj(z, l));
                     }
                     return v;
                   },
                   BoundSide::kMinorant});
  }
  out.push_back({"regularizer", regularizer_minorant(ctx),
                 [lay](const RVector& z) { return lay.unpack(z).theta.squaredNorm(); }, BoundSide::kMinorant});
  return out;
}

struct SurrogateAudit {
  double worst_tightness = 0.0;  // relative
  double worst_violation = 0.0;  // relative, > 0 means an invalid bound
  double worst_gradient = 0.0;  // relative
  bool curvature_ok = true;
  std::string worst_case;
};

inline double rel_scale(double v) { return std::max(1.0, std::abs(v)); }

/// Tightness at z0, validity over `samples` random points at mixed
/// distances, and central-difference slopes along `directions` directions.
inline SurrogateAudit audit_surrogates(const std::vector<SurrogateCase>& cases, const RVector& z0,
                                       std::mt19937_64& rng, int samples, int directions, double fd_step = 1e-6) {
  SurrogateAudit a;
  std::normal_distribution<double> nd;
  std::uniform_real_distribution<double> logu(-3.0, 1.0);
  const Index n = z0.size();
  auto rand_dir = [&]() {
    RVector d(n);
    for (Index i = 0; i < n; ++i) d[i] = nd(rng);
    return RVector(d / d.norm());
  };
  std::vector<RVector> pts;
  for (int s = 0; s < samples; ++s) pts.push_back(z0 + std::pow(10.0, logu(rng)) * std::sqrt(double(n)) * rand_dir());
  std::vector<RVector> dirs;
  for (int s = 0; s < directions; ++s) dirs.push_back(rand_dir());

  for (const auto& c : cases) {
    if (!c.expr.curvature_consistent()) a.curvature_ok = false;
    const double e0 = c.exact(z0);
    const double t = std::abs(c.expr(z0) - e0) / rel_scale(e0);
    if (t > a.worst_tightness) {
      a.worst_tightness = t;
      a.worst_case = c.name;
    }
    for (const auto& z : pts) {
      const double ex = c.exact(z);
      const double sv = c.expr(z);
      const double viol = c.side == BoundSide::kMinorant ? sv - ex : ex - sv;
      a.worst_violation = std::max(a.worst_violation, viol / rel_scale(ex));
    }
    for (const auto& d : dirs) {
      const double ds = (c.expr(z0 + fd_step * d) - c.expr(z0 - fd_step * d)) / (2 * fd_step);
      const double de = (c.exact(z0 + fd_step * d) - c.exact(z0 - fd_step * d)) / (2 * fd_step);
      a.worst_gradient = std::max(a.worst_gradient, std::abs(ds - de) / rel_scale(de));
    }
  }
  return a;
}

}  // namespace sisca::testing
