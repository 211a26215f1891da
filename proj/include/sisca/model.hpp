#pragma once

// Exact (non-surrogate) system quantities and the feasibility oracle for the
// original beampattern problem. User indices are 0-based; column m of X is
// the user-k beamformer for m < K and a radar beamformer otherwise.

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sisca/scenario.hpp"
#include "sisca/types.hpp"

namespace sisca {

struct Iterate {
  CMatrix X;  // L x (K + L)
  CVector theta;  // N

  double power_norm() const { return X.norm(); }
  double unit_modulus_deviation() const {
    double dev = 0.0;
    for (Index n = 0; n < theta.size(); ++n) dev = std::max(dev, std::abs(1.0 - std::abs(theta[n])));
    return dev;
  }
};

namespace detail {

inline void check_theta(const ChannelSet& ch, const CVector& theta) {
  if (theta.size() != ch.N()) throw std::invalid_argument("theta length does not match the IRS size");
}

inline void check_iterate(const Iterate& it, const ChannelSet& ch) {
  check_theta(ch, it.theta);
  if (it.X.rows() != ch.L() || it.X.cols() != ch.K() + ch.L()) {
    throw std::invalid_argument("X must be L x (K + L)");
  }
}

inline void check_user(const ChannelSet& ch, int k) {
  if (k < 0 || k >= ch.K()) throw std::invalid_argument("user index out of range");
}

}  // namespace detail

/// h_k = h_Dk + h_Rk diag(theta) G
inline CRowVector composite_user_channel(const ChannelSet& ch, const CVector& theta, int k) {
  detail::check_theta(ch, theta);
  detail::check_user(ch, k);
  const CRowVector reflected = ch.h_R.row(k).cwiseProduct(theta.transpose());
  return ch.h_D.row(k) + reflected * ch.G;
}

/// g = g_R diag(theta) G; the direct BS-target link is blocked.
inline CRowVector composite_target_channel(const ChannelSet& ch, const CVector& theta) {
  detail::check_theta(ch, theta);
  const CRowVector weighted = ch.g_R.transpose().cwiseProduct(theta.transpose());
  return weighted * ch.G;
}

namespace detail {

// |c x_k|^2 / (noise + sum_{l != k} |c x_l|^2)
inline double sinr_of(const CRowVector& c, const CMatrix& X, int k, double noise) {
  const CRowVector proj = c * X;
  double interference = noise;
  for (Index m = 0; m < proj.size(); ++m) {
    if (m != k) interference += std::norm(proj[m]);
  }
  return std::norm(proj[k]) / interference;
}

}  // namespace detail

inline double user_sinr(const Iterate& it, const ChannelSet& ch, const SystemConfig& cfg, int k) {
  detail::check_iterate(it, ch);
  detail::check_user(ch, k);
  return detail::sinr_of(composite_user_channel(ch, it.theta, k), it.X, k, cfg.noise_var[k]);
}

/// SINR at the target when it wiretaps the stream intended for user k.
inline double target_wiretap_sinr(const Iterate& it, const ChannelSet& ch, const SystemConfig& cfg, int k) {
  detail::check_iterate(it, ch);
  detail::check_user(ch, k);
  return detail::sinr_of(composite_target_channel(ch, it.theta), it.X, k, cfg.target_noise_var);
}

/// Expected received power at the target: sum_m |g x_m|^2 = ||g X||^2
/// (unit-power, mutually uncorrelated streams).
inline double beampattern_gain(const Iterate& it, const ChannelSet& ch) {
  detail::check_iterate(it, ch);
  return (composite_target_channel(ch, it.theta) * it.X).squaredNorm();
}

/// Margins are absolute (threshold units); feasibility is judged on margins
/// divided by each constraint's scale (Gamma_k, Gamma_hat_k, sqrt(P), 1).
struct FeasibilityReport {
  std::vector<double> sinr;
  std::vector<double> sinr_margin;  // gamma_k - Gamma_k
  std::vector<double> leakage;
  std::vector<double> leakage_margin;  // Gamma_hat_k - gamma_hat_k
  double power_margin = 0.0;  // sqrt(P) - ||X||
  double unit_modulus_deviation = 0.0;  // max_n |1 - |theta_n||
  double max_modulus_excess = 0.0;  // max_n (|theta_n| - 1), the relaxed constraint
  bool unit_modulus_enforced = false;
  double tol = 0.0;
  bool feasible = false;

  // Filled by check_feasibility with the scales used for the verdict.
  std::vector<double> sinr_scale;
  std::vector<double> leakage_scale;
  double power_scale = 1.0;

  double min_sinr_margin() const { return *std::min_element(sinr_margin.begin(), sinr_margin.end()); }
  double min_leakage_margin() const {
    return *std::min_element(leakage_margin.begin(), leakage_margin.end());
  }

  /// Smallest scaled margin over every checked constraint.
  double min_relative_margin() const {
    double m = power_margin / power_scale;
    for (std::size_t k = 0; k < sinr_margin.size(); ++k) {
      m = std::min(m, sinr_margin[k] / sinr_scale[k]);
      m = std::min(m, leakage_margin[k] / leakage_scale[k]);
    }
    m = std::min(m, unit_modulus_enforced ? -unit_modulus_deviation : -max_modulus_excess);
    return m;
  }
};

/// Pure evaluation of the original constraints. Without enforce_unit_modulus
/// only the relaxed |theta_n| <= 1 is checked.
inline FeasibilityReport check_feasibility(const Iterate& it, const ChannelSet& ch, const SystemConfig& cfg,
                                           bool enforce_unit_modulus) {
  detail::check_iterate(it, ch);
  FeasibilityReport r;
  r.tol = cfg.tol_feas;
  r.unit_modulus_enforced = enforce_unit_modulus;
  const CRowVector g = composite_target_channel(ch, it.theta);
  for (int k = 0; k < ch.K(); ++k) {
    const double s = detail::sinr_of(composite_user_channel(ch, it.theta, k), it.X, k, cfg.noise_var[k]);
    const double e = detail::sinr_of(g, it.X, k, cfg.target_noise_var);
    r.sinr.push_back(s);
    r.sinr_margin.push_back(s - cfg.sinr_threshold[k]);
    r.sinr_scale.push_back(cfg.sinr_threshold[k]);
    r.leakage.push_back(e);
    r.leakage_margin.push_back(cfg.leakage_threshold[k] - e);
    r.leakage_scale.push_back(cfg.leakage_threshold[k]);
  }
  r.power_scale = std::sqrt(cfg.power);
  r.power_margin = r.power_scale - it.X.norm();
  r.unit_modulus_deviation = it.unit_modulus_deviation();
  double excess = 0.0;
  for (Index n = 0; n < it.theta.size(); ++n) excess = std::max(excess, std::abs(it.theta[n]) - 1.0);
  r.max_modulus_excess = excess;
  r.feasible = r.min_relative_margin() >= -cfg.tol_feas;
  return r;
}

}  // namespace sisca
