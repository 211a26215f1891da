#pragma once

// Equivalent well-scaled instance: P = 1, unit user noise, gain measured in
// units of an a-priori upper bound. Physical channels are ~1e-5 and noise
// ~1e-11 W, which no interior-point tolerance survives; the transform keeps
// every SINR exactly and scales the gain by a constant.
//
//   X = sqrt(P) Xn,  theta unchanged
//   h_D,k -> sqrt(P)/sigma_k h_D,k,   h_R,k -> sqrt(P)/(sigma_k s) h_R,k,
//   G -> s G,   g_R unchanged,   sigma_T^2 -> sigma_T^2 / Gref
// with s^2 = P / Gref and Gref = P (sum_n ||G[n,:]||)^2 >= any attainable gain.

#include <cmath>

#include "sisca/model.hpp"
#include "sisca/scenario.hpp"

namespace sisca {

struct NormalizedInstance {
  SystemConfig config;
  ChannelSet channels;
  double gain_ref = 1.0;  // physical gain = gain_ref * normalized gain
  double x_scale = 1.0;  // physical X = x_scale * normalized X

  Iterate to_normalized(const Iterate& it) const { return {it.X / x_scale, it.theta}; }
  Iterate to_physical(const Iterate& it) const { return {it.X * x_scale, it.theta}; }
  double gain_to_physical(double g) const { return g * gain_ref; }
  double zeta_to_normalized(double zeta) const { return zeta / gain_ref; }
  double zeta_to_physical(double zeta) const { return zeta * gain_ref; }
};

inline NormalizedInstance normalize_instance(const ChannelSet& ch, const SystemConfig& cfg) {
  cfg.validate();
  ch.validate(cfg);
  NormalizedInstance ni;
  const double P = cfg.power;
  double row_sum = 0.0;
  for (Index n = 0; n < ch.G.rows(); ++n) row_sum += ch.G.row(n).norm();
  double gref = P * row_sum * row_sum;
  if (!(gref > 0.0) || !std::isfinite(gref)) gref = P;
  const double s = std::sqrt(P / gref);

  ni.gain_ref = gref;
  ni.x_scale = std::sqrt(P);
  ni.config = cfg;
  ni.config.power = 1.0;
  ni.config.target_noise_var = cfg.target_noise_var / gref;
  ni.channels.G = s * ch.G;
  ni.channels.g_R = ch.g_R;
  ni.channels.h_D.resize(ch.h_D.rows(), ch.h_D.cols());
  ni.channels.h_R.resize(ch.h_R.rows(), ch.h_R.cols());
  for (int k = 0; k < cfg.K; ++k) {
    const double sigma = std::sqrt(cfg.noise_var[k]);
    ni.config.noise_var[k] = 1.0;
    ni.channels.h_D.row(k) = ch.h_D.row(k) * (std::sqrt(P) / sigma);
    ni.channels.h_R.row(k) = ch.h_R.row(k) * (std::sqrt(P) / (sigma * s));
  }
  if (cfg.zeta) ni.config.zeta = *cfg.zeta / gref;
  return ni;
}

}  // namespace sisca
