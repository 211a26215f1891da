#pragma once

#include <cstdint>
#include <random>

#include "sisca/model.hpp"
#include "sisca/scenario.hpp"

namespace sisca::testing {

inline CVector random_cvector(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CVector v(n);
  for (Index i = 0; i < n; ++i) v[i] = cd(nd(rng), nd(rng));
  return v;
}

inline CMatrix random_cmatrix(std::mt19937_64& rng, Index r, Index c, double scale = 1.0) {
  std::normal_distribution<double> nd(0.0, scale);
  CMatrix m(r, c);
  for (Index j = 0; j < c; ++j) {
    for (Index i = 0; i < r; ++i) m(i, j) = cd(nd(rng), nd(rng));
  }
  return m;
}

struct SmallInstance {
  SystemConfig cfg;
  ChannelSet ch;
  Iterate point;
};

/// Unit-variance channels, P = 1, unit noise; the point has |theta_n| <= 1
/// and ||X|| <= sqrt(P).
inline SmallInstance random_small_instance(std::uint64_t seed, int L, int K, int N) {
  std::mt19937_64 rng(seed);
  SmallInstance s;
  s.cfg = SystemConfig::uniform(L, N, K, 1.0, 0.5, 2.0, 1.0, 0.5);
  s.ch.G = random_cmatrix(rng, N, L);
  s.ch.h_D = random_cmatrix(rng, K, L);
  s.ch.h_R = random_cmatrix(rng, K, N);
  s.ch.g_R = random_cvector(rng, N);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  s.point.X = random_cmatrix(rng, L, K + L);
  s.point.X *= std::sqrt(s.cfg.power) * (0.2 + 0.7 * unit(rng)) / s.point.X.norm();
  s.point.theta.resize(N);
  for (int n = 0; n < N; ++n) s.point.theta[n] = std::polar(0.3 + 0.7 * unit(rng), 2.0 * kPi * unit(rng));
  return s;
}

}  // namespace sisca::testing
