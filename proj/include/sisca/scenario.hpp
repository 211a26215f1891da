#pragma once

// Problem instances: system dimensions and thresholds, node geometry and
// seeded channel realizations. Everything here is linear scale (watts,
// linear SINR); dB conversions live in config_io.hpp.

#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sisca/types.hpp"

namespace sisca {

struct SystemConfig {
  int L = 4;  // BS antennas
  int N = 100;  // IRS elements
  int K = 3;  // users
  double power = 10.0;  // W
  std::vector<double> sinr_threshold;  // per user, linear
  std::vector<double> leakage_threshold;  // per user, linear
  std::vector<double> noise_var;  // per user, W
  double target_noise_var = 1e-11;  // W
  std::optional<double> zeta;  // unset: scale-free default schedule
  double tol_converge = 1e-4;
  int max_iters = 100;
  double tol_feas = 1e-6;

  int num_columns() const { return K + L; }

  static SystemConfig uniform(int L, int N, int K, double power, double sinr,
                              double leakage, double noise_var,
                              double target_noise_var) {
    SystemConfig c;
    c.L = L;
    c.N = N;
    c.K = K;
    c.power = power;
    c.sinr_threshold.assign(static_cast<std::size_t>(K), sinr);
    c.leakage_threshold.assign(static_cast<std::size_t>(K), leakage);
    c.noise_var.assign(static_cast<std::size_t>(K), noise_var);
    c.target_noise_var = target_noise_var;
    return c;
  }

  void validate() const {
    if (L < 1 || N < 1 || K < 1) {
      throw std::invalid_argument("SystemConfig: L, N and K must be positive");
    }
    if (!(power > 0.0) || !std::isfinite(power)) {
      throw std::invalid_argument("SystemConfig: power budget must be positive");
    }
    auto check = [this](const std::vector<double>& v, const char* name) {
      if (v.size() != static_cast<std::size_t>(K)) {
        throw std::invalid_argument(std::string("SystemConfig: ") + name +
                                    " must have exactly K entries");
      }
      for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
          throw std::invalid_argument(std::string("SystemConfig: ") + name +
                                      " entries must be positive");
        }
      }
    };
    check(sinr_threshold, "sinr_threshold");
    check(leakage_threshold, "leakage_threshold");
    check(noise_var, "noise_var");
    if (!(target_noise_var > 0.0) || !std::isfinite(target_noise_var)) {
      throw std::invalid_argument("SystemConfig: target noise variance must be positive");
    }
    if (zeta && !(*zeta > 0.0)) {
      throw std::invalid_argument("SystemConfig: zeta must be positive");
    }
    if (!(tol_converge > 0.0) || !(tol_feas > 0.0) || max_iters < 1) {
      throw std::invalid_argument("SystemConfig: tolerances and max_iters must be positive");
    }
  }
};

/// Azimuth is measured in the horizontal plane from the +x axis, elevation
/// from the horizontal plane. Radians.
struct Direction {
  double azimuth = 0.0;
  double elevation = 0.0;
};

inline Direction direction_between(const Eigen::Vector3d& from, const Eigen::Vector3d& to) {
  const Eigen::Vector3d d = to - from;
  return {std::atan2(d.y(), d.x()), std::atan2(d.z(), std::hypot(d.x(), d.y()))};
}

struct Geometry {
  Eigen::Vector3d bs_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d irs_position{50.0, 10.0, 0.0};
  Direction target_direction{kPi / 6.0, 0.0};  // seen from the IRS
  std::vector<Eigen::Vector3d> user_positions;

  void validate(int K) const {
    if (!std::isfinite(target_direction.azimuth) || !std::isfinite(target_direction.elevation)) {
      throw std::invalid_argument("Geometry: target direction must be finite");
    }
    if (user_positions.size() != static_cast<std::size_t>(K)) {
      throw std::invalid_argument("Geometry: need one position per user");
    }
    std::vector<Eigen::Vector3d> all{bs_position, irs_position};
    all.insert(all.end(), user_positions.begin(), user_positions.end());
    for (std::size_t i = 0; i < all.size(); ++i) {
      if (!all[i].allFinite()) throw std::invalid_argument("Geometry: non-finite position");
      for (std::size_t j = i + 1; j < all.size(); ++j) {
        if ((all[i] - all[j]).norm() < 1e-9) {
          throw std::invalid_argument("Geometry: node positions must be distinct");
        }
      }
    }
  }
};

/// Inputs for dropping users around a hotspot.
struct GeometryParams {
  Eigen::Vector3d bs_position = Eigen::Vector3d::Zero();
  Eigen::Vector3d irs_position{50.0, 10.0, 0.0};
  Eigen::Vector3d user_center{70.0, 0.0, 0.0};
  double user_radius = 5.0;
  Direction target_direction{kPi / 6.0, 0.0};
  std::vector<Eigen::Vector3d> fixed_user_positions;  // overrides the random drop
};

/// Users uniform over a disc (in the horizontal plane) around user_center.
inline Geometry drop_users(const GeometryParams& p, int K, std::uint64_t seed) {
  Geometry g;
  g.bs_position = p.bs_position;
  g.irs_position = p.irs_position;
  g.target_direction = p.target_direction;
  if (!p.fixed_user_positions.empty()) {
    g.user_positions = p.fixed_user_positions;
  } else {
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (int k = 0; k < K; ++k) {
      const double r = p.user_radius * std::sqrt(unit(rng));
      const double phi = 2.0 * kPi * unit(rng);
      g.user_positions.push_back(p.user_center + Eigen::Vector3d(r * std::cos(phi), r * std::sin(phi), 0.0));
    }
  }
  g.validate(K);
  return g;
}

struct FadingParams {
  double c0 = 1e-3;  // path loss at the reference distance (-30 dB)
  double d0 = 1.0;  // reference distance, m
  double alpha_bs_irs = 2.2;
  double alpha_irs_user = 2.4;
  double alpha_bs_user = 3.5;
  double rician_k = 10.0;  // linear; +inf gives pure line of sight
  double element_spacing = 0.5;  // wavelengths
  int irs_rows = 0;  // 0: square panel when N is a perfect square, else a line

  double path_loss(double distance, double alpha) const {
    return c0 * std::pow(distance / d0, -alpha);
  }
};

/// All channel blocks of one realization.
///   G   : N x L   BS -> IRS
///   h_D : K x L   row k is BS -> user k
///   h_R : K x N   row k is IRS -> user k
///   g_R : N       IRS -> target steering vector (used as a row)
struct ChannelSet {
  CMatrix G;
  CMatrix h_D;
  CMatrix h_R;
  CVector g_R;

  int L() const { return static_cast<int>(G.cols()); }
  int N() const { return static_cast<int>(G.rows()); }
  int K() const { return static_cast<int>(h_D.rows()); }

  void validate(const SystemConfig& c) const {
    if (G.rows() != c.N || G.cols() != c.L || h_D.rows() != c.K || h_D.cols() != c.L ||
        h_R.rows() != c.K || h_R.cols() != c.N || g_R.size() != c.N) {
      throw std::invalid_argument("ChannelSet: dimensions do not match the configuration");
    }
    if (!G.allFinite() || !h_D.allFinite() || !h_R.allFinite() || !g_R.allFinite()) {
      throw std::invalid_argument("ChannelSet: non-finite entry");
    }
  }
};

/// Uniform linear array response: v[n] = exp(j 2 pi d n sin(az) cos(el)).
/// Broadside (az = 0) gives all ones.
inline CVector steering_vector(int n_elements, Direction direction, double element_spacing) {
  if (n_elements < 1) throw std::invalid_argument("steering_vector: need at least one element");
  if (!(element_spacing > 0.0)) throw std::invalid_argument("steering_vector: spacing must be positive");
  if (!std::isfinite(direction.azimuth) || !std::isfinite(direction.elevation)) {
    throw std::invalid_argument("steering_vector: non-finite direction");
  }
  const double proj = std::sin(direction.azimuth) * std::cos(direction.elevation);
  CVector v(n_elements);
  for (int n = 0; n < n_elements; ++n) {
    v[n] = std::polar(1.0, 2.0 * kPi * element_spacing * n * proj);
  }
  return v;
}

/// Planar array (rows along the vertical axis, columns horizontal). Element
/// (r, c) sits at index r * cols + c; the response is the separable product
/// of a vertical line with projection sin(el) and a horizontal line.
inline CVector planar_steering_vector(int rows, int cols, Direction direction, double element_spacing) {
  if (rows < 1 || cols < 1) throw std::invalid_argument("planar_steering_vector: empty panel");
  const CVector horizontal = steering_vector(cols, direction, element_spacing);
  if (!std::isfinite(direction.elevation)) {
    throw std::invalid_argument("planar_steering_vector: non-finite direction");
  }
  const double vproj = std::sin(direction.elevation);
  CVector v(static_cast<Index>(rows) * cols);
  for (int r = 0; r < rows; ++r) {
    const cd vr = std::polar(1.0, 2.0 * kPi * element_spacing * r * vproj);
    for (int c = 0; c < cols; ++c) v[r * cols + c] = vr * horizontal[c];
  }
  return v;
}

/// Rows of the IRS panel for N elements under the given fading settings.
inline int irs_panel_rows(int N, const FadingParams& f) {
  if (f.irs_rows > 0) {
    if (N % f.irs_rows != 0) throw std::invalid_argument("FadingParams: irs_rows must divide N");
    return f.irs_rows;
  }
  const int r = static_cast<int>(std::lround(std::sqrt(static_cast<double>(N))));
  return r * r == N ? r : 1;
}

inline CVector irs_response(int N, Direction direction, const FadingParams& f) {
  const int rows = irs_panel_rows(N, f);
  return planar_steering_vector(rows, N / rows, direction, f.element_spacing);
}

/// Seeded Rician/Rayleigh realization with distance-based path loss. The
/// IRS-target link is the pure steering vector toward the target direction;
/// the direct BS-target link is blocked.
inline ChannelSet generate_channels(const SystemConfig& config, const Geometry& geometry,
                                    std::uint64_t seed, const FadingParams& fading) {
  config.validate();
  geometry.validate(config.K);
  if (!(fading.rician_k >= 0.0)) throw std::invalid_argument("FadingParams: K-factor must be >= 0");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, std::sqrt(0.5));
  auto cn = [&]() { return cd(normal(rng), normal(rng)); };

  const bool pure_los = std::isinf(fading.rician_k);
  const double los_w = pure_los ? 1.0 : std::sqrt(fading.rician_k / (1.0 + fading.rician_k));
  const double nlos_w = pure_los ? 0.0 : std::sqrt(1.0 / (1.0 + fading.rician_k));

  const int L = config.L;
  const int N = config.N;
  const int K = config.K;
  ChannelSet ch;

  // BS -> IRS
  {
    const double d = (geometry.irs_position - geometry.bs_position).norm();
    const double amp = std::sqrt(fading.path_loss(d, fading.alpha_bs_irs));
    const CVector a_irs = irs_response(N, direction_between(geometry.irs_position, geometry.bs_position), fading);
    const CVector a_bs = steering_vector(L, direction_between(geometry.bs_position, geometry.irs_position),
                                         fading.element_spacing);
    ch.G.resize(N, L);
    for (int l = 0; l < L; ++l) {
      for (int n = 0; n < N; ++n) {
        const cd scatter = cn();
        ch.G(n, l) = amp * (los_w * a_irs[n] * std::conj(a_bs[l]) + nlos_w * scatter);
      }
    }
  }
  // BS -> users (Rayleigh)
  ch.h_D.resize(K, L);
  for (int k = 0; k < K; ++k) {
    const double d = (geometry.user_positions[k] - geometry.bs_position).norm();
    const double amp = std::sqrt(fading.path_loss(d, fading.alpha_bs_user));
    for (int l = 0; l < L; ++l) ch.h_D(k, l) = amp * cn();
  }
  // IRS -> users
  ch.h_R.resize(K, N);
  for (int k = 0; k < K; ++k) {
    const double d = (geometry.user_positions[k] - geometry.irs_position).norm();
    const double amp = std::sqrt(fading.path_loss(d, fading.alpha_irs_user));
    const CVector a = irs_response(N, direction_between(geometry.irs_position, geometry.user_positions[k]), fading);
    for (int n = 0; n < N; ++n) {
      const cd scatter = cn();
      ch.h_R(k, n) = amp * (los_w * a[n] + nlos_w * scatter);
    }
  }
  ch.g_R = irs_response(N, geometry.target_direction, fading);
  ch.validate(config);
  return ch;
}

}  // namespace sisca
