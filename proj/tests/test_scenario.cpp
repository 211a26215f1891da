#include <gtest/gtest.h>

#include "sisca/scenario.hpp"

namespace sisca {
namespace {

TEST(SteeringVector, SingleElement) {
  const CVector v = steering_vector(1, {0.7, 0.2}, 0.5);
  ASSERT_EQ(v.size(), 1);
  EXPECT_EQ(v[0], cd(1.0, 0.0));
}

TEST(SteeringVector, Broadside) {
  const CVector v = steering_vector(4, {0.0, 0.0}, 0.5);
  for (Index n = 0; n < 4; ++n) EXPECT_NEAR(std::abs(v[n] - cd(1.0)), 0.0, 1e-15);
}

TEST(SteeringVector, ThirtyDegrees) {
  const CVector v = steering_vector(4, {kPi / 6.0, 0.0}, 0.5);
  for (int n = 0; n < 4; ++n) {
    const double phase = kPi * n / 2.0;  // pi * n * sin(pi/6) with spacing 1/2
    EXPECT_NEAR(v[n].real(), std::cos(phase), 1e-14);
    EXPECT_NEAR(v[n].imag(), std::sin(phase), 1e-14);
  }
}

TEST(SteeringVector, UnitModulusAndErrors) {
  for (double az : {-1.3, 0.1, 2.9}) {
    const CVector v = steering_vector(33, {az, 0.4}, 0.37);
    for (Index n = 0; n < v.size(); ++n) EXPECT_NEAR(std::abs(v[n]), 1.0, 1e-14);
    const CVector p = planar_steering_vector(4, 6, {az, 0.4}, 0.5);
    for (Index n = 0; n < p.size(); ++n) EXPECT_NEAR(std::abs(p[n]), 1.0, 1e-14);
  }
  EXPECT_THROW(steering_vector(4, {std::nan(""), 0.0}, 0.5), std::invalid_argument);
  EXPECT_THROW(steering_vector(4, {0.0, INFINITY}, 0.5), std::invalid_argument);
  EXPECT_THROW(steering_vector(0, {0.0, 0.0}, 0.5), std::invalid_argument);
}

TEST(SteeringVector, PlanarIsSeparable) {
  const Direction d{0.4, 0.3};
  const CVector p = planar_steering_vector(3, 5, d, 0.5);
  const CVector h = steering_vector(5, d, 0.5);
  for (int r = 0; r < 3; ++r) {
    const cd vr = std::polar(1.0, kPi * r * std::sin(d.elevation));
    for (int c = 0; c < 5; ++c) EXPECT_NEAR(std::abs(p[r * 5 + c] - vr * h[c]), 0.0, 1e-14);
  }
}

SystemConfig small_config(int N = 16) {
  return SystemConfig::uniform(4, N, 3, 10.0, 10.0, 1.0, 1e-11, 1e-11);
}

TEST(Config, Validation) {
  EXPECT_NO_THROW(small_config().validate());
  auto c = small_config();
  c.K = 0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.sinr_threshold.pop_back();
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.noise_var[1] = 0.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = small_config();
  c.zeta = -1.0;
  EXPECT_THROW(c.validate(), std::invalid_argument);
}

TEST(Geometry, DropUsersDeterministicAndInDisc) {
  GeometryParams p;
  const Geometry a = drop_users(p, 5, 42);
  const Geometry b = drop_users(p, 5, 42);
  for (int k = 0; k < 5; ++k) {
    EXPECT_EQ(a.user_positions[k], b.user_positions[k]);
    EXPECT_LE((a.user_positions[k] - p.user_center).norm(), p.user_radius + 1e-12);
  }
  Geometry bad = a;
  bad.user_positions[1] = bad.user_positions[0];
  EXPECT_THROW(bad.validate(5), std::invalid_argument);
}

TEST(Channels, DeterministicForSeed) {
  const auto cfg = small_config();
  const Geometry g = drop_users({}, cfg.K, 1);
  const auto a = generate_channels(cfg, g, 99, {});
  const auto b = generate_channels(cfg, g, 99, {});
  EXPECT_EQ(a.G, b.G);
  EXPECT_EQ(a.h_D, b.h_D);
  EXPECT_EQ(a.h_R, b.h_R);
  EXPECT_EQ(a.g_R, b.g_R);
  const auto c = generate_channels(cfg, g, 100, {});
  EXPECT_NE(a.G, c.G);
  for (Index n = 0; n < a.g_R.size(); ++n) EXPECT_NEAR(std::abs(a.g_R[n]), 1.0, 1e-14);
}

TEST(Channels, PureLineOfSightLimit) {
  const auto cfg = small_config();
  const Geometry g = drop_users({}, cfg.K, 3);
  FadingParams f;
  f.rician_k = std::numeric_limits<double>::infinity();
  const auto ch = generate_channels(cfg, g, 5, f);
  for (int k = 0; k < cfg.K; ++k) {
    const double d = (g.user_positions[k] - g.irs_position).norm();
    const double amp = std::sqrt(f.path_loss(d, f.alpha_irs_user));
    const CVector los = amp * irs_response(cfg.N, direction_between(g.irs_position, g.user_positions[k]), f);
    EXPECT_LT((ch.h_R.row(k).transpose() - los).norm(), 1e-15);
  }
}

// Doubling the BS-user distance scales E||h_D||^2 by 2^-alpha.
TEST(Channels, PathLossExponentMonteCarlo) {
  auto cfg = SystemConfig::uniform(4, 1, 1, 1.0, 1.0, 1.0, 1.0, 1.0);
  GeometryParams p;
  p.fixed_user_positions = {Eigen::Vector3d(20.0, -30.0, 0.0)};
  const Geometry near = drop_users(p, 1, 0);
  p.fixed_user_positions = {Eigen::Vector3d(40.0, -60.0, 0.0)};
  const Geometry far = drop_users(p, 1, 0);
  FadingParams f;
  double sum_near = 0.0, sum_far = 0.0;
  const int trials = 10000;
  for (int s = 0; s < trials; ++s) {
    sum_near += generate_channels(cfg, near, s, f).h_D.squaredNorm();
    sum_far += generate_channels(cfg, far, s + trials, f).h_D.squaredNorm();
  }
  const double ratio = sum_far / sum_near;
  const double expect = std::pow(2.0, -f.alpha_bs_user);
  EXPECT_NEAR(ratio / expect, 1.0, 0.05);
  const double d = near.user_positions[0].norm();
  EXPECT_NEAR(sum_near / trials / (cfg.L * f.path_loss(d, f.alpha_bs_user)), 1.0, 0.05);
}

}  // namespace
}  // namespace sisca
