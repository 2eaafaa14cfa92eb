#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "scattomo/analytic_em.hpp"

using namespace scattomo;
using namespace scattomo::analytic;

namespace {
constexpr double kPi = std::numbers::pi;
}

TEST(PointCharge, Examples) {
  const PointChargeConfig cfg{2.0, 0.5};
  EXPECT_EQ(point_charge_potential(cfg, {0.3, 0.0, -0.2}), 0.0);
  EXPECT_NEAR(point_charge_potential(cfg, {0.0, 1.0, 0.0}), cfg.q / (6.0 * kPi * kEpsilon0 * cfg.r),
              1e-12 * cfg.q / (6.0 * kPi * kEpsilon0 * cfg.r));
  EXPECT_EQ(point_charge_potential(cfg, {0.0, -2.5, 0.0}), 0.0);
  EXPECT_THROW(point_charge_potential(cfg, {0.0, 0.5, 0.0}), SingularityError);
  EXPECT_THROW(point_charge_potential(cfg, {0.0, -0.5, 0.0}), SingularityError);
}

TEST(PointCharge, DecaysLikeDipoleFarAway) {
  // Charge plus image form a dipole of moment 2qr; on axis V ~ 2qr / (4 pi eps0 y^2).
  const PointChargeConfig cfg{1.0, 0.01};
  const double y = 10.0;
  const double v = point_charge_potential(cfg, {0.0, y, 0.0});
  EXPECT_NEAR(v / (2.0 * cfg.q * cfg.r / (4.0 * kPi * kEpsilon0 * y * y)), 1.0, 1e-5);
}

TEST(LineCharge, Examples) {
  const LineChargeConfig cfg{3e-9, 0.4};
  EXPECT_EQ(line_charge_potential(cfg, {0.7, kPi / 2.0}), 0.0);
  EXPECT_EQ(line_charge_potential(cfg, {0.3, 0.6}), line_charge_potential(cfg, {0.3, -0.6}));
  const double want = cfg.lambda / (2.0 * kPi * kEpsilon0) * std::log(9.0);
  EXPECT_NEAR(line_charge_potential(cfg, {cfg.d / 2.0, 0.0}), want, 1e-12 * want);
  EXPECT_EQ(line_charge_potential(cfg, {0.5, 2.5}), 0.0);
  EXPECT_THROW(line_charge_potential(cfg, {cfg.d, 0.0}), SingularityError);
  EXPECT_THROW(line_charge_potential(cfg, {cfg.d, kPi}), SingularityError);
}

TEST(ImagePotentials, VanishOnPlane) {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> u(-5.0, 5.0);
  const PointChargeConfig pc{1e-9, 0.3};
  const LineChargeConfig lc{1e-9, 0.3};
  const double scale_p = pc.q / (4.0 * kPi * kEpsilon0 * pc.r);
  const double scale_l = lc.lambda / (2.0 * kPi * kEpsilon0);
  for (int i = 0; i < 100; ++i) {
    EXPECT_LT(std::abs(point_charge_potential(pc, {u(rng), 0.0, u(rng)})), 1e-12 * scale_p);
    const double r = std::abs(u(rng)) + 1e-3;
    const double phi = (i % 2 == 0 ? 1.0 : -1.0) * kPi / 2.0;
    EXPECT_LT(std::abs(line_charge_potential(lc, {r, phi})), 1e-12 * scale_l);
  }
}

TEST(Dipole, AxialNull) {
  const DipoleConfig cfg{1.0, 0.01, 20.0};
  for (double r : {0.01, 1.0, 50.0}) {
    EXPECT_EQ(std::abs(dipole_field(cfg, r, 0.0, DipoleMode::full).e_theta), 0.0);
    EXPECT_EQ(std::abs(dipole_field(cfg, r, 0.0, DipoleMode::farfield).e_theta), 0.0);
  }
}

TEST(Dipole, FarFieldLimit) {
  const DipoleConfig cfg{1.0, 0.01, 20.0};
  const double r = 100.0 / cfg.beta;
  for (double theta : {0.3, 1.0, kPi / 2.0, 2.5}) {
    const auto full = dipole_field(cfg, r, theta, DipoleMode::full);
    const auto far = dipole_field(cfg, r, theta, DipoleMode::farfield);
    EXPECT_LT(std::abs(full.e_theta - far.e_theta) / std::abs(full.e_theta), 2e-2);
    EXPECT_EQ(far.e_r, Complex(0.0));
    EXPECT_EQ(far.e_phi, Complex(0.0));
  }
}

TEST(Dipole, NearFieldRadialDominates) {
  // For beta r << 1, |E_r| / |E_theta| ~ 2 cot(theta); at theta = pi/4 the ratio is ~2.
  const DipoleConfig cfg{1.0, 0.01, 20.0};
  const double r = 0.1 / cfg.beta;
  const auto f = dipole_field(cfg, r, kPi / 4.0, DipoleMode::full);
  EXPECT_GT(std::abs(f.e_r), std::abs(f.e_theta));
  EXPECT_NEAR(std::abs(f.e_r) / std::abs(f.e_theta), 2.0, 0.05);
}

TEST(Dipole, PhiComponentVanishes) {
  const DipoleConfig cfg{2.0, 0.05, 7.0};
  for (double r = 0.01; r < 100.0; r *= 3.0)
    for (double t = 0.0; t < kPi; t += 0.4) EXPECT_EQ(dipole_field(cfg, r, t, DipoleMode::full).e_phi, Complex(0.0));
}

TEST(Dipole, Errors) {
  const DipoleConfig cfg;
  EXPECT_THROW(dipole_field(cfg, 0.0, 1.0, DipoleMode::full), DomainError);
  EXPECT_THROW(dipole_field(cfg, -1.0, 1.0, DipoleMode::farfield), DomainError);
  DipoleConfig raised = cfg;
  raised.d = 0.2;
  EXPECT_THROW(dipole_field(raised, 1.0, 1.0, DipoleMode::full), DomainError);
  raised.d = -0.2;
  EXPECT_THROW(dipole_above_pec(raised, 1.0, 1.0), DomainError);
}

TEST(DipoleAbovePec, ZeroHeightDoublesFreeSpace) {
  std::mt19937_64 rng(37);
  std::uniform_real_distribution<double> ur(1.0, 100.0), ut(0.0, kPi / 2.0);
  const DipoleConfig cfg{1.5, 0.02, 30.0};
  for (int i = 0; i < 100; ++i) {
    const double r = ur(rng), t = ut(rng);
    const Complex pec = dipole_above_pec(cfg, r, t);
    const Complex free = dipole_field(cfg, r, t, DipoleMode::farfield).e_theta;
    EXPECT_LE(std::abs(pec - 2.0 * free), 4.0 * std::numeric_limits<double>::epsilon() * std::abs(pec));
  }
}

TEST(DipoleAbovePec, PatternNulls) {
  DipoleConfig cfg{1.0, 0.01, 10.0};
  cfg.d = kPi / cfg.beta;
  EXPECT_EQ(std::abs(dipole_above_pec(cfg, 5.0, 0.0)), 0.0);
  EXPECT_LT(std::abs(dipole_above_pec(cfg, 5.0, kPi / 3.0)), 1e-15);
  const Complex ref = dipole_field({1.0, 0.01, 10.0}, 5.0, kPi / 2.0, DipoleMode::farfield).e_theta;
  for (double d : {0.0, 0.1, 0.37, 2.0}) {
    cfg.d = d;
    EXPECT_NEAR(std::abs(dipole_above_pec(cfg, 5.0, kPi / 2.0) - 2.0 * ref), 0.0, 1e-12 * std::abs(ref));
  }
}

TEST(DipoleAbovePec, ZeroBelowPlane) {
  DipoleConfig cfg{1.0, 0.01, 10.0};
  cfg.d = 0.3;
  for (double t : {kPi / 2.0 + 1e-9, 2.0, kPi}) EXPECT_EQ(dipole_above_pec(cfg, 5.0, t), Complex(0.0));
}

TEST(EigenGreen, SymmetricAndVanishesAtEnds) {
  const SturmLiouvilleGreen sl{kPi, 400};
  EXPECT_EQ(eigen_green(sl, 0.7, 2.1), eigen_green(sl, 2.1, 0.7));
  EXPECT_LT(std::abs(eigen_green(sl, 1e-9, 1.5)), 1e-8);
  EXPECT_THROW(eigen_green(sl, 0.0, 1.0), DomainError);
  EXPECT_THROW(eigen_green(sl, 1.0, kPi), DomainError);
  EXPECT_THROW(eigen_green({kPi, 0}, 1.0, 2.0), DomainError);
}

TEST(EigenGreen, MatchesClosedForm) {
  // Green's function of -u'' on (0, L) with Dirichlet ends: x (L - xi) / L for x <= xi.
  const double want = 1.0 * (kPi - 2.0) / kPi;
  EXPECT_NEAR(eigen_green({kPi, 10000}, 1.0, 2.0), want, 1e-3);
  const double l = 2.5;
  EXPECT_NEAR(eigen_green({l, 20000}, 0.4, 1.9), 0.4 * (l - 1.9) / l, 1e-4);
}

TEST(EigenGreen, ErrorHalvesWhenTermsDouble) {
  // On the diagonal the tail is a sum of positive terms, so convergence is monotone.
  const double x = 1.3;
  const double exact = x * (kPi - x) / kPi;
  double prev = std::abs(eigen_green({kPi, 250}, x, x) - exact);
  for (int n = 500; n <= 16000; n *= 2) {
    const double err = std::abs(eigen_green({kPi, n}, x, x) - exact);
    EXPECT_LT(err, prev);
    EXPECT_NEAR(prev / err, 2.0, 0.4) << n;
    prev = err;
  }
}
