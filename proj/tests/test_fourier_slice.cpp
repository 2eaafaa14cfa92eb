#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

#include <gtest/gtest.h>

#include "scattomo/fourier_slice.hpp"

using namespace scattomo;
using namespace scattomo::tomo;

namespace {

constexpr double kPi = std::numbers::pi;

// Line integral of a phantom's value map along xi = const by a fine midpoint rule.
double numeric_line_integral(const Phantom& ph, double phi, double xi, double half_len, int n) {
  const double c = std::cos(phi), s = std::sin(phi);
  const double h = 2.0 * half_len / n;
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    const double eta = -half_len + (i + 0.5) * h;
    const mom::Point2 p{xi * c - eta * s, xi * s + eta * c};
    sum += ph.eps_at(p, 1.0).real() - 1.0;
  }
  return sum * h;
}

double masked_rel_error(const std::vector<double>& got, const std::vector<double>& want, const std::vector<bool>& mask) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    if (!mask[i]) continue;
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  return std::sqrt(num / den);
}

struct DiskCase {
  mom::Grid2D grid;
  Sinogram sino;
  std::vector<double> truth;
  std::vector<bool> mask;
};

DiskCase disk_case(const Phantom& ph, int n_angles, int n_samples, double offset = 0.0) {
  double reach = 0.0;
  for (const auto& s : ph.shapes) reach = std::max(reach, s.reach());
  const double spacing = 4.0 * reach / n_samples;
  DiskCase d;
  d.sino = project_phantom(ph, 1.0, n_angles, n_samples, spacing, Sampling::bin_average,
                           uniform_angles(n_angles, offset));
  const int n = int(std::ceil(2.5 * reach / spacing));
  d.grid = {-0.5 * n * spacing, -0.5 * n * spacing, n, n, spacing, spacing};
  const auto map = rasterize(ph, d.grid, 1.0, 8);
  for (const auto& e : map.eps_rel) d.truth.push_back(e.real() - 1.0);
  for (std::size_t j = 0; j < d.grid.size(); ++j) {
    const auto p = d.grid.center(j);
    bool in = false;
    for (const auto& s : ph.shapes) {
      auto big = s;
      big.width *= 1.2;
      in = in || big.contains(p);
    }
    d.mask.push_back(in);
  }
  return d;
}

}  // namespace

TEST(Projection, CenteredDiskChords) {
  const double r = 0.3;
  Phantom ph{{Shape::disk({0.0, 0.0}, r, 2.0)}};
  const auto s = project_phantom(ph, 1.0, 12, 64, 0.02);
  for (int a = 0; a < 12; ++a)
    for (int m = 0; m < 64; ++m) {
      const double xi = s.xi(m);
      const double want = std::abs(xi) < r ? 2.0 * std::sqrt(r * r - xi * xi) : 0.0;
      EXPECT_NEAR(s.at(a, m), want, 1e-13) << a << "," << m;
    }
}

TEST(Projection, MassIsExactWithBinAveraging) {
  const double r = 0.3;
  Phantom ph{{Shape::disk({0.05, -0.02}, r, 2.0), Shape::rectangle({-0.32, 0.4}, 0.1, 0.25, 1.5)}};
  const auto s = project_phantom(ph, 1.0, 180, 128, 0.012, Sampling::bin_average);
  const double want = kPi * r * r + 0.5 * 0.1 * 0.25;
  for (int a = 0; a < 180; ++a) EXPECT_NEAR(s.mass(a), want, 1e-10 * want) << a;
}

TEST(Projection, OffCenterDiskMatchesQuadrature) {
  Phantom ph{{Shape::disk({0.07, -0.04}, 0.05, 1.3)}};
  const auto s = project_phantom(ph, 1.0, 7, 64, 0.005);
  const int n = 200000;
  const double half = 0.2;
  for (int a = 0; a < 7; ++a)
    for (int m = 8; m < 64; m += 5)
      EXPECT_NEAR(s.at(a, m), numeric_line_integral(ph, s.angles[std::size_t(a)], s.xi(m), half, n),
                  0.3 * 2.5 * 2.0 * half / n)
          << a << "," << m;
}

TEST(Projection, ShiftsWithCenter) {
  const double r = 0.04;
  Phantom centred{{Shape::disk({0.0, 0.0}, r, 2.0)}};
  Phantom moved{{Shape::disk({0.03, 0.01}, r, 2.0)}};
  const auto a = project_phantom(centred, 1.0, 4, 64, 0.004);
  const auto b = project_phantom(moved, 1.0, 4, 64, 0.004);
  for (int k = 0; k < 4; ++k) {
    const double shift = 0.03 * std::cos(a.angles[std::size_t(k)]) + 0.01 * std::sin(a.angles[std::size_t(k)]);
    for (int m = 0; m < 64; ++m) {
      const double xi = b.xi(m) - shift;
      const double want = std::abs(xi) < r ? 2.0 * std::sqrt(r * r - xi * xi) : 0.0;
      EXPECT_NEAR(b.at(k, m), want, 1e-12);
    }
  }
}

TEST(Projection, RectangleAndOverwrite) {
  Phantom rect{{Shape::rectangle({0.01, 0.0}, 0.06, 0.04, 2.0)}};
  const auto s = project_phantom(rect, 1.0, 2, 32, 0.005);
  for (int m = 0; m < 32; ++m) {
    const double xi = s.xi(m) - 0.01;
    if (std::abs(std::abs(xi) - 0.03) > 1e-9) EXPECT_NEAR(s.at(0, m), std::abs(xi) < 0.03 ? 0.04 : 0.0, 1e-14);
  }
  // A background-valued disk painted over a larger disk leaves an annulus.
  Phantom ring{{Shape::disk({0.0, 0.0}, 0.05, 2.0), Shape::disk({0.0, 0.0}, 0.02, 1.0)}};
  const auto r = project_phantom(ring, 1.0, 6, 64, 0.004, Sampling::bin_average);
  const double want = kPi * (0.05 * 0.05 - 0.02 * 0.02);
  // Overlapping shapes fall back to quadrature over each bin.
  for (int a = 0; a < 6; ++a) EXPECT_NEAR(r.mass(a), want, 1e-6 * want);
  EXPECT_NEAR(r.at(0, 32), 2.0 * (0.05 - 0.02), 1e-3);
}

TEST(Projection, Errors) {
  Phantom ph{{Shape::disk({0.0, 0.0}, 0.1, 2.0)}};
  EXPECT_THROW(project_phantom(ph, 1.0, 4, 48, 0.01), DomainError);
  EXPECT_THROW(project_phantom(ph, 1.0, 4, 16, 0.01), DomainError);
  EXPECT_THROW(project_phantom(ph, 1.0, 3, 64, 0.01, Sampling::point, {0.0, 0.1, 0.5}), DomainError);
  EXPECT_THROW(project_phantom(ph, 1.0, 4, 64, -0.01), DomainError);
}

TEST(Spectrum, DcEqualsMass) {
  Phantom ph{{Shape::disk({0.02, 0.01}, 0.05, 1.4)}};
  const auto s = project_phantom(ph, 1.0, 30, 128, 0.002, Sampling::point);
  for (int a = 0; a < 30; ++a) {
    const auto sp = projection_spectrum(s, a);
    EXPECT_NEAR(sp[0].real(), s.mass(a), 1e-9);
    EXPECT_NEAR(sp[0].imag(), 0.0, 1e-12);
  }
}

TEST(Spectrum, ShiftTheoremForDelta) {
  Sinogram s;
  s.n_angles = 1;
  s.n_samples = 16;
  s.angles = {0.0};
  s.sample_spacing = 0.1;
  s.data.assign(16, 0.0);
  s.at(0, 11) = 1.0;  // xi = 0.3
  const auto sp = projection_spectrum(s, 0, 2);
  const std::size_t len = 32;
  for (std::size_t k = 0; k < len; ++k) {
    const double p = 2.0 * kPi * double(k) / (double(len) * 0.1);
    EXPECT_LT(std::abs(sp[k] - 0.1 * std::polar(1.0, p * 0.3)), 1e-12);
  }
}

TEST(Reconstruct, ZeroSinogramGivesZeroMap) {
  Sinogram s;
  s.n_angles = 8;
  s.n_samples = 32;
  s.angles = uniform_angles(8);
  s.sample_spacing = 0.01;
  s.data.assign(256, 0.0);
  const mom::Grid2D g{-0.1, -0.1, 20, 20, 0.01, 0.01};
  for (double v : fourier_slice_reconstruct(s, g)) EXPECT_EQ(v, 0.0);
}

TEST(Reconstruct, DiskWithinTenPercent) {
  Phantom ph{{Shape::disk({0.01, -0.005}, 0.03, 1.02)}};
  const auto d = disk_case(ph, 180, 256);
  const auto rec = fourier_slice_reconstruct(d.sino, d.grid);
  const double err = masked_rel_error(rec, d.truth, d.mask);
  EXPECT_LT(err, 0.10);
  for (int a = 0; a < 180; ++a) EXPECT_NEAR(d.sino.mass(a), d.sino.mass(0), 1e-10 * std::abs(d.sino.mass(0)));
}

TEST(Reconstruct, RotatingAngleLabelsRotatesImage) {
  const double dphi = 0.4;
  auto rot = [&](mom::Point2 p) {
    return mom::Point2{p.x * std::cos(dphi) - p.y * std::sin(dphi), p.x * std::sin(dphi) + p.y * std::cos(dphi)};
  };
  const mom::Point2 c1{0.03, 0.0}, c2{-0.01, 0.02};
  Phantom ph{{Shape::disk(c1, 0.015, 1.02), Shape::disk(c2, 0.01, 1.04)}};
  Phantom turned{{Shape::disk(rot(c1), 0.015, 1.02), Shape::disk(rot(c2), 0.01, 1.04)}};
  auto base = disk_case(ph, 90, 128);
  auto relabel = base.sino;
  for (auto& a : relabel.angles) a += dphi;
  const auto want = fourier_slice_reconstruct(disk_case(turned, 90, 128).sino, base.grid);
  const auto got = fourier_slice_reconstruct(relabel, base.grid);
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < got.size(); ++i) {
    num += (got[i] - want[i]) * (got[i] - want[i]);
    den += want[i] * want[i];
  }
  EXPECT_LT(std::sqrt(num / den), 0.05);
}

TEST(Reconstruct, GridErrors) {
  Phantom ph{{Shape::disk({0.0, 0.0}, 0.03, 1.02)}};
  const auto s = project_phantom(ph, 1.0, 16, 64, 0.002);
  EXPECT_THROW(fourier_slice_reconstruct(s, {-0.05, -0.05, 100, 100, 0.001, 0.001}), DomainError);
  EXPECT_THROW(fourier_slice_reconstruct(s, {-0.05, -0.05, 20, 10, 0.005, 0.01}), DomainError);
}

TEST(Rytov, RecoversPhaseAcrossBranches) {
  const double k1 = 50.0;
  std::vector<Complex> inc, tot, psi;
  for (int m = 0; m < 40; ++m) {
    const Complex e_i = std::polar(0.3 + 0.01 * m, 0.7 * m);
    // phase grows past several multiples of 2 pi in steps below pi
    const Complex p(0.01 + 0.004 * m * m / 40.0 * 5.0, 0.002 * m);
    psi.push_back(p);
    inc.push_back(e_i);
    tot.push_back(e_i * std::exp(Complex(0.0, k1) * p));
  }
  const auto got = rytov_phase(tot, inc, k1);
  ASSERT_GT(k1 * psi.back().real(), 4.0 * kPi);
  for (std::size_t m = 0; m < psi.size(); ++m) EXPECT_LT(std::abs(got[m] - psi[m]), 1e-12) << m;
  EXPECT_THROW(rytov_phase({0.0}, {1.0}, k1), DomainError);
  EXPECT_THROW(rytov_phase({1.0, 1.0}, {1.0}, k1), DomainError);
}
