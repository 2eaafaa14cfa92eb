#pragma once

// Closed-form fields used as the exactly solvable validation corpus:
// image-theory potentials above a grounded PEC plane, the infinitesimal
// dipole (free space and above PEC), and the eigenfunction expansion of the
// Dirichlet Green's function of -u'' on [0, L].

#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "scattomo/errors.hpp"

namespace scattomo::analytic {

using Complex = std::complex<double>;

inline constexpr double kEpsilon0 = 8.854e-12;               // F/m
inline constexpr double kMu0 = 4.0 * std::numbers::pi * 1e-7;  // H/m
inline constexpr double kEta0 = 120.0 * std::numbers::pi;      // ohm

struct Point3 {
  double x;
  double y;
  double z;
};

struct PolarPoint {
  double radius;
  double phi;
};

// Charge q at height r above the grounded plane y = 0.
struct PointChargeConfig {
  double q = 1.0;
  double r = 1.0;
  double epsilon0 = kEpsilon0;
};

// Infinite line charge parallel to z at distance d from the grounded plane x = 0.
struct LineChargeConfig {
  double lambda = 1.0;
  double d = 1.0;
  double epsilon0 = kEpsilon0;
};

struct DipoleConfig {
  double i0 = 1.0;
  double l = 1.0;
  double beta = 1.0;
  double eta = kEta0;
  double d = 0.0;  // height above PEC; 0 means free space for dipole_field
};

struct SturmLiouvilleGreen {
  double length = std::numbers::pi;
  int n_terms = 1000;
};

enum class DipoleMode { full, farfield };

struct SphericalField {
  Complex e_r;
  Complex e_theta;
  Complex e_phi;
};

inline double point_charge_potential(const PointChargeConfig& cfg, const Point3& p) {
  if (!(cfg.r > 0.0) || !(cfg.epsilon0 > 0.0))
    throw DomainError("point_charge_potential: r and epsilon0 must be positive");
  const double rho2 = p.x * p.x + p.z * p.z;
  const double d_source = std::sqrt(rho2 + (p.y - cfg.r) * (p.y - cfg.r));
  const double d_image = std::sqrt(rho2 + (p.y + cfg.r) * (p.y + cfg.r));
  if (d_source == 0.0 || d_image == 0.0)
    throw SingularityError("point_charge_potential: point coincides with the charge or its image");
  if (p.y <= 0.0) return 0.0;
  return cfg.q / (4.0 * std::numbers::pi * cfg.epsilon0) * (1.0 / d_source - 1.0 / d_image);
}

// Polar coordinates about the plane origin, phi measured from the normal
// through the line; the conductor occupies cos(phi) < 0.
inline double line_charge_potential(const LineChargeConfig& cfg, const PolarPoint& p) {
  if (!(cfg.d > 0.0) || !(cfg.epsilon0 > 0.0))
    throw DomainError("line_charge_potential: d and epsilon0 must be positive");
  if (p.radius < 0.0) throw DomainError("line_charge_potential: negative radius");
  const double c = std::cos(p.phi);
  const double base = cfg.d * cfg.d + p.radius * p.radius;
  const double cross = 2.0 * cfg.d * p.radius * c;
  const double to_image = base + cross;
  const double to_source = base - cross;
  if (to_source <= 0.0 || to_image <= 0.0)
    throw SingularityError("line_charge_potential: point lies on the line charge or its image");
  if (c < 0.0) return 0.0;
  return cfg.lambda / (2.0 * std::numbers::pi * cfg.epsilon0) * std::log(to_image / to_source);
}

namespace detail {

inline void check_dipole(const DipoleConfig& cfg, double r) {
  if (!(cfg.beta > 0.0) || !(cfg.l > 0.0) || !(cfg.eta > 0.0))
    throw DomainError("dipole: beta, l and eta must be positive");
  if (!(r > 0.0)) throw DomainError("dipole: r must be positive, got " + std::to_string(r));
}

// j eta beta I0 l sin(theta) e^{-j beta r} / (4 pi r)
inline Complex farfield_theta(const DipoleConfig& cfg, double r, double theta) {
  const Complex j(0.0, 1.0);
  const Complex phase = std::polar(1.0, -cfg.beta * r);
  return j * cfg.eta * (cfg.beta * cfg.i0 * cfg.l * std::sin(theta) / (4.0 * std::numbers::pi * r)) *
         phase;
}

}  // namespace detail

inline SphericalField dipole_field(const DipoleConfig& cfg, double r, double theta, DipoleMode mode) {
  detail::check_dipole(cfg, r);
  if (cfg.d != 0.0) throw DomainError("dipole_field: free-space dipole requires d = 0");
  if (mode == DipoleMode::farfield) return {0.0, detail::farfield_theta(cfg, r, theta), 0.0};

  const Complex j(0.0, 1.0);
  const double br = cfg.beta * r;
  const Complex phase = std::polar(1.0, -br);
  const Complex inv_jbr = 1.0 / (j * br);
  const Complex e_r = cfg.eta * (cfg.i0 * cfg.l * std::cos(theta) / (2.0 * std::numbers::pi * r * r)) *
                      (1.0 + inv_jbr) * phase;
  const Complex e_theta = detail::farfield_theta(cfg, r, theta) * (1.0 + inv_jbr - 1.0 / (br * br));
  return {e_r, e_theta, 0.0};
}

// Far-zone E_theta of a vertical dipole at height d over PEC. The field
// below the plane (theta > pi/2) is zero. Valid for beta r >> 1.
inline Complex dipole_above_pec(const DipoleConfig& cfg, double r, double theta) {
  detail::check_dipole(cfg, r);
  if (cfg.d < 0.0) throw DomainError("dipole_above_pec: d must be nonnegative");
  if (theta > std::numbers::pi / 2.0) return 0.0;
  return detail::farfield_theta(cfg, r, theta) * (2.0 * std::cos(cfg.beta * cfg.d * std::cos(theta)));
}

// Partial sum of sum_n phi_n(x) phi_n(xi) / lambda_n, phi_n = sqrt(2/L) sin(n pi x / L).
inline double eigen_green(const SturmLiouvilleGreen& sl, double x, double xi) {
  if (sl.n_terms < 1) throw DomainError("eigen_green: n_terms must be >= 1");
  if (!(sl.length > 0.0)) throw DomainError("eigen_green: length must be positive");
  if (!(x > 0.0 && x < sl.length) || !(xi > 0.0 && xi < sl.length))
    throw DomainError("eigen_green: arguments must lie in the open interval (0, L)");
  const double w = std::numbers::pi / sl.length;
  double sum = 0.0;
  for (int n = 1; n <= sl.n_terms; ++n) {
    const double k = w * n;
    sum += std::sin(k * x) * std::sin(k * xi) / (k * k);
  }
  return 2.0 / sl.length * sum;
}

}  // namespace scattomo::analytic
