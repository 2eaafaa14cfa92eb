#pragma once

// Cylindrical Bessel J0, J1, Y0, Y1 and Hankel functions of real argument.
//
// Three regimes, each accurate to ~1e-15 absolute where it is used:
//   x <= 4        ascending power series (J) and logarithmic series (Y)
//   4 < x <= 20   Miller backward recurrence for J_n, Neumann series for Y
//   x > 20        Hankel asymptotic expansion
// The power series alone cancels catastrophically near x = 20 (its largest
// term is ~1e7 there), which is why the middle regime exists.

#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>
#include <vector>

#include "scattomo/errors.hpp"

namespace scattomo::special {

using Complex = std::complex<double>;

inline constexpr double kSeriesLimit = 4.0;
inline constexpr double kAsymptoticLimit = 20.0;

struct BesselPair {
  double j0;
  double j1;
};

struct BesselFunctions {
  double j0;
  double j1;
  double y0;
  double y1;
};

namespace detail {

inline void check_order(int order) {
  if (order != 0 && order != 1)
    throw DomainError("bessel: only orders 0 and 1 are supported, got " +
                      std::to_string(order));
}

// J0, J1 by ascending series. Exact for small x, unusable beyond ~8.
inline BesselPair series_j(double x) {
  const double q = 0.25 * x * x;
  double t0 = 1.0;
  double t1 = 0.5 * x;
  double j0 = t0;
  double j1 = t1;
  for (int k = 1; k < 200; ++k) {
    t0 *= -q / (double(k) * double(k));
    t1 *= -q / (double(k) * double(k + 1));
    j0 += t0;
    j1 += t1;
    if (std::abs(t0) < 1e-18 * std::abs(j0) && std::abs(t1) < 1e-18 * std::abs(j1)) break;
  }
  return {j0, j1};
}

inline BesselFunctions series(double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double gamma = std::numbers::egamma;
  const auto [j0, j1] = series_j(x);
  const double q = 0.25 * x * x;
  const double log_term = std::log(0.5 * x) + gamma;

  // Y0 = (2/pi)[(ln(x/2)+gamma) J0 + sum_{k>=1} (-1)^{k+1} H_k q^k/(k!)^2]
  double t = 1.0;
  double harmonic = 0.0;
  double s0 = 0.0;
  for (int k = 1; k < 200; ++k) {
    t *= -q / (double(k) * double(k));
    harmonic += 1.0 / k;
    const double term = -t * harmonic;
    s0 += term;
    if (std::abs(term) < 1e-18 * (std::abs(s0) + 1e-300)) break;
  }
  const double y0 = (2.0 / pi) * (log_term * j0 + s0);

  // Y1 = -2/(pi x) + (2/pi) ln(x/2) J1
  //      - (1/pi) sum_{k>=0} (-1)^k [psi(k+1) + psi(k+2)] (x/2)^{2k+1}/(k!(k+1)!)
  double u = 0.5 * x;
  double psi_a = -gamma;        // psi(k+1)
  double psi_b = 1.0 - gamma;   // psi(k+2)
  double s1 = u * (psi_a + psi_b);
  for (int k = 1; k < 200; ++k) {
    u *= -q / (double(k) * double(k + 1));
    psi_a += 1.0 / k;
    psi_b += 1.0 / (k + 1);
    const double term = u * (psi_a + psi_b);
    s1 += term;
    if (std::abs(term) < 1e-18 * std::abs(s1)) break;
  }
  const double y1 = -2.0 / (pi * x) + (2.0 / pi) * std::log(0.5 * x) * j1 - s1 / pi;
  return {j0, j1, y0, y1};
}

// Miller backward recurrence normalised by J0 + 2 sum J_2k = 1, then the
// Neumann series for Y0 and its derivative for Y1.
inline BesselFunctions miller(double x) {
  constexpr double pi = std::numbers::pi;
  constexpr double gamma = std::numbers::egamma;
  int n_start = static_cast<int>(1.5 * x) + 30;
  n_start += n_start % 2;

  std::vector<double> jn(static_cast<std::size_t>(n_start) + 2, 0.0);
  jn[static_cast<std::size_t>(n_start)] = 1e-30;
  for (int n = n_start; n >= 1; --n) {
    const auto i = static_cast<std::size_t>(n);
    jn[i - 1] = (2.0 * n / x) * jn[i] - jn[i + 1];
  }
  double norm = jn[0];
  for (int k = 2; k <= n_start; k += 2) norm += 2.0 * jn[static_cast<std::size_t>(k)];
  for (auto& v : jn) v /= norm;

  const double log_term = std::log(0.5 * x) + gamma;
  double sum_y0 = 0.0;
  double sum_y1 = 0.0;
  for (int k = 1; 2 * k <= n_start; ++k) {
    const double sign = (k % 2 == 0) ? 1.0 : -1.0;
    const auto i = static_cast<std::size_t>(2 * k);
    sum_y0 += sign * jn[i] / k;
    sum_y1 += sign * (jn[i - 1] - jn[i + 1]) / k;
  }
  const double y0 = (2.0 / pi) * log_term * jn[0] - (4.0 / pi) * sum_y0;
  const double y1 = (2.0 / pi) * (log_term * jn[1] - jn[0] / x) + (2.0 / pi) * sum_y1;
  return {jn[0], jn[1], y0, y1};
}

// Hankel asymptotic expansion, summed up to its smallest term.
inline void asymptotic_pq(int order, double x, double& p, double& q) {
  const double mu = 4.0 * order * order;
  p = 1.0;
  q = 0.0;
  double term = 1.0;
  double last = 1.0;
  for (int k = 1; k < 100; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * x);
    const double mag = std::abs(term);
    if (mag > last) break;
    last = mag;
    // k odd feeds Q with sign (-1)^((k-1)/2); k even feeds P with sign (-1)^(k/2)
    if (k % 2 == 1)
      q += ((k / 2) % 2 == 0 ? term : -term);
    else
      p += ((k / 2) % 2 == 0 ? term : -term);
    if (mag < 1e-18) break;
  }
}

inline BesselFunctions asymptotic(double x) {
  constexpr double pi = std::numbers::pi;
  const double amp = std::sqrt(2.0 / (pi * x));
  const double c = std::cos(x);
  const double s = std::sin(x);
  const double inv_sqrt2 = 1.0 / std::numbers::sqrt2;
  // chi0 = x - pi/4, chi1 = x - 3pi/4 expanded to avoid rounding x - const.
  const double cos0 = (c + s) * inv_sqrt2;
  const double sin0 = (s - c) * inv_sqrt2;
  const double cos1 = (s - c) * inv_sqrt2;
  const double sin1 = -(s + c) * inv_sqrt2;
  double p0, q0, p1, q1;
  asymptotic_pq(0, x, p0, q0);
  asymptotic_pq(1, x, p1, q1);
  return {amp * (p0 * cos0 - q0 * sin0), amp * (p1 * cos1 - q1 * sin1),
          amp * (p0 * sin0 + q0 * cos0), amp * (p1 * sin1 + q1 * cos1)};
}

inline void check_argument(double x, bool allow_zero) {
  if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0))
    throw DomainError("bessel: argument out of domain: " + std::to_string(x));
}

}  // namespace detail

// J0, J1 together; x >= 0.
inline BesselPair bessel_j_pair(double x) {
  detail::check_argument(x, true);
  if (x <= kSeriesLimit) return detail::series_j(x);
  const auto f = x <= kAsymptoticLimit ? detail::miller(x) : detail::asymptotic(x);
  return {f.j0, f.j1};
}

// All four functions at one argument; x > 0.
inline BesselFunctions bessel_all(double x) {
  detail::check_argument(x, false);
  if (x <= kSeriesLimit) return detail::series(x);
  if (x <= kAsymptoticLimit) return detail::miller(x);
  return detail::asymptotic(x);
}

inline double bessel_j(int order, double x) {
  detail::check_order(order);
  const auto j = bessel_j_pair(x);
  return order == 0 ? j.j0 : j.j1;
}

inline double bessel_y(int order, double x) {
  detail::check_order(order);
  const auto f = bessel_all(x);
  return order == 0 ? f.y0 : f.y1;
}

// kind 1: J + jY, kind 2: J - jY.
inline Complex hankel(int kind, int order, double x) {
  if (kind != 1 && kind != 2)
    throw DomainError("hankel: kind must be 1 or 2, got " + std::to_string(kind));
  detail::check_order(order);
  const auto f = bessel_all(x);
  const double j = order == 0 ? f.j0 : f.j1;
  const double y = order == 0 ? f.y0 : f.y1;
  return kind == 1 ? Complex(j, y) : Complex(j, -y);
}

}  // namespace scattomo::special
