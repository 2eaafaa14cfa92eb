#pragma once

// Direct 2D TM scattering by the method of moments.
//
// The object region is a rectangular grid of pixels; each pixel is replaced
// by the equal-area disk so that the integral of the 2D Green's function over
// a cell has a closed form:
//   off-diagonal  int_cell G = (j pi a / 2k) J1(k a) H0(k rho)
//   self term     int_cell G = (j / 2k^2) [pi k a H1(k a) + 2j]
// The state equation is e^i(r_n) = sum_j [delta_nj - G_nj C_j] e(r_j) with
// contrast C = k^2(r) - k1^2, and receivers see e^s = sum_j G_mj C_j e_j.

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "scattomo/analytic_em.hpp"
#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"
#include "scattomo/parallel.hpp"
#include "scattomo/special_functions.hpp"

namespace scattomo::mom {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;

inline constexpr double kMu0 = analytic::kMu0;
inline constexpr double kEpsilon0 = analytic::kEpsilon0;

// exp_minus_jwt is used throughout the tomography path (outgoing H0^(1));
// exp_plus_jwt flips every kernel to H^(2) and is kept for cross-checks.
enum class TimeConvention { exp_minus_jwt, exp_plus_jwt };

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

inline double distance(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

struct Grid2D {
  double x0 = 0.0;
  double y0 = 0.0;
  int nx = 1;
  int ny = 1;
  double dx = 1.0;
  double dy = 1.0;

  std::size_t size() const { return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny); }
  std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * std::size_t(nx) + std::size_t(i); }
  Point2 center(int i, int j) const { return {x0 + (i + 0.5) * dx, y0 + (j + 0.5) * dy}; }
  Point2 center(std::size_t n) const { return center(int(n % std::size_t(nx)), int(n / std::size_t(nx))); }
  Point2 middle() const { return {x0 + 0.5 * nx * dx, y0 + 0.5 * ny * dy}; }
  double cell_area() const { return dx * dy; }
  // Radius of the disk with the same area as one cell.
  double equivalent_radius() const { return std::sqrt(dx * dy / std::numbers::pi); }
  double circumscribed_radius() const { return 0.5 * std::hypot(nx * dx, ny * dy); }
  bool contains(const Point2& p) const {
    return p.x >= x0 && p.x <= x0 + nx * dx && p.y >= y0 && p.y <= y0 + ny * dy;
  }

  void validate() const {
    if (nx < 1 || ny < 1) throw DomainError("grid: cell counts must be positive");
    if (!(dx > 0.0) || !(dy > 0.0)) throw DomainError("grid: cell sizes must be positive");
    if (!std::isfinite(x0) || !std::isfinite(y0)) throw DomainError("grid: corner must be finite");
  }

  bool operator==(const Grid2D&) const = default;
};

struct ContrastMap {
  Grid2D grid;
  std::vector<Complex> eps_rel;          // per cell, row-major (y outer)
  Complex background_eps_rel{1.0, 0.0};

  static ContrastMap uniform(const Grid2D& g, Complex background) {
    return {g, std::vector<Complex>(g.size(), background), background};
  }

  void validate() const {
    grid.validate();
    if (eps_rel.size() != grid.size())
      throw DomainError("contrast map: expected " + std::to_string(grid.size()) + " cells, got " +
                        std::to_string(eps_rel.size()));
  }
};

enum class ReceiverMode { fixed, opposite_arc };

struct AntennaArray {
  Point2 center;
  double radius = 0.18;
  int n_antennas = 64;
  double frequency = 2.45e9;
  std::vector<int> tx_indices;
  ReceiverMode receiver_mode = ReceiverMode::opposite_arc;
  std::vector<int> rx_indices;  // used when receiver_mode == fixed
  int receivers_per_tx = 16;     // used when receiver_mode == opposite_arc

  double angle(int i) const { return 2.0 * std::numbers::pi * double(i) / double(n_antennas); }
  Point2 position(int i) const {
    const double a = angle(i);
    return {center.x + radius * std::cos(a), center.y + radius * std::sin(a)};
  }

  std::size_t receivers_per_row() const {
    return receiver_mode == ReceiverMode::fixed ? rx_indices.size() : std::size_t(receivers_per_tx);
  }

  // Receivers used with a given emitter. In opposite_arc mode these are the
  // antennas that are not emitters, closest in angle to the point
  // diametrically opposite the emitter, ordered by signed angular offset.
  std::vector<int> receivers_for(int tx) const {
    if (receiver_mode == ReceiverMode::fixed) return rx_indices;
    std::vector<bool> is_tx(static_cast<std::size_t>(n_antennas), false);
    for (int t : tx_indices) is_tx[std::size_t(t)] = true;
    const bool all_emit = std::all_of(is_tx.begin(), is_tx.end(), [](bool b) { return b; });
    struct Candidate {
      int index;
      int offset2;  // twice the signed offset in antenna steps from the opposite point
    };
    std::vector<Candidate> cand;
    for (int a = 0; a < n_antennas; ++a) {
      if (a == tx || (is_tx[std::size_t(a)] && !all_emit)) continue;
      int off2 = (2 * (a - tx) - n_antennas) % (2 * n_antennas);
      if (off2 < -n_antennas) off2 += 2 * n_antennas;
      if (off2 >= n_antennas) off2 -= 2 * n_antennas;
      cand.push_back({a, off2});
    }
    std::stable_sort(cand.begin(), cand.end(), [](const Candidate& p, const Candidate& q) {
      if (std::abs(p.offset2) != std::abs(q.offset2)) return std::abs(p.offset2) < std::abs(q.offset2);
      return p.offset2 < q.offset2;
    });
    if (int(cand.size()) < receivers_per_tx)
      throw DomainError("antenna array: not enough receivers for emitter " + std::to_string(tx));
    cand.resize(std::size_t(receivers_per_tx));
    std::sort(cand.begin(), cand.end(),
              [](const Candidate& p, const Candidate& q) { return p.offset2 < q.offset2; });
    std::vector<int> out;
    out.reserve(cand.size());
    for (const auto& c : cand) out.push_back(c.index);
    return out;
  }

  void validate() const {
    if (n_antennas < 1) throw DomainError("antenna array: n_antennas must be positive");
    if (!(radius > 0.0)) throw DomainError("antenna array: radius must be positive");
    if (!(frequency > 0.0)) throw DomainError("antenna array: frequency must be positive");
    if (tx_indices.empty()) throw DomainError("antenna array: no transmitters");
    auto check = [&](int i) {
      if (i < 0 || i >= n_antennas)
        throw DomainError("antenna array: index " + std::to_string(i) + " out of range");
    };
    for (int t : tx_indices) check(t);
    if (receiver_mode == ReceiverMode::fixed) {
      if (rx_indices.empty()) throw DomainError("antenna array: no receivers");
      for (int r : rx_indices) check(r);
    } else if (receivers_per_tx < 1) {
      throw DomainError("antenna array: receivers_per_tx must be positive");
    }
  }

  // Antennas must sit outside the object region.
  void validate_against(const Grid2D& grid) const {
    validate();
    const Point2 mid = grid.middle();
    if (distance(mid, center) + grid.circumscribed_radius() >= radius)
      throw DomainError("antenna array: radius must exceed the grid's circumscribed radius");
  }
};

struct FieldSolution {
  std::vector<Complex> total_field;
  std::vector<Complex> incident_field;
  int transmitter = 0;
};

struct Wavenumbers {
  Complex k1;
  std::vector<Complex> k_cell;
};

inline double angular_frequency(double frequency) { return 2.0 * std::numbers::pi * frequency; }

// k = omega sqrt(mu0 eps0 eps_r), branch with Im k >= 0.
inline Complex wavenumber(Complex eps_rel, double frequency) {
  Complex k = angular_frequency(frequency) * std::sqrt(kMu0 * kEpsilon0 * eps_rel);
  if (k.imag() < 0.0) k = -k;
  return k;
}

inline Wavenumbers wavenumbers(const ContrastMap& map, double frequency) {
  if (!(frequency > 0.0)) throw DomainError("wavenumbers: frequency must be positive");
  Wavenumbers w{wavenumber(map.background_eps_rel, frequency), {}};
  w.k_cell.reserve(map.eps_rel.size());
  for (const auto& e : map.eps_rel) w.k_cell.push_back(wavenumber(e, frequency));
  return w;
}

// C_j = k_j^2 - k1^2 = omega^2 mu0 eps0 (eps_j - eps_background); exactly zero
// where a cell matches the background.
inline std::vector<Complex> contrast(const ContrastMap& map, double frequency) {
  const double w = angular_frequency(frequency);
  const double scale = w * w * kMu0 * kEpsilon0;
  std::vector<Complex> c;
  c.reserve(map.eps_rel.size());
  for (const auto& e : map.eps_rel) c.push_back(scale * (e - map.background_eps_rel));
  return c;
}

// Background wavenumber as a real number; the Bessel kernels take real
// arguments only, so the host medium must be lossless.
inline double real_wavenumber(Complex k1) {
  if (k1.imag() != 0.0 || !(k1.real() > 0.0))
    throw DomainError("lossy or non-positive background wavenumber is not supported");
  return k1.real();
}

namespace detail {
inline int hankel_kind(TimeConvention tc) { return tc == TimeConvention::exp_minus_jwt ? 1 : 2; }
inline Complex jsign(TimeConvention tc) {
  return tc == TimeConvention::exp_minus_jwt ? Complex(0.0, 1.0) : Complex(0.0, -1.0);
}
}  // namespace detail

// (j/4) H0^(1)(k1 |r - rp|)
inline Complex green_2d(Complex k1, const Point2& r, const Point2& rp,
                        TimeConvention tc = TimeConvention::exp_minus_jwt) {
  const double k = real_wavenumber(k1);
  const double rho = distance(r, rp);
  if (rho == 0.0) throw SingularityError("green_2d: coincident points");
  return 0.25 * detail::jsign(tc) * special::hankel(detail::hankel_kind(tc), 0, k * rho);
}

// Unit-amplitude line source at `source`.
inline Complex line_source_field(Complex k1, const Point2& source, const Point2& r,
                                 TimeConvention tc = TimeConvention::exp_minus_jwt) {
  return green_2d(k1, r, source, tc);
}

// e^{j k1 (cos(phi) x + sin(phi) y)}, propagating along phi under e^{-jwt}.
inline Complex plane_wave_field(Complex k1, double phi, const Point2& r,
                                TimeConvention tc = TimeConvention::exp_minus_jwt) {
  const double k = real_wavenumber(k1);
  const double s = tc == TimeConvention::exp_minus_jwt ? 1.0 : -1.0;
  return std::polar(1.0, s * k * (std::cos(phi) * r.x + std::sin(phi) * r.y));
}

// Integrals of G over one equivalent circular cell.
struct CellQuadrature {
  double k1 = 1.0;
  double radius = 1.0;
  Complex weight;   // off-cell: int_cell G = weight * H0(k1 rho)
  Complex self;     // int_cell G at its own center
  TimeConvention convention = TimeConvention::exp_minus_jwt;

  static CellQuadrature make(const Grid2D& grid, Complex k1c, TimeConvention tc) {
    const double k = real_wavenumber(k1c);
    const double a = grid.equivalent_radius();
    const double ka = k * a;
    const Complex js = detail::jsign(tc);
    const auto f = special::bessel_all(ka);
    const Complex h1 = tc == TimeConvention::exp_minus_jwt ? Complex(f.j1, f.y1) : Complex(f.j1, -f.y1);
    CellQuadrature q;
    q.k1 = k;
    q.radius = a;
    q.convention = tc;
    q.weight = js * (std::numbers::pi * a / (2.0 * k)) * f.j1;
    q.self = js / (2.0 * k * k) * (std::numbers::pi * ka * h1 + 2.0 * js);
    return q;
  }

  Complex h0(double rho) const { return special::hankel(detail::hankel_kind(convention), 0, k1 * rho); }
  // int over a cell at distance rho > 0 of G(r, r')
  Complex integral(double rho) const { return weight * h0(rho); }
};

namespace detail {

// Toeplitz table of cell-to-cell integrals indexed by |di| + nx |dj|.
inline std::vector<Complex> coupling_table(const Grid2D& g, const CellQuadrature& q) {
  std::vector<Complex> table(g.size());
  parallel_for(std::size_t(g.ny), [&](std::size_t dj) {
    for (int di = 0; di < g.nx; ++di) {
      const std::size_t idx = dj * std::size_t(g.nx) + std::size_t(di);
      if (di == 0 && dj == 0) {
        table[idx] = q.self;
      } else {
        table[idx] = q.integral(std::hypot(di * g.dx, double(dj) * g.dy));
      }
    }
  });
  return table;
}

template <typename Matrix>
void fill_state(Matrix& m, const Grid2D& g, const std::vector<Complex>& c, const std::vector<Complex>& table) {
  const std::size_t n = g.size();
  m.resize(Eigen::Index(n), Eigen::Index(n));
  parallel_for(n, [&](std::size_t row) {
    const int ir = int(row % std::size_t(g.nx));
    const int jr = int(row / std::size_t(g.nx));
    for (std::size_t col = 0; col < n; ++col) {
      const int ic = int(col % std::size_t(g.nx));
      const int jc = int(col / std::size_t(g.nx));
      const std::size_t t = std::size_t(std::abs(jr - jc)) * std::size_t(g.nx) + std::size_t(std::abs(ir - ic));
      Complex v = -c[col] * table[t];
      if (row == col) v += 1.0;
      m(Eigen::Index(row), Eigen::Index(col)) = v;
    }
  });
}

}  // namespace detail

// M_nj = delta_nj - C_j int_cell_j G(r_n, r').
inline CMatrix assemble_state(const ContrastMap& map, double frequency,
                              TimeConvention tc = TimeConvention::exp_minus_jwt) {
  map.validate();
  const auto k1 = wavenumber(map.background_eps_rel, frequency);
  const auto q = CellQuadrature::make(map.grid, k1, tc);
  const auto c = contrast(map, frequency);
  CMatrix m;
  detail::fill_state(m, map.grid, c, detail::coupling_table(map.grid, q));
  return m;
}

// Assembled and factored state equation for one (map, frequency), shared
// read-only by every transmitter.
class ForwardSolver {
 public:
  ForwardSolver(ContrastMap map, double frequency, TimeConvention tc = TimeConvention::exp_minus_jwt)
      : map_(std::move(map)), frequency_(frequency), convention_(tc) {
    map_.validate();
    if (!(frequency > 0.0)) throw DomainError("forward solver: frequency must be positive");
    k1_ = wavenumber(map_.background_eps_rel, frequency_);
    quad_ = CellQuadrature::make(map_.grid, k1_, tc);
    contrast_ = contrast(map_, frequency_);
    Eigen::MatrixXcd m;
    detail::fill_state(m, map_.grid, contrast_, detail::coupling_table(map_.grid, quad_));
    if (!linalg::all_finite(m))
      throw NumericalError("assemble_state: state matrix has non-finite entries");
    lu_.emplace(m, "forward solve (state-equation LU)");
  }

  const ContrastMap& map() const { return map_; }
  double frequency() const { return frequency_; }
  Complex k1() const { return k1_; }
  const CellQuadrature& quadrature() const { return quad_; }
  const std::vector<Complex>& contrast_values() const { return contrast_; }
  TimeConvention convention() const { return convention_; }

  std::vector<Complex> incident_from(const AntennaArray& array, int tx) const {
    const Point2 src = array.position(tx);
    if (map_.grid.contains(src))
      throw DomainError("transmitter " + std::to_string(tx) + " lies inside the object grid");
    std::vector<Complex> inc(map_.grid.size());
    for (std::size_t n = 0; n < inc.size(); ++n)
      inc[n] = line_source_field(k1_, src, map_.grid.center(n), convention_);
    return inc;
  }

  std::vector<Complex> solve_incident(const std::vector<Complex>& incident) const {
    CVector rhs = Eigen::Map<const CVector>(incident.data(), Eigen::Index(incident.size()));
    const Eigen::MatrixXcd x = lu_->solve(rhs);
    return {x.data(), x.data() + x.size()};
  }

  FieldSolution solve(const AntennaArray& array, int tx) const {
    if (std::find(array.tx_indices.begin(), array.tx_indices.end(), tx) == array.tx_indices.end())
      throw DomainError("solve_forward: antenna " + std::to_string(tx) + " is not a transmitter");
    FieldSolution sol;
    sol.transmitter = tx;
    sol.incident_field = incident_from(array, tx);
    sol.total_field = solve_incident(sol.incident_field);
    return sol;
  }

  // All transmitters with one multi-column back substitution.
  std::vector<FieldSolution> solve_all(const AntennaArray& array) const {
    const std::size_t n = map_.grid.size();
    const std::size_t nt = array.tx_indices.size();
    Eigen::MatrixXcd rhs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(nt));
    std::vector<FieldSolution> out(nt);
    parallel_for(nt, [&](std::size_t t) {
      out[t].transmitter = array.tx_indices[t];
      out[t].incident_field = incident_from(array, array.tx_indices[t]);
    });
    for (std::size_t t = 0; t < nt; ++t)
      for (std::size_t i = 0; i < n; ++i) rhs(Eigen::Index(i), Eigen::Index(t)) = out[t].incident_field[i];
    const Eigen::MatrixXcd x = lu_->solve(rhs);
    for (std::size_t t = 0; t < nt; ++t)
      out[t].total_field.assign(x.col(Eigen::Index(t)).data(), x.col(Eigen::Index(t)).data() + n);
    return out;
  }

  // e^s at a point outside the grid.
  Complex scattered_at(const Point2& r, const std::vector<Complex>& total) const {
    if (map_.grid.contains(r)) throw DomainError("scattered field requested inside the object grid");
    Complex sum = 0.0;
    for (std::size_t j = 0; j < total.size(); ++j) {
      if (contrast_[j] == Complex(0.0)) continue;
      sum += quad_.integral(distance(r, map_.grid.center(j))) * contrast_[j] * total[j];
    }
    return sum;
  }

  std::vector<Complex> scattered_at_receivers(const FieldSolution& sol, const AntennaArray& array) const {
    const auto rx = array.receivers_for(sol.transmitter);
    std::vector<Complex> out(rx.size());
    for (std::size_t m = 0; m < rx.size(); ++m) out[m] = scattered_at(array.position(rx[m]), sol.total_field);
    return out;
  }

 private:
  ContrastMap map_;
  double frequency_;
  TimeConvention convention_;
  Complex k1_;
  CellQuadrature quad_;
  std::vector<Complex> contrast_;
  std::optional<linalg::LuFactorization<Complex>> lu_;
};

inline FieldSolution solve_forward(const ContrastMap& map, const AntennaArray& array, int tx,
                                   TimeConvention tc = TimeConvention::exp_minus_jwt) {
  return ForwardSolver(map, array.frequency, tc).solve(array, tx);
}

inline std::vector<Complex> scattered_at_receivers(const ContrastMap& map, const FieldSolution& sol,
                                                   const AntennaArray& array,
                                                   TimeConvention tc = TimeConvention::exp_minus_jwt) {
  map.validate();
  const auto k1 = wavenumber(map.background_eps_rel, array.frequency);
  const auto q = CellQuadrature::make(map.grid, k1, tc);
  const auto c = contrast(map, array.frequency);
  const auto rx = array.receivers_for(sol.transmitter);
  std::vector<Complex> out(rx.size(), Complex(0.0));
  for (std::size_t m = 0; m < rx.size(); ++m) {
    const Point2 r = array.position(rx[m]);
    if (map.grid.contains(r))
      throw DomainError("receiver " + std::to_string(rx[m]) + " lies inside the object grid");
    for (std::size_t j = 0; j < c.size(); ++j)
      if (c[j] != Complex(0.0)) out[m] += q.integral(distance(r, map.grid.center(j))) * c[j] * sol.total_field[j];
  }
  return out;
}

struct RichmondSystem {
  CMatrix a;
  CVector incident;
};

// Richmond's TM cylinder matrix in the e^{+jwt} / H^(2) form:
//   A_mm = eps_m + j(pi/2)(eps_m - 1) k a_m H1^(2)(k a_m)
//   A_mn = j(pi/2)(eps_m - 1) k a_n J1(k a_n) H0^(2)(k rho_mn)
//   E^i_m = exp(j k (x_m cos phi_i + y_m sin phi_i))
inline RichmondSystem richmond_halfcylinder(const std::vector<double>& eps, const std::vector<Point2>& centers,
                                            const std::vector<double>& radii, double k, double phi_i) {
  const std::size_t n = eps.size();
  if (centers.size() != n || radii.size() != n)
    throw DomainError("richmond: eps, centers and radii must have equal length");
  if (!(k > 0.0)) throw DomainError("richmond: k must be positive");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(radii[i] > 0.0)) throw DomainError("richmond: radii must be positive");
    if (!(eps[i] >= 1.0)) throw DomainError("richmond: eps must be real and >= 1");
  }
  const Complex j(0.0, 1.0);
  RichmondSystem s{CMatrix(Eigen::Index(n), Eigen::Index(n)), CVector(Eigen::Index(n))};
  for (std::size_t m = 0; m < n; ++m) {
    const double em1 = eps[m] - 1.0;
    for (std::size_t c = 0; c < n; ++c) {
      Complex v;
      if (m == c) {
        v = em1 == 0.0 ? Complex(eps[m]) : eps[m] + j * (std::numbers::pi / 2.0) * em1 * k * radii[m] *
                                                special::hankel(2, 1, k * radii[m]);
      } else {
        const double rho = distance(centers[m], centers[c]);
        if (rho == 0.0) throw DomainError("richmond: coincident cell centers");
        v = em1 == 0.0 ? Complex(0.0)
                       : j * (std::numbers::pi / 2.0) * em1 * k * radii[c] * special::bessel_j(1, k * radii[c]) *
                             special::hankel(2, 0, k * rho);
      }
      s.a(Eigen::Index(m), Eigen::Index(c)) = v;
    }
    s.incident(Eigen::Index(m)) =
        std::polar(1.0, k * (centers[m].x * std::cos(phi_i) + centers[m].y * std::sin(phi_i)));
  }
  return s;
}

}  // namespace scattomo::mom
