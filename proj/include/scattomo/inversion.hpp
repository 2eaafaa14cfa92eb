#pragma once

// Born-linearised inversion and SVD-filter regularisation.
//
// Every filtered solution has the form x = sum_i f_i (u_i^T b / sigma_i) v_i:
//   Tikhonov  f_i = sigma_i^2 / (sigma_i^2 + beta)
//   TSVD      f_i = 1 for i <= k, 0 otherwise
// The complex Born system is realified before any of this is applied.

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"
#include "scattomo/forward_mom.hpp"
#include "scattomo/parallel.hpp"

namespace scattomo::inversion {

using linalg::CMatrix;
using linalg::Complex;
using linalg::CVector;
using linalg::RealSystem;
using linalg::RMatrix;
using linalg::RVector;
using linalg::SvdResult;

struct BornSystem {
  CMatrix a;                 // rows: (tx, rx) pairs, tx outer; cols: cells
  CVector b;                 // stacked scattered fields, same row order
  mom::Grid2D grid;
  mom::AntennaArray array;
  Complex background_eps_rel{1.0, 0.0};
  double noise_level = 0.0;  // estimated ||epsilon||
};

// Sensitivity of the receiver data to the per-cell contrast C(r_j), with the
// unknown total field replaced by the incident field.
inline CMatrix born_assemble(const mom::Grid2D& grid, Complex background, const mom::AntennaArray& array,
                             mom::TimeConvention tc = mom::TimeConvention::exp_minus_jwt) {
  grid.validate();
  array.validate();
  const auto k1 = mom::wavenumber(background, array.frequency);
  const auto quad = mom::CellQuadrature::make(grid, k1, tc);
  const std::size_t n = grid.size();

  std::vector<std::vector<int>> rx_lists;
  std::size_t rows = 0;
  for (int t : array.tx_indices) {
    rx_lists.push_back(array.receivers_for(t));
    rows += rx_lists.back().size();
  }
  for (int ant = 0; ant < array.n_antennas; ++ant)
    if (grid.contains(array.position(ant)))
      throw DomainError("born_assemble: antenna " + std::to_string(ant) + " lies inside the grid");

  // Cell integrals of G seen from each antenna, and incident fields.
  std::vector<std::vector<Complex>> coupling(std::size_t(array.n_antennas));
  std::vector<bool> needed(std::size_t(array.n_antennas), false);
  for (const auto& l : rx_lists)
    for (int r : l) needed[std::size_t(r)] = true;
  parallel_for(std::size_t(array.n_antennas), [&](std::size_t ant) {
    if (!needed[ant]) return;
    const auto p = array.position(int(ant));
    coupling[ant].resize(n);
    for (std::size_t j = 0; j < n; ++j) coupling[ant][j] = quad.integral(mom::distance(p, grid.center(j)));
  });
  std::vector<std::vector<Complex>> incident(array.tx_indices.size());
  parallel_for(array.tx_indices.size(), [&](std::size_t t) {
    const auto src = array.position(array.tx_indices[t]);
    incident[t].resize(n);
    for (std::size_t j = 0; j < n; ++j) incident[t][j] = mom::line_source_field(k1, src, grid.center(j), tc);
  });

  CMatrix a(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(n));
  std::size_t row = 0;
  for (std::size_t t = 0; t < rx_lists.size(); ++t) {
    for (int r : rx_lists[t]) {
      const auto& g = coupling[std::size_t(r)];
      for (std::size_t j = 0; j < n; ++j) a(Eigen::Index(row), Eigen::Index(j)) = g[j] * incident[t][j];
      ++row;
    }
  }
  return a;
}

// Row-major stacking of a |tx| x |rx| scatter matrix into the Born data vector.
inline CVector stack_rows(const CMatrix& s) {
  CVector b(s.size());
  Eigen::Index k = 0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) b(k++) = s(i, j);
  return b;
}

enum class RegOperator { identity, gradient };

struct TikhonovConfig {
  double beta = 0.0;
  RegOperator w = RegOperator::identity;
  // Cell lattice of each half of the realified unknown, needed for the gradient.
  int lattice_nx = 0;
  int lattice_ny = 0;
};

inline double tikhonov_filter(double sigma, double beta) {
  const double s2 = sigma * sigma;
  if (s2 == 0.0) return 0.0;
  return s2 / (s2 + beta);
}

// sum_i f_i (u_i^T b / sigma_i) v_i; modes with sigma_i = 0 are skipped.
inline RVector filtered_solution(const SvdResult& s, const RVector& b, const RVector& filters) {
  if (b.size() != s.u.rows()) throw DomainError("filtered_solution: data length mismatch");
  if (filters.size() != s.sigma.size()) throw DomainError("filtered_solution: filter length mismatch");
  const RVector c = s.u.transpose() * b;
  RVector coef = RVector::Zero(s.sigma.size());
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma(i) > 0.0 && filters(i) != 0.0) coef(i) = filters(i) * c(i) / s.sigma(i);
  return s.v * coef;
}

inline RVector tikhonov_filters(const RVector& sigma, double beta) {
  RVector f(sigma.size());
  for (Eigen::Index i = 0; i < sigma.size(); ++i) f(i) = tikhonov_filter(sigma(i), beta);
  return f;
}

// First differences between lattice neighbours (Neumann edges: no boundary rows).
inline RMatrix gradient_operator(int nx, int ny) {
  if (nx < 1 || ny < 1) throw DomainError("gradient_operator: lattice dimensions must be positive");
  const Eigen::Index n = Eigen::Index(nx) * ny;
  const Eigen::Index rows = Eigen::Index(nx - 1) * ny + Eigen::Index(nx) * (ny - 1);
  RMatrix d = RMatrix::Zero(std::max<Eigen::Index>(rows, 1), n);
  Eigen::Index r = 0;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i + 1 < nx; ++i, ++r) {
      d(r, j * nx + i) = -1.0;
      d(r, j * nx + i + 1) = 1.0;
    }
  for (int j = 0; j + 1 < ny; ++j)
    for (int i = 0; i < nx; ++i, ++r) {
      d(r, j * nx + i) = -1.0;
      d(r, (j + 1) * nx + i) = 1.0;
    }
  return d;
}

// Tikhonov with identity regulariser through a precomputed SVD.
inline RVector tikhonov_solve(const SvdResult& s, const RVector& b, double beta) {
  if (!(beta >= 0.0)) throw DomainError("tikhonov: beta must be nonnegative");
  if (beta == 0.0)
    for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
      if (s.sigma(i) == 0.0) throw SingularMatrixError(std::size_t(i), "tikhonov (beta = 0, rank deficient)");
  return filtered_solution(s, b, tikhonov_filters(s.sigma, beta));
}

// Minimises ||A x - b||^2 + beta ||W x||^2.
inline RVector tikhonov_solve(const RealSystem& sys, const TikhonovConfig& cfg) {
  if (!(cfg.beta >= 0.0)) throw DomainError("tikhonov: beta must be nonnegative");
  if (cfg.w == RegOperator::identity || cfg.beta == 0.0) return tikhonov_solve(linalg::svd(sys.a), sys.b, cfg.beta);

  const Eigen::Index n = sys.a.cols();
  if (Eigen::Index(cfg.lattice_nx) * cfg.lattice_ny * 2 != n && Eigen::Index(cfg.lattice_nx) * cfg.lattice_ny != n)
    throw DomainError("tikhonov: lattice does not match the number of unknowns");
  const RMatrix d = gradient_operator(cfg.lattice_nx, cfg.lattice_ny);
  RMatrix wtw = RMatrix::Zero(n, n);
  const RMatrix dtd = d.transpose() * d;
  for (Eigen::Index off = 0; off < n; off += dtd.rows()) wtw.block(off, off, dtd.rows(), dtd.cols()) = dtd;
  const RMatrix normal = sys.a.transpose() * sys.a + cfg.beta * wtw;
  const RVector rhs = sys.a.transpose() * sys.b;
  return linalg::LuFactorization<double>(normal, "tikhonov (gradient normal equations)").solve(rhs);
}

// Residual ||b - A x(beta)|| of the Tikhonov solution, evaluated in the SVD
// basis: sum_i (beta/(sigma_i^2+beta))^2 (u_i^T b)^2 + ||b - U U^T b||^2.
class DiscrepancyResidual {
 public:
  DiscrepancyResidual(const SvdResult& s, const RVector& b) : sigma_(s.sigma) {
    coeff_ = s.u.transpose() * b;
    perp2_ = (b - s.u * coeff_).squaredNorm();
    bnorm_ = b.norm();
  }

  double operator()(double beta) const {
    double r2 = perp2_;
    for (Eigen::Index i = 0; i < sigma_.size(); ++i) {
      const double s2 = sigma_(i) * sigma_(i);
      const double f = (s2 + beta) > 0.0 ? beta / (s2 + beta) : 1.0;
      r2 += f * f * coeff_(i) * coeff_(i);
    }
    return std::sqrt(r2);
  }

  // Residual in the limit beta -> 0.
  double floor() const {
    double r2 = perp2_;
    for (Eigen::Index i = 0; i < sigma_.size(); ++i)
      if (sigma_(i) == 0.0) r2 += coeff_(i) * coeff_(i);
    return std::sqrt(r2);
  }

  double data_norm() const { return bnorm_; }
  double sigma_max() const { return sigma_.size() ? sigma_(0) : 0.0; }

 private:
  RVector sigma_;
  RVector coeff_;
  double perp2_ = 0.0;
  double bnorm_ = 0.0;
};

// Morozov discrepancy principle: beta with ||b - A x(beta)|| = delta, by
// bisection on log(beta). The bracket starts at [1e-16, 1e4] sigma_1^2 and
// is widened while the target stays strictly inside the attainable range.
inline double select_beta_discrepancy(const SvdResult& s, const RVector& b, double delta) {
  const DiscrepancyResidual res(s, b);
  const double smax = res.sigma_max();
  if (!(smax > 0.0)) throw DomainError("select_beta_discrepancy: zero matrix");
  const double floor = res.floor();
  const double top = res.data_norm();
  auto range_error = [&] {
    return NoSolutionError("select_beta_discrepancy: delta = " + std::to_string(delta) +
                               " outside the attainable residual range (" + std::to_string(floor) + ", " +
                               std::to_string(top) + ")",
                           floor, top);
  };
  if (!(delta > floor) || !(delta < top)) throw range_error();

  double lo = 1e-16 * smax * smax;
  double hi = 1e4 * smax * smax;
  constexpr double kTol = 1e-14;
  for (int i = 0; i < 40 && res(lo) > delta; ++i) lo *= 1e-4;
  for (int i = 0; i < 40 && res(hi) < delta; ++i) hi *= 1e4;
  if (res(lo) > delta) {
    if (std::abs(res(lo) - delta) <= kTol * delta) return lo;
    throw range_error();
  }
  if (res(hi) < delta) {
    if (std::abs(res(hi) - delta) <= kTol * delta) return hi;
    throw range_error();
  }
  double llo = std::log(lo);
  double lhi = std::log(hi);
  double mid = 0.5 * (llo + lhi);
  for (int it = 0; it < 300; ++it) {
    mid = 0.5 * (llo + lhi);
    const double r = res(std::exp(mid));
    if (std::abs(r - delta) <= kTol * delta) break;
    if (r < delta)
      llo = mid;
    else
      lhi = mid;
    if (lhi - llo < 1e-15) break;
  }
  return std::exp(mid);
}

inline double select_beta_discrepancy(const RealSystem& sys, double delta) {
  return select_beta_discrepancy(linalg::svd(sys.a), sys.b, delta);
}

inline Eigen::Index svd_rank(const SvdResult& s) {
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < s.sigma.size(); ++i)
    if (s.sigma(i) > 0.0) ++r;
  return r;
}

inline RVector tsvd_solve(const SvdResult& s, const RVector& b, Eigen::Index k) {
  const Eigen::Index rank = svd_rank(s);
  if (k < 1 || k > rank)
    throw DomainError("tsvd: k = " + std::to_string(k) + " outside [1, " + std::to_string(rank) + "]");
  RVector f = RVector::Zero(s.sigma.size());
  f.head(k).setOnes();
  return filtered_solution(s, b, f);
}

inline RVector tsvd_solve(const RealSystem& sys, Eigen::Index k) { return tsvd_solve(linalg::svd(sys.a), sys.b, k); }

// argmin ||A V_k z - b|| solved as a dense least-squares problem; x = V_k z.
inline RVector subspace_solve(const RMatrix& a, const SvdResult& s, const RVector& b, Eigen::Index k) {
  const Eigen::Index n = a.cols();
  if (k < 1 || k >= n)
    throw DomainError("subspace: k = " + std::to_string(k) + " must satisfy 1 <= k < " + std::to_string(n));
  if (k > s.v.cols()) throw DomainError("subspace: k exceeds the number of singular vectors");
  const RMatrix vk = s.v.leftCols(k);
  const RMatrix avk = a * vk;
  const RVector z = avk.colPivHouseholderQr().solve(b);
  return vk * z;
}

inline RVector subspace_solve(const RealSystem& sys, Eigen::Index k) {
  return subspace_solve(sys.a, linalg::svd(sys.a), sys.b, k);
}

enum class Method { tikhonov, tsvd, subspace };

struct InversionRequest {
  Method method = Method::tikhonov;
  std::optional<double> beta;          // tikhonov: explicit penalty
  std::optional<double> discrepancy;   // tikhonov: noise norm delta for Morozov selection
  std::optional<Eigen::Index> k;       // tsvd / subspace
};

struct BornReconstruction {
  std::vector<Complex> contrast;  // C(r_j)
  std::vector<Complex> eps_rel;   // eps*(r_j) / eps0
  std::vector<Complex> chi;       // eps_rel / background - 1
  double beta = 0.0;              // penalty actually used (tikhonov)
  Eigen::Index k = 0;             // subspace dimension actually used
};

// Realified Born system plus its SVD, reusable across methods and parameters.
class BornInverter {
 public:
  explicit BornInverter(const BornSystem& sys)
      : geometry_(sys), real_(linalg::realify(sys.a, sys.b)), svd_(linalg::svd(real_.a)) {
    geometry_.a.resize(0, 0);
  }

  const RealSystem& real_system() const { return real_; }
  const SvdResult& decomposition() const { return svd_; }

  BornReconstruction invert(const InversionRequest& req) const {
    RVector x;
    BornReconstruction out;
    switch (req.method) {
      case Method::tikhonov: {
        double beta = 0.0;
        if (req.discrepancy)
          beta = select_beta_discrepancy(svd_, real_.b, *req.discrepancy);
        else if (req.beta)
          beta = *req.beta;
        else
          throw DomainError("born_invert: tikhonov needs beta or a discrepancy level");
        x = tikhonov_solve(svd_, real_.b, beta);
        out.beta = beta;
        break;
      }
      case Method::tsvd:
        if (!req.k) throw DomainError("born_invert: tsvd needs k");
        x = tsvd_solve(svd_, real_.b, *req.k);
        out.k = *req.k;
        break;
      case Method::subspace:
        if (!req.k) throw DomainError("born_invert: subspace needs k");
        x = subspace_solve(real_.a, svd_, real_.b, *req.k);
        out.k = *req.k;
        break;
    }
    const CVector c = linalg::derealify(x);
    const double w = mom::angular_frequency(geometry_.array.frequency);
    const double scale = w * w * mom::kMu0 * mom::kEpsilon0;
    const Complex k1 = mom::wavenumber(geometry_.background_eps_rel, geometry_.array.frequency);
    out.contrast.assign(c.data(), c.data() + c.size());
    for (const auto& v : out.contrast) {
      const Complex eps = (v + k1 * k1) / scale;
      out.eps_rel.push_back(eps);
      out.chi.push_back(eps / geometry_.background_eps_rel - 1.0);
    }
    return out;
  }

 private:
  BornSystem geometry_;
  RealSystem real_;
  SvdResult svd_;
};

inline BornReconstruction born_invert(const BornSystem& sys, const InversionRequest& req) {
  return BornInverter(sys).invert(req);
}

// Direction in the plane of the 2D TM problem.
struct Direction2 {
  double x = 1.0;
  double y = 0.0;
};

inline double sinc(double t) { return t == 0.0 ? 1.0 : std::sin(t) / t; }

// Far-field Born amplitude without the polarization prefactor k^3 / 4 pi:
// the Fourier transform of the pixel map chi_e at q = k (k_i - r), using the
// exact integral of exp(j q.r) over each rectangular cell.
inline std::vector<Complex> born_farfield_fourier(const mom::Grid2D& grid, const std::vector<Complex>& chi, double k,
                                                  Direction2 incident, const std::vector<Direction2>& observe) {
  grid.validate();
  if (chi.size() != grid.size()) throw DomainError("born_farfield_fourier: map size does not match the grid");
  if (!(k > 0.0)) throw DomainError("born_farfield_fourier: k must be positive");
  auto check_unit = [](const Direction2& d) {
    if (std::abs(std::hypot(d.x, d.y) - 1.0) > 1e-12) throw DomainError("born_farfield_fourier: direction is not unit length");
  };
  check_unit(incident);
  for (const auto& d : observe) check_unit(d);

  std::vector<Complex> out(observe.size());
  parallel_for(observe.size(), [&](std::size_t o) {
    const double qx = k * (incident.x - observe[o].x);
    const double qy = k * (incident.y - observe[o].y);
    const double cell = grid.cell_area() * sinc(0.5 * qx * grid.dx) * sinc(0.5 * qy * grid.dy);
    Complex sum = 0.0;
    for (std::size_t j = 0; j < chi.size(); ++j) {
      if (chi[j] == Complex(0.0)) continue;
      const auto c = grid.center(j);
      sum += chi[j] * std::polar(1.0, qx * c.x + qy * c.y);
    }
    out[o] = cell * sum;
  });
  return out;
}

inline double farfield_prefactor(double k) { return k * k * k / (4.0 * std::numbers::pi); }

}  // namespace scattomo::inversion
