#pragma once

#include <algorithm>
#include <bit>
#include <cmath>
#include <complex>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "scattomo/errors.hpp"

namespace scattomo::linalg {

using Complex = std::complex<double>;
using CMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;

inline constexpr double kPivotThreshold = 1e-300;

template <typename Derived>
bool all_finite(const Eigen::MatrixBase<Derived>& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(std::abs(m(i, j)))) return false;
  return true;
}

// LU with partial pivoting by largest modulus. The factorization is read-only
// once built and can be shared across right-hand sides.
template <typename Scalar>
class LuFactorization {
 public:
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

  template <typename Derived>
  explicit LuFactorization(const Eigen::MatrixBase<Derived>& a, std::string stage = "lu_solve") {
    if (a.rows() != a.cols())
      throw DomainError(stage + ": matrix must be square, got " + std::to_string(a.rows()) + "x" +
                        std::to_string(a.cols()));
    if (a.rows() == 0) throw DomainError(stage + ": empty matrix");
    lu_.compute(Matrix(a));
    const auto& packed = lu_.matrixLU();
    for (Eigen::Index i = 0; i < packed.rows(); ++i) {
      const double modulus = std::abs(packed(i, i));
      if (!(modulus >= kPivotThreshold) || !std::isfinite(modulus))
        throw SingularMatrixError(static_cast<std::size_t>(i), stage);
    }
  }

  Eigen::Index size() const { return lu_.matrixLU().rows(); }

  template <typename Derived>
  Matrix solve(const Eigen::MatrixBase<Derived>& b) const {
    if (b.rows() != size())
      throw DomainError("lu_solve: right-hand side has " + std::to_string(b.rows()) +
                        " rows, expected " + std::to_string(size()));
    return lu_.solve(Matrix(b));
  }

 private:
  Eigen::PartialPivLU<Matrix> lu_;
};

template <typename DerivedA, typename DerivedB>
auto lu_solve(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  return LuFactorization<Scalar>(a).solve(b);
}

struct SvdResult {
  RMatrix u;       // m x k, orthonormal columns
  RVector sigma;   // k values, nonincreasing
  RMatrix v;       // n x k, orthonormal columns
};

namespace detail {

// One-sided (Hestenes) Jacobi on the columns of x. On return the columns of
// x are mutually orthogonal and x_in = x_out * v^T.
inline void hestenes_jacobi(RMatrix& x, RMatrix& v) {
  const Eigen::Index m = x.rows();
  const Eigen::Index n = x.cols();
  v = RMatrix::Identity(n, n);
  const double tol = std::numeric_limits<double>::epsilon() * std::max<double>(1.0, std::sqrt(double(m)));
  std::vector<double> norms(static_cast<std::size_t>(n));
  constexpr int kMaxSweeps = 80;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (Eigen::Index j = 0; j < n; ++j) norms[std::size_t(j)] = x.col(j).squaredNorm();
    bool rotated = false;
    for (Eigen::Index p = 0; p + 1 < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        double& alpha = norms[std::size_t(p)];
        double& beta = norms[std::size_t(q)];
        if (alpha == 0.0 || beta == 0.0) continue;
        double* xp = x.col(p).data();
        double* xq = x.col(q).data();
        double gamma = 0.0;
        for (Eigen::Index i = 0; i < m; ++i) gamma += xp[i] * xq[i];
        if (std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (Eigen::Index i = 0; i < m; ++i) {
          const double a = xp[i];
          const double b = xq[i];
          xp[i] = c * a - s * b;
          xq[i] = s * a + c * b;
        }
        double* vp = v.col(p).data();
        double* vq = v.col(q).data();
        for (Eigen::Index i = 0; i < n; ++i) {
          const double a = vp[i];
          const double b = vq[i];
          vp[i] = c * a - s * b;
          vq[i] = s * a + c * b;
        }
        alpha -= t * gamma;
        beta += t * gamma;
      }
    }
    if (!rotated) break;
  }
}

// Extend the orthonormal columns flagged in `valid` to a full orthonormal set.
inline void complete_orthonormal(RMatrix& u, const std::vector<bool>& valid) {
  const Eigen::Index m = u.rows();
  Eigen::Index probe = 0;
  for (Eigen::Index j = 0; j < u.cols(); ++j) {
    if (valid[std::size_t(j)]) continue;
    while (probe < m) {
      RVector w = RVector::Unit(m, probe++);
      for (int pass = 0; pass < 2; ++pass)
        for (Eigen::Index k = 0; k < u.cols(); ++k)
          if (k != j && (valid[std::size_t(k)] || k < j)) w -= u.col(k).dot(w) * u.col(k);
      const double nrm = w.norm();
      if (nrm > 0.5) {
        u.col(j) = w / nrm;
        break;
      }
    }
  }
}

}  // namespace detail

// Thin SVD a = U diag(sigma) V^T with k = min(m, n) singular values.
// Column-pivoted QR preconditioning followed by one-sided Jacobi on R^T.
// Singular values below max(m, n) * eps * sigma_max are indistinguishable
// from rounding and are returned as exact zeros.
inline SvdResult svd(const RMatrix& a) {
  if (a.size() == 0) throw DomainError("svd: empty matrix");
  if (!all_finite(a)) throw DomainError("svd: matrix contains non-finite entries");
  if (a.rows() < a.cols()) {
    SvdResult t = svd(a.transpose());
    return {std::move(t.v), std::move(t.sigma), std::move(t.u)};
  }
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();

  Eigen::ColPivHouseholderQR<RMatrix> qr(a);
  RMatrix x = qr.matrixQR().topRows(n).triangularView<Eigen::Upper>().transpose();
  RMatrix rot;
  detail::hestenes_jacobi(x, rot);

  // x = R^T V', so R = V' Sigma U'^T and a P = (Q V') Sigma U'^T.
  RVector sigma(n);
  for (Eigen::Index j = 0; j < n; ++j) sigma(j) = x.col(j).norm();
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return sigma(i) > sigma(j); });

  const double smax = sigma(order[0]);
  const double floor = double(std::max(m, n)) * std::numeric_limits<double>::epsilon() * smax;
  RMatrix u_small(n, n);
  RMatrix right(n, n);
  RVector sorted(n);
  std::vector<bool> valid(static_cast<std::size_t>(n), true);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::Index j = order[std::size_t(k)];
    const double s = sigma(j);
    sorted(k) = (s <= floor) ? 0.0 : s;
    u_small.col(k) = rot.col(j);
    if (s > 0.0 && s > 1e-300 * smax) {
      right.col(k) = x.col(j) / s;
    } else {
      right.col(k).setZero();
      valid[std::size_t(k)] = false;
    }
  }
  detail::complete_orthonormal(right, valid);

  RMatrix u = RMatrix::Zero(m, n);
  u.topRows(n) = u_small;
  u.applyOnTheLeft(qr.householderQ());
  RMatrix v = qr.colsPermutation() * right;
  return {std::move(u), std::move(sorted), std::move(v)};
}

// Number of singular values above rel_tol * sigma_1.
inline Eigen::Index numerical_rank(const RVector& sigma, double rel_tol) {
  if (sigma.size() == 0) return 0;
  const double cut = rel_tol * sigma(0);
  Eigen::Index r = 0;
  for (Eigen::Index i = 0; i < sigma.size(); ++i)
    if (sigma(i) > cut) ++r;
  return r;
}

// sigma_max / sigma_min, +infinity when rank deficient.
inline double cond(const RVector& sigma) {
  if (sigma.size() == 0 || sigma(0) == 0.0) throw DomainError("cond: zero matrix");
  const double smin = sigma(sigma.size() - 1);
  if (smin < 1e-300 * sigma(0)) return std::numeric_limits<double>::infinity();
  return sigma(0) / smin;
}

inline double cond(const RMatrix& a) {
  if (a.size() == 0 || a.isZero(0.0)) throw DomainError("cond: zero matrix");
  return cond(svd(a).sigma);
}

enum class FftDirection { forward, inverse };

inline bool is_power_of_two(std::size_t n) { return n != 0 && std::has_single_bit(n); }

// In-place iterative radix-2 transform. Forward: X_k = sum x_n e^{-j2pi kn/N};
// inverse carries the 1/N factor.
inline void fft_inplace(std::span<Complex> data, FftDirection direction) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n))
    throw DomainError("fft: length must be a power of two, got " + std::to_string(n));
  if (n == 1) return;

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = direction == FftDirection::forward ? -1.0 : 1.0;
  std::vector<Complex> twiddle(n / 2);
  for (std::size_t k = 0; k < n / 2; ++k) {
    const double angle = sign * 2.0 * std::numbers::pi * double(k) / double(n);
    twiddle[k] = Complex(std::cos(angle), std::sin(angle));
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t stride = n / len;
    for (std::size_t start = 0; start < n; start += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex t = twiddle[k * stride] * data[start + k + half];
        const Complex u = data[start + k];
        data[start + k] = u + t;
        data[start + k + half] = u - t;
      }
    }
  }
  if (direction == FftDirection::inverse) {
    const double scale = 1.0 / double(n);
    for (auto& v : data) v *= scale;
  }
}

inline std::vector<Complex> fft(std::span<const Complex> x, FftDirection direction) {
  std::vector<Complex> out(x.begin(), x.end());
  fft_inplace(out, direction);
  return out;
}

// Row-column 2D transform of a row-major rows x cols array.
inline void fft2_inplace(std::span<Complex> data, std::size_t rows, std::size_t cols,
                         FftDirection direction) {
  if (data.size() != rows * cols) throw DomainError("fft2: size mismatch");
  for (std::size_t r = 0; r < rows; ++r) fft_inplace(data.subspan(r * cols, cols), direction);
  std::vector<Complex> column(rows);
  for (std::size_t c = 0; c < cols; ++c) {
    for (std::size_t r = 0; r < rows; ++r) column[r] = data[r * cols + c];
    fft_inplace(column, direction);
    for (std::size_t r = 0; r < rows; ++r) data[r * cols + c] = column[r];
  }
}

struct RealSystem {
  RMatrix a;
  RVector b;
};

// [[Re A, -Im A], [Im A, Re A]] [Re x; Im x] = [Re b; Im b]
inline RealSystem realify(const CMatrix& a, const CVector& b) {
  if (a.rows() != b.size())
    throw DomainError("realify: matrix has " + std::to_string(a.rows()) + " rows but vector has " +
                      std::to_string(b.size()));
  const Eigen::Index m = a.rows();
  const Eigen::Index n = a.cols();
  RealSystem s{RMatrix(2 * m, 2 * n), RVector(2 * m)};
  const RMatrix re = a.real();
  const RMatrix im = a.imag();
  s.a.topLeftCorner(m, n) = re;
  s.a.topRightCorner(m, n) = -im;
  s.a.bottomLeftCorner(m, n) = im;
  s.a.bottomRightCorner(m, n) = re;
  s.b.head(m) = b.real();
  s.b.tail(m) = b.imag();
  return s;
}

inline CVector derealify(const RVector& x) {
  if (x.size() % 2 != 0) throw DomainError("derealify: odd-length vector");
  const Eigen::Index n = x.size() / 2;
  CVector z(n);
  for (Eigen::Index i = 0; i < n; ++i) z(i) = Complex(x(i), x(n + i));
  return z;
}

}  // namespace scattomo::linalg
