#pragma once

// Parallel-beam projections of analytic phantoms and direct Fourier
// inversion. Transform pair:
//   u^(p)  = int u(xi) e^{+j p xi} dxi
//   f(r)   = 1/(4 pi^2) int F(p) e^{-j p.r} dp
// with F(p cos phi, p sin phi) = u^_phi(p).

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <string>
#include <vector>

#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"
#include "scattomo/forward_mom.hpp"
#include "scattomo/parallel.hpp"
#include "scattomo/phantom.hpp"

namespace scattomo::tomo {

using linalg::Complex;

struct Sinogram {
  int n_angles = 0;
  int n_samples = 0;
  std::vector<double> angles;  // uniform, spacing pi / n_angles
  double sample_spacing = 1.0;
  std::vector<double> data;    // n_angles x n_samples, angle-major

  double xi(int m) const { return (m - n_samples / 2) * sample_spacing; }
  double& at(int a, int m) { return data[std::size_t(a) * std::size_t(n_samples) + std::size_t(m)]; }
  double at(int a, int m) const { return data[std::size_t(a) * std::size_t(n_samples) + std::size_t(m)]; }

  double mass(int a) const {
    double s = 0.0;
    for (int m = 0; m < n_samples; ++m) s += at(a, m);
    return s * sample_spacing;
  }

  void validate() const {
    if (n_angles < 1 || n_samples < 1) throw DomainError("sinogram: dimensions must be positive");
    if (!linalg::is_power_of_two(std::size_t(n_samples)))
      throw DomainError("sinogram: n_samples must be a power of two, got " + std::to_string(n_samples));
    if (!(sample_spacing > 0.0)) throw DomainError("sinogram: sample spacing must be positive");
    if (angles.size() != std::size_t(n_angles)) throw DomainError("sinogram: angle count mismatch");
    if (data.size() != std::size_t(n_angles) * std::size_t(n_samples)) throw DomainError("sinogram: data size mismatch");
    const double step = std::numbers::pi / n_angles;
    for (int a = 1; a < n_angles; ++a)
      if (std::abs(angles[std::size_t(a)] - angles[std::size_t(a) - 1] - step) > 1e-9 * step)
        throw DomainError("sinogram: angles must be uniform with spacing pi / n_angles");
  }
};

inline std::vector<double> uniform_angles(int n, double offset = 0.0) {
  std::vector<double> a(std::size_t(std::max(n, 0)));
  for (int i = 0; i < n; ++i) a[std::size_t(i)] = offset + std::numbers::pi * i / n;
  return a;
}

// Point samples are line integrals at xi_m; bin samples average the
// projection over [xi_m - s/2, xi_m + s/2], so the discrete mass is exact.
enum class Sampling { point, bin_average };

namespace detail {

// Object value carried into the projection: Re(eps / background) - 1.
inline double shape_value(const Shape& s, Complex background) { return (s.eps_rel / background).real() - 1.0; }

// Chord interval [e0, e1] of the line {xi * n + eta * t} inside the shape.
inline bool chord(const Shape& s, double c, double sn, double xi, double& e0, double& e1) {
  const double xs = s.center.x * c + s.center.y * sn;
  const double es = -s.center.x * sn + s.center.y * c;
  if (s.kind == ShapeKind::disk) {
    const double d = xi - xs;
    const double h2 = s.width * s.width - d * d;
    if (h2 <= 0.0) return false;
    const double h = std::sqrt(h2);
    e0 = es - h;
    e1 = es + h;
    return true;
  }
  // Point on the line relative to the rectangle center: (xi - xs) n + (eta - es) t.
  const double px = (xi - xs) * c;
  const double py = (xi - xs) * sn;
  double lo = -std::numeric_limits<double>::infinity();
  double hi = std::numeric_limits<double>::infinity();
  auto slab = [&](double p, double dir, double half) {
    if (std::abs(dir) < 1e-15) {
      if (std::abs(p) > half) hi = -std::numeric_limits<double>::infinity();
      return;
    }
    double t0 = (-half - p) / dir;
    double t1 = (half - p) / dir;
    if (t0 > t1) std::swap(t0, t1);
    lo = std::max(lo, t0);
    hi = std::min(hi, t1);
  };
  slab(px, -sn, 0.5 * s.width);
  slab(py, c, 0.5 * s.height);
  if (!(hi > lo)) return false;
  e0 = es + lo;
  e1 = es + hi;
  return true;
}

// Line integral with later shapes overwriting earlier ones.
inline double painted_line_integral(const Phantom& ph, const std::vector<double>& values, double c, double sn,
                                    double xi) {
  struct Seg {
    double e0, e1;
    std::size_t shape;
  };
  std::vector<Seg> segs;
  for (std::size_t i = 0; i < ph.shapes.size(); ++i) {
    double e0, e1;
    if (chord(ph.shapes[i], c, sn, xi, e0, e1)) segs.push_back({e0, e1, i});
  }
  if (segs.empty()) return 0.0;
  if (segs.size() == 1) return values[segs[0].shape] * (segs[0].e1 - segs[0].e0);
  std::vector<double> cuts;
  for (const auto& s : segs) {
    cuts.push_back(s.e0);
    cuts.push_back(s.e1);
  }
  std::sort(cuts.begin(), cuts.end());
  double sum = 0.0;
  for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
    const double len = cuts[k + 1] - cuts[k];
    if (len <= 0.0) continue;
    const double mid = 0.5 * (cuts[k] + cuts[k + 1]);
    // Every shape is convex, so the last chord covering mid decides the value.
    for (auto it = segs.rbegin(); it != segs.rend(); ++it) {
      if (mid >= it->e0 && mid <= it->e1) {
        sum += values[it->shape] * len;
        break;
      }
    }
  }
  return sum;
}

// int_{-inf}^{t} of the projection of one shape (before scaling by its value).
inline double projection_antiderivative(const Shape& s, double c, double sn, double t) {
  const double xs = s.center.x * c + s.center.y * sn;
  const double u = t - xs;
  if (s.kind == ShapeKind::disk) {
    const double r = s.width;
    if (u <= -r) return 0.0;
    if (u >= r) return std::numbers::pi * r * r;
    return u * std::sqrt(r * r - u * u) + r * r * std::asin(u / r) + 0.5 * std::numbers::pi * r * r;
  }
  const double a = 0.5 * s.width;
  const double b = 0.5 * s.height;
  const double ac = std::abs(c);
  const double as = std::abs(sn);
  auto clamp_ramp = [](double w, double lo, double hi) { return std::clamp(w - lo, 0.0, hi - lo); };
  if (ac < 1e-12) return 2.0 * a * clamp_ramp(u, -b, b);  // lines run along x
  if (as < 1e-12) return 2.0 * b * clamp_ramp(u, -a, a);  // lines run along y
  // Projection = box(A) * box(B) scaled by 1/(|c||s|), A = a|c|, B = b|s|.
  const double A = a * ac;
  const double B = b * as;
  auto q = [A](double w) {
    if (w <= 0.0) return 0.0;
    if (w <= 2.0 * A) return 0.5 * w * w;
    return 2.0 * A * A + 2.0 * A * (w - 2.0 * A);
  };
  return (q(u + B + A) - q(u - B + A)) / (ac * as);
}

inline bool shapes_may_overlap(const Phantom& ph) {
  for (std::size_t i = 0; i < ph.shapes.size(); ++i)
    for (std::size_t j = i + 1; j < ph.shapes.size(); ++j) {
      const auto& p = ph.shapes[i];
      const auto& q = ph.shapes[j];
      if (std::abs(p.center.x - q.center.x) < p.half_extent_x() + q.half_extent_x() &&
          std::abs(p.center.y - q.center.y) < p.half_extent_y() + q.half_extent_y())
        return true;
    }
  return false;
}

}  // namespace detail

inline Sinogram project_phantom(const Phantom& phantom, Complex background, int n_angles, int n_samples,
                                double sample_spacing, Sampling sampling = Sampling::point,
                                std::vector<double> angles = {}) {
  phantom.validate();
  Sinogram s;
  s.n_angles = n_angles;
  s.n_samples = n_samples;
  s.sample_spacing = sample_spacing;
  s.angles = angles.empty() ? uniform_angles(n_angles) : std::move(angles);
  s.data.assign(std::size_t(std::max(n_angles, 0)) * std::size_t(std::max(n_samples, 0)), 0.0);
  s.validate();
  const double window = 0.5 * sample_spacing * (n_samples - 1);
  for (const auto& sh : phantom.shapes)
    if (sh.reach() > window) throw DomainError("project_phantom: phantom is not contained in the sample window");

  std::vector<double> values;
  for (const auto& sh : phantom.shapes) values.push_back(detail::shape_value(sh, background));
  const bool overlap = detail::shapes_may_overlap(phantom);

  parallel_for(std::size_t(n_angles), [&](std::size_t a) {
    const double c = std::cos(s.angles[a]);
    const double sn = std::sin(s.angles[a]);
    for (int m = 0; m < n_samples; ++m) {
      const double xi = s.xi(m);
      double v = 0.0;
      if (sampling == Sampling::point) {
        v = detail::painted_line_integral(phantom, values, c, sn, xi);
      } else if (!overlap) {
        const double h = 0.5 * sample_spacing;
        for (std::size_t i = 0; i < phantom.shapes.size(); ++i)
          if (values[i] != 0.0)
            v += values[i] * (detail::projection_antiderivative(phantom.shapes[i], c, sn, xi + h) -
                              detail::projection_antiderivative(phantom.shapes[i], c, sn, xi - h));
        v /= sample_spacing;
      } else {
        // Overlapping shapes: composite Gauss-Legendre over the bin.
        static constexpr double kNodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                             0.8611363115940526};
        static constexpr double kWeights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                               0.3478548451374538};
        constexpr int kPanels = 32;
        const double w = sample_spacing / kPanels;
        for (int p = 0; p < kPanels; ++p) {
          const double mid = xi - 0.5 * sample_spacing + (p + 0.5) * w;
          for (int g = 0; g < 4; ++g)
            v += kWeights[g] * 0.5 * w * detail::painted_line_integral(phantom, values, c, sn, mid + 0.5 * w * kNodes[g]);
        }
        v /= sample_spacing;
      }
      s.at(int(a), m) = v;
    }
  });
  return s;
}

// Spectrum of one projection on p_k = 2 pi k / (L s), k in [-L/2, L/2),
// stored in FFT order. padding multiplies the length by zero extension.
inline std::vector<Complex> projection_spectrum(const Sinogram& s, int a, int padding = 4) {
  if (padding < 1 || !linalg::is_power_of_two(std::size_t(padding)))
    throw DomainError("projection_spectrum: padding must be a power of two");
  const std::size_t len = std::size_t(s.n_samples) * std::size_t(padding);
  std::vector<Complex> buf(len, Complex(0.0));
  // sample m sits at xi = (m - n/2) s, i.e. at wrapped index (m - n/2) mod L
  for (int m = 0; m < s.n_samples; ++m) {
    const long idx = long(m) - s.n_samples / 2;
    buf[std::size_t((idx % long(len) + long(len)) % long(len))] = s.at(a, m);
  }
  linalg::fft_inplace(buf, linalg::FftDirection::inverse);  // e^{+j...} kernel, scaled by 1/L
  const double scale = double(len) * s.sample_spacing;
  for (auto& v : buf) v *= scale;
  return buf;
}

// Direct Fourier inversion onto out_grid (square cells no finer than the
// sinogram sampling). The spectrum is sampled on an oversampled Cartesian
// lattice by bilinear interpolation in (p, phi) and inverted by a 2D FFT.
inline std::vector<double> fourier_slice_reconstruct(const Sinogram& s, const mom::Grid2D& out, int padding = 4) {
  s.validate();
  out.validate();
  if (std::abs(out.dx - out.dy) > 1e-12 * out.dx)
    throw DomainError("fourier_slice_reconstruct: output cells must be square");
  const double h = out.dx;
  if (h < s.sample_spacing * (1.0 - 1e-12))
    throw DomainError("fourier_slice_reconstruct: output grid is finer than the sinogram sampling");

  // Lattice: Q x Q points with spacing h, covering the output grid and the
  // sample window with room to spare against periodic wrap.
  const double window = s.n_samples * s.sample_spacing;
  std::size_t q = 1;
  while (double(q) < std::max(2.0 * std::max(out.nx, out.ny), 2.0 * window / h)) q *= 2;
  const int offx = (int(q) - out.nx) / 2;
  const int offy = (int(q) - out.ny) / 2;
  const double x0 = out.x0 + 0.5 * h - offx * h;
  const double y0 = out.y0 + 0.5 * h - offy * h;

  std::vector<std::vector<Complex>> spectra(std::size_t(s.n_angles));
  parallel_for(std::size_t(s.n_angles), [&](std::size_t a) { spectra[a] = projection_spectrum(s, int(a), padding); });

  const std::size_t len = std::size_t(s.n_samples) * std::size_t(padding);
  const double dp_polar = 2.0 * std::numbers::pi / (double(len) * s.sample_spacing);
  const double p_max = std::numbers::pi / s.sample_spacing;
  const double dphi = std::numbers::pi / s.n_angles;
  const double phi0 = s.angles[0];

  // Value of u^ at signed radial index t (fractional) along angle cycle index
  // c in [0, 2 n_angles): cycles past n_angles flip the radial direction.
  auto radial = [&](int cyc, double t) -> Complex {
    const int n = s.n_angles;
    cyc = ((cyc % (2 * n)) + 2 * n) % (2 * n);
    const auto& sp = spectra[std::size_t(cyc % n)];
    if (cyc >= n) t = -t;
    const double fl = std::floor(t);
    const double w = t - fl;
    auto at = [&](long k) { return sp[std::size_t(((k % long(len)) + long(len)) % long(len))]; };
    const long k0 = long(fl);
    return (1.0 - w) * at(k0) + w * at(k0 + 1);
  };

  const double dp = 2.0 * std::numbers::pi / (double(q) * h);
  std::vector<Complex> grid(q * q, Complex(0.0));
  parallel_for(q, [&](std::size_t row) {
    const long ky = long(row) < long(q / 2) ? long(row) : long(row) - long(q);
    for (std::size_t col = 0; col < q; ++col) {
      const long kx = long(col) < long(q / 2) ? long(col) : long(col) - long(q);
      const double px = kx * dp;
      const double py = ky * dp;
      const double rho = std::hypot(px, py);
      if (rho > p_max) continue;
      Complex v;
      if (rho == 0.0) {
        v = 0.0;
        for (const auto& sp : spectra) v += sp[0];
        v /= double(s.n_angles);
      } else {
        const double theta = std::atan2(py, px);
        const double u = (theta - phi0) / dphi;
        const double fl = std::floor(u);
        const double w = u - fl;
        const double t = rho / dp_polar;
        v = (1.0 - w) * radial(int(fl), t) + w * radial(int(fl) + 1, t);
      }
      grid[row * q + col] = v * std::polar(1.0, -(px * x0 + py * y0));
    }
  });

  linalg::fft2_inplace(grid, q, q, linalg::FftDirection::forward);  // e^{-j p.r}
  const double norm = 1.0 / (double(q) * h * double(q) * h);
  std::vector<double> f(out.size());
  for (int j = 0; j < out.ny; ++j)
    for (int i = 0; i < out.nx; ++i)
      f[out.index(i, j)] = grid[std::size_t(j + offy) * q + std::size_t(i + offx)].real() * norm;
  return f;
}

// psi_s = ln(e / e_i) / (j k1) along a receiver line, with the phase of the
// logarithm continued onto the branch nearest the previous sample.
inline std::vector<Complex> rytov_phase(const std::vector<Complex>& total, const std::vector<Complex>& incident,
                                        double k1) {
  if (total.size() != incident.size()) throw DomainError("rytov_phase: length mismatch");
  if (!(k1 > 0.0)) throw DomainError("rytov_phase: k1 must be positive");
  std::vector<Complex> out(total.size());
  double prev = 0.0;
  for (std::size_t m = 0; m < total.size(); ++m) {
    if (incident[m] == Complex(0.0) || total[m] == Complex(0.0))
      throw DomainError("rytov_phase: zero field sample at index " + std::to_string(m));
    const Complex ratio = total[m] / incident[m];
    double arg = std::arg(ratio);
    if (m > 0) arg += 2.0 * std::numbers::pi * std::round((prev - arg) / (2.0 * std::numbers::pi));
    prev = arg;
    const Complex ln(std::log(std::abs(ratio)), arg);
    out[m] = ln / Complex(0.0, k1);
  }
  return out;
}

}  // namespace scattomo::tomo
