#pragma once

#include <cmath>
#include <complex>
#include <string>
#include <vector>

#include "scattomo/errors.hpp"
#include "scattomo/forward_mom.hpp"

namespace scattomo {

enum class ShapeKind { disk, rectangle };

struct Shape {
  ShapeKind kind = ShapeKind::disk;
  mom::Point2 center;
  double width = 0.0;   // disk: radius
  double height = 0.0;  // rectangle only
  std::complex<double> eps_rel{1.0, 0.0};

  static Shape disk(mom::Point2 c, double radius, std::complex<double> eps) {
    return {ShapeKind::disk, c, radius, 0.0, eps};
  }
  static Shape rectangle(mom::Point2 c, double w, double h, std::complex<double> eps) {
    return {ShapeKind::rectangle, c, w, h, eps};
  }

  bool contains(const mom::Point2& p) const {
    if (kind == ShapeKind::disk) {
      const double dx = p.x - center.x;
      const double dy = p.y - center.y;
      return dx * dx + dy * dy <= width * width;
    }
    return std::abs(p.x - center.x) <= 0.5 * width && std::abs(p.y - center.y) <= 0.5 * height;
  }

  double half_extent_x() const { return kind == ShapeKind::disk ? width : 0.5 * width; }
  double half_extent_y() const { return kind == ShapeKind::disk ? width : 0.5 * height; }
  // Farthest distance of the shape from the origin.
  double reach() const {
    if (kind == ShapeKind::disk) return std::hypot(center.x, center.y) + width;
    return std::hypot(std::abs(center.x) + 0.5 * width, std::abs(center.y) + 0.5 * height);
  }
};

// Ordered shape list; later shapes overwrite earlier ones where they overlap.
struct Phantom {
  std::vector<Shape> shapes;

  std::complex<double> eps_at(const mom::Point2& p, std::complex<double> background) const {
    std::complex<double> v = background;
    for (const auto& s : shapes)
      if (s.contains(p)) v = s.eps_rel;
    return v;
  }

  void validate() const {
    for (const auto& s : shapes) {
      if (!(s.width > 0.0) || (s.kind == ShapeKind::rectangle && !(s.height > 0.0)))
        throw DomainError("phantom: shape sizes must be positive");
      if (!std::isfinite(s.eps_rel.real()) || !std::isfinite(s.eps_rel.imag()))
        throw DomainError("phantom: permittivity must be finite");
    }
  }

  void validate_within(const mom::Grid2D& g) const {
    validate();
    for (const auto& s : shapes) {
      const bool inside = s.center.x - s.half_extent_x() >= g.x0 && s.center.x + s.half_extent_x() <= g.x0 + g.nx * g.dx &&
                          s.center.y - s.half_extent_y() >= g.y0 && s.center.y + s.half_extent_y() <= g.y0 + g.ny * g.dy;
      if (!inside) throw DomainError("phantom: shape extends outside the imaging grid");
    }
  }
};

// Cell-averaged permittivity from a supersample x supersample midpoint rule.
inline mom::ContrastMap rasterize(const Phantom& phantom, const mom::Grid2D& grid,
                                  std::complex<double> background, int supersample = 4) {
  grid.validate();
  if (supersample < 1) throw DomainError("rasterize: supersample must be >= 1");
  auto map = mom::ContrastMap::uniform(grid, background);
  if (phantom.shapes.empty()) return map;
  const double inv = 1.0 / (double(supersample) * supersample);
  for (int j = 0; j < grid.ny; ++j) {
    for (int i = 0; i < grid.nx; ++i) {
      std::complex<double> acc = 0.0;
      bool touched = false;
      for (int sj = 0; sj < supersample; ++sj) {
        for (int si = 0; si < supersample; ++si) {
          const mom::Point2 p{grid.x0 + (i + (si + 0.5) / supersample) * grid.dx,
                              grid.y0 + (j + (sj + 0.5) / supersample) * grid.dy};
          const auto v = phantom.eps_at(p, background);
          if (v != background) touched = true;
          acc += v;
        }
      }
      // untouched cells stay exactly equal to the background
      if (touched) map.eps_rel[grid.index(i, j)] = acc * inv;
    }
  }
  return map;
}

}  // namespace scattomo
