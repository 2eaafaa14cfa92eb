#pragma once

// Cell maps as complex CSV matrices and 8-bit ASCII PGM previews.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include "scattomo/dense_linalg.hpp"
#include "scattomo/forward_mom.hpp"
#include "scattomo/matrix_csv.hpp"

namespace scattomo::io {

// Row j of the matrix holds the cells of grid row j (y increasing downward).
inline CMatrix map_to_matrix(const mom::Grid2D& g, const std::vector<Complex>& v) {
  if (v.size() != g.size()) throw FormatError("map size does not match the grid");
  CMatrix m(g.ny, g.nx);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) m(j, i) = v[g.index(i, j)];
  return m;
}

struct Normalization {
  double min = 0.0;
  double max = 0.0;
};

// P2 image with linear min-max scaling to 0..255; the top image row is the
// largest y. A constant map is written as all zeros.
inline Normalization write_pgm(std::ostream& os, const mom::Grid2D& g, const std::vector<double>& v) {
  if (v.size() != g.size()) throw FormatError("pgm: map size does not match the grid");
  Normalization n;
  if (!v.empty()) {
    const auto [lo, hi] = std::minmax_element(v.begin(), v.end());
    n = {*lo, *hi};
  }
  const double span = n.max - n.min;
  os << "P2\n" << g.nx << ' ' << g.ny << "\n255\n";
  std::string line;
  for (int j = g.ny - 1; j >= 0; --j) {
    line.clear();
    for (int i = 0; i < g.nx; ++i) {
      const double t = span > 0.0 ? (v[g.index(i, j)] - n.min) / span : 0.0;
      const int level = std::clamp(int(std::lround(255.0 * t)), 0, 255);
      if (i) line.push_back(' ');
      line += std::to_string(level);
    }
    line.push_back('\n');
    os << line;
  }
  return n;
}

inline void write_normalization(std::ostream& os, const Normalization& n) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "min %.17g\nmax %.17g\n", n.min, n.max);
  os << buf;
}

// Writes path and path + ".txt" holding the normalization.
inline Normalization write_pgm(const std::string& path, const mom::Grid2D& g, const std::vector<double>& v) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  const auto n = write_pgm(os, g, v);
  std::ofstream side(path + ".txt", std::ios::binary);
  if (!side) throw FormatError("cannot open '" + path + ".txt' for writing");
  write_normalization(side, n);
  if (!os || !side) throw FormatError("write failed for '" + path + "'");
  return n;
}

}  // namespace scattomo::io
