#pragma once

// Complex matrix CSV:
//   <rows>,<cols>,complex
//   re:im,re:im,...          (one line per row, 17 significant digits)

#include <charconv>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"

namespace scattomo::io {

using linalg::CMatrix;
using linalg::Complex;

class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void append_double(std::string& out, double v) {
  char buf[40];
  const int len = std::snprintf(buf, sizeof buf, "%.17g", v);
  out.append(buf, static_cast<std::size_t>(len));
}

inline double parse_double(std::string_view text, std::size_t line) {
  while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
  while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r'))
    text.remove_suffix(1);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size())
    throw FormatError("matrix csv line " + std::to_string(line) + ": bad number '" +
                      std::string(text) + "'");
  return value;
}

}  // namespace detail

inline void write_complex_csv(std::ostream& os, const CMatrix& m) {
  std::string line = std::to_string(m.rows()) + "," + std::to_string(m.cols()) + ",complex\n";
  os << line;
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    line.clear();
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) line.push_back(',');
      detail::append_double(line, m(i, j).real());
      line.push_back(':');
      detail::append_double(line, m(i, j).imag());
    }
    line.push_back('\n');
    os << line;
  }
}

inline CMatrix read_complex_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw FormatError("matrix csv: missing header");
  long rows = 0, cols = 0;
  {
    std::istringstream hs(line);
    std::string r, c, tag;
    if (!std::getline(hs, r, ',') || !std::getline(hs, c, ',') || !std::getline(hs, tag))
      throw FormatError("matrix csv: header must be 'rows,cols,complex'");
    if (!tag.empty() && tag.back() == '\r') tag.pop_back();
    if (tag != "complex") throw FormatError("matrix csv: header tag must be 'complex'");
    rows = static_cast<long>(detail::parse_double(r, 1));
    cols = static_cast<long>(detail::parse_double(c, 1));
    if (rows <= 0 || cols <= 0) throw FormatError("matrix csv: dimensions must be positive");
  }
  CMatrix m(rows, cols);
  for (long i = 0; i < rows; ++i) {
    const std::size_t line_no = static_cast<std::size_t>(i) + 2;
    if (!std::getline(is, line))
      throw FormatError("matrix csv: expected " + std::to_string(rows) + " rows, got " +
                        std::to_string(i));
    std::string_view rest(line);
    for (long j = 0; j < cols; ++j) {
      const auto comma = rest.find(',');
      const std::string_view cell = rest.substr(0, comma);
      if ((j + 1 < cols) != (comma != std::string_view::npos))
        throw FormatError("matrix csv line " + std::to_string(line_no) + ": expected " +
                          std::to_string(cols) + " entries");
      const auto colon = cell.find(':');
      if (colon == std::string_view::npos)
        throw FormatError("matrix csv line " + std::to_string(line_no) + ": entry without ':'");
      m(i, j) = Complex(detail::parse_double(cell.substr(0, colon), line_no),
                        detail::parse_double(cell.substr(colon + 1), line_no));
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
  }
  return m;
}

inline void write_complex_csv(const std::string& path, const CMatrix& m) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw FormatError("cannot open '" + path + "' for writing");
  write_complex_csv(os, m);
  if (!os) throw FormatError("write failed for '" + path + "'");
}

inline CMatrix read_complex_csv(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw FormatError("cannot open '" + path + "'");
  return read_complex_csv(is);
}

}  // namespace scattomo::io
