#pragma once

// Synthetic tomography experiments: configuration, forward simulation with
// reproducible noise, Born reconstruction and quality metrics.

#include <cmath>
#include <complex>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"
#include "scattomo/forward_mom.hpp"
#include "scattomo/fourier_slice.hpp"
#include "scattomo/inversion.hpp"
#include "scattomo/phantom.hpp"

namespace scattomo::harness {

using linalg::CMatrix;
using linalg::Complex;
using nlohmann::json;

struct InversionSettings {
  inversion::Method method = inversion::Method::tikhonov;
  std::optional<double> beta;
  // Noise norm for the discrepancy principle. When neither beta nor this is
  // given, it is estimated from snr_db.
  std::optional<double> discrepancy;
  std::optional<long> k;
};

struct ProjectionSettings {
  int n_angles = 180;
  int n_samples = 256;
};

struct ExperimentConfig {
  mom::AntennaArray array;
  mom::Grid2D grid_inverse;
  mom::Grid2D grid_forward;
  Phantom phantom;
  double frequency = 2.45e9;
  Complex background_eps{1.0, 0.0};
  std::optional<double> snr_db;
  std::uint64_t seed = 42;
  bool allow_inverse_crime = false;
  InversionSettings inversion;
  ProjectionSettings projection;

  // The array carries its own copy of the frequency for the solvers.
  mom::AntennaArray resolved_array() const {
    auto a = array;
    a.frequency = frequency;
    return a;
  }
};

inline mom::Grid2D square_grid(double side, int n) { return {-0.5 * side, -0.5 * side, n, n, side / n, side / n}; }

// 64 antennas on a 0.36 m diameter circle at 2.45 GHz; even antennas emit,
// each seen by the 16 odd antennas around the opposite point.
inline ExperimentConfig default_config() {
  ExperimentConfig c;
  c.array.center = {0.0, 0.0};
  c.array.radius = 0.18;
  c.array.n_antennas = 64;
  c.array.frequency = 2.45e9;
  for (int t = 0; t < 64; t += 2) c.array.tx_indices.push_back(t);
  c.array.receiver_mode = mom::ReceiverMode::opposite_arc;
  c.array.receivers_per_tx = 16;
  c.grid_inverse = square_grid(0.2, 32);
  c.grid_forward = square_grid(0.2, 64);
  c.phantom.shapes.push_back(Shape::disk({0.03, -0.02}, 0.025, 1.01));
  c.frequency = 2.45e9;
  c.background_eps = 1.0;
  c.snr_db = 30.0;
  c.seed = 42;
  return c;
}

// ---- JSON ----

namespace detail {

inline json complex_to_json(Complex v) { return json::array({v.real(), v.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw ConfigError(where + ": expected a number or [re, im]");
}

inline mom::Point2 point_from_json(const json& j, const std::string& where) {
  if (!(j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()))
    throw ConfigError(where + ": expected [x, y]");
  return {j[0].get<double>(), j[1].get<double>()};
}

template <typename T>
T get(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw ConfigError(where + ": missing key '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

template <typename T>
T get_or(const json& obj, const char* key, T fallback, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return fallback;
  return get<T>(obj, key, where);
}

template <typename T>
std::optional<T> get_opt(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key) || obj.at(key).is_null()) return std::nullopt;
  return get<T>(obj, key, where);
}

inline void require_object(const json& j, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
}

inline json grid_to_json(const mom::Grid2D& g) {
  return {{"x0", g.x0}, {"y0", g.y0}, {"nx", g.nx}, {"ny", g.ny}, {"dx", g.dx}, {"dy", g.dy}};
}

inline mom::Grid2D grid_from_json(const json& j, const std::string& where) {
  require_object(j, where);
  return {get<double>(j, "x0", where), get<double>(j, "y0", where), get<int>(j, "nx", where),
          get<int>(j, "ny", where),    get<double>(j, "dx", where), get<double>(j, "dy", where)};
}

inline const char* method_name(inversion::Method m) {
  switch (m) {
    case inversion::Method::tikhonov: return "tikhonov";
    case inversion::Method::tsvd: return "tsvd";
    case inversion::Method::subspace: return "subspace";
  }
  return "tikhonov";
}

}  // namespace detail

inline inversion::Method parse_method(const std::string& s) {
  if (s == "tikhonov") return inversion::Method::tikhonov;
  if (s == "tsvd") return inversion::Method::tsvd;
  if (s == "subspace") return inversion::Method::subspace;
  throw ConfigError("unknown inversion method '" + s + "' (expected tikhonov, tsvd or subspace)");
}

inline std::string method_name(inversion::Method m) { return detail::method_name(m); }

inline json to_json(const ExperimentConfig& c) {
  using detail::complex_to_json;
  json shapes = json::array();
  for (const auto& s : c.phantom.shapes) {
    json js{{"kind", s.kind == ShapeKind::disk ? "disk" : "rectangle"},
            {"center", {s.center.x, s.center.y}},
            {"eps", complex_to_json(s.eps_rel)}};
    if (s.kind == ShapeKind::disk) {
      js["radius"] = s.width;
    } else {
      js["width"] = s.width;
      js["height"] = s.height;
    }
    shapes.push_back(js);
  }
  const auto& a = c.array;
  json inv{{"method", detail::method_name(c.inversion.method)}, {"beta", nullptr}, {"discrepancy", nullptr}, {"k", nullptr}};
  if (c.inversion.beta) inv["beta"] = *c.inversion.beta;
  if (c.inversion.discrepancy) inv["discrepancy"] = *c.inversion.discrepancy;
  if (c.inversion.k) inv["k"] = *c.inversion.k;
  return {
      {"frequency", c.frequency},
      {"background_eps", complex_to_json(c.background_eps)},
      {"array",
       {{"center", {a.center.x, a.center.y}},
        {"radius", a.radius},
        {"n_antennas", a.n_antennas},
        {"tx_indices", a.tx_indices},
        {"receiver_mode", a.receiver_mode == mom::ReceiverMode::fixed ? "fixed" : "opposite_arc"},
        {"rx_indices", a.rx_indices},
        {"receivers_per_tx", a.receivers_per_tx}}},
      {"grid_inverse", detail::grid_to_json(c.grid_inverse)},
      {"grid_forward", detail::grid_to_json(c.grid_forward)},
      {"phantom", shapes},
      {"snr_db", c.snr_db ? json(*c.snr_db) : json(nullptr)},
      {"seed", c.seed},
      {"allow_inverse_crime", c.allow_inverse_crime},
      {"inversion", inv},
      {"projection", {{"n_angles", c.projection.n_angles}, {"n_samples", c.projection.n_samples}}},
  };
}

// Missing top-level sections fall back to default_config().
inline ExperimentConfig from_json(const json& j) {
  using detail::get;
  using detail::get_opt;
  using detail::get_or;
  detail::require_object(j, "config");
  ExperimentConfig c = default_config();
  c.frequency = get_or<double>(j, "frequency", c.frequency, "config");
  if (j.contains("background_eps")) c.background_eps = detail::complex_from_json(j["background_eps"], "background_eps");
  if (j.contains("array")) {
    const auto& a = j["array"];
    detail::require_object(a, "array");
    auto& r = c.array;
    if (a.contains("center")) r.center = detail::point_from_json(a["center"], "array.center");
    r.radius = get_or<double>(a, "radius", r.radius, "array");
    r.n_antennas = get_or<int>(a, "n_antennas", r.n_antennas, "array");
    r.tx_indices = get_or<std::vector<int>>(a, "tx_indices", r.tx_indices, "array");
    const auto mode = get_or<std::string>(a, "receiver_mode", "opposite_arc", "array");
    if (mode == "fixed")
      r.receiver_mode = mom::ReceiverMode::fixed;
    else if (mode == "opposite_arc")
      r.receiver_mode = mom::ReceiverMode::opposite_arc;
    else
      throw ConfigError("array.receiver_mode: expected 'fixed' or 'opposite_arc', got '" + mode + "'");
    r.rx_indices = get_or<std::vector<int>>(a, "rx_indices", {}, "array");
    r.receivers_per_tx = get_or<int>(a, "receivers_per_tx", r.receivers_per_tx, "array");
  }
  if (j.contains("grid_inverse")) c.grid_inverse = detail::grid_from_json(j["grid_inverse"], "grid_inverse");
  if (j.contains("grid_forward")) c.grid_forward = detail::grid_from_json(j["grid_forward"], "grid_forward");
  if (j.contains("phantom")) {
    const auto& p = j["phantom"];
    if (!p.is_array()) throw ConfigError("phantom: expected an array of shapes");
    c.phantom.shapes.clear();
    for (std::size_t i = 0; i < p.size(); ++i) {
      const std::string where = "phantom[" + std::to_string(i) + "]";
      const auto& s = p[i];
      detail::require_object(s, where);
      const auto kind = get<std::string>(s, "kind", where);
      const auto center = detail::point_from_json(s.value("center", json::array({0.0, 0.0})), where + ".center");
      const Complex eps = s.contains("eps") ? detail::complex_from_json(s["eps"], where + ".eps") : Complex(1.0);
      if (kind == "disk")
        c.phantom.shapes.push_back(Shape::disk(center, get<double>(s, "radius", where), eps));
      else if (kind == "rectangle")
        c.phantom.shapes.push_back(
            Shape::rectangle(center, get<double>(s, "width", where), get<double>(s, "height", where), eps));
      else
        throw ConfigError(where + ".kind: unsupported shape '" + kind + "'");
    }
  }
  if (j.contains("snr_db")) c.snr_db = get_opt<double>(j, "snr_db", "config");
  if (j.contains("seed")) {
    if (!j["seed"].is_number_integer() || (j["seed"].is_number_integer() && !j["seed"].is_number_unsigned() && j["seed"].get<long long>() < 0))
      throw ConfigError("seed: expected a nonnegative integer");
    c.seed = j["seed"].get<std::uint64_t>();
  }
  c.allow_inverse_crime = get_or<bool>(j, "allow_inverse_crime", false, "config");
  if (j.contains("inversion")) {
    const auto& v = j["inversion"];
    detail::require_object(v, "inversion");
    c.inversion.method = parse_method(get_or<std::string>(v, "method", "tikhonov", "inversion"));
    c.inversion.beta = get_opt<double>(v, "beta", "inversion");
    c.inversion.discrepancy = get_opt<double>(v, "discrepancy", "inversion");
    c.inversion.k = get_opt<long>(v, "k", "inversion");
  }
  if (j.contains("projection")) {
    const auto& v = j["projection"];
    detail::require_object(v, "projection");
    c.projection.n_angles = get_or<int>(v, "n_angles", c.projection.n_angles, "projection");
    c.projection.n_samples = get_or<int>(v, "n_samples", c.projection.n_samples, "projection");
  }
  c.array.frequency = c.frequency;
  return c;
}

// Line and column (1-based) of a byte offset in text.
inline std::pair<std::size_t, std::size_t> line_column(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  std::size_t col = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i) {
    if (text[i] == '\n') {
      ++line;
      col = 1;
    } else {
      ++col;
    }
  }
  return {line, col};
}

inline json parse_json_text(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    // e.byte is one past the offending character
    const auto [line, col] = line_column(text, e.byte == 0 ? 0 : e.byte - 1);
    throw ConfigError(source + ":" + std::to_string(line) + ":" + std::to_string(col) + ": JSON parse error (line " +
                      std::to_string(line) + ", column " + std::to_string(col) + ")");
  }
}

// Applies "a.b.c=value" to a JSON document. The value is parsed as JSON when
// possible and taken as a string otherwise; numeric path parts index arrays.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("override '" + assignment + "': expected key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  json* node = &doc;
  std::size_t start = 0;
  while (true) {
    const auto dot = path.find('.', start);
    const std::string part = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (part.empty()) throw ConfigError("override '" + assignment + "': empty path component");
    json* next = nullptr;
    if (node->is_array()) {
      std::size_t idx = 0;
      try {
        std::size_t used = 0;
        idx = std::stoul(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
      } catch (const std::exception&) {
        throw ConfigError("override '" + assignment + "': '" + part + "' is not an array index");
      }
      if (idx >= node->size()) throw ConfigError("override '" + assignment + "': index " + part + " out of range");
      next = &(*node)[idx];
    } else {
      if (!node->is_object() && !node->is_null())
        throw ConfigError("override '" + assignment + "': '" + part + "' descends into a scalar");
      next = &(*node)[part];
    }
    if (dot == std::string::npos) {
      *next = value;
      return;
    }
    node = next;
    start = dot + 1;
  }
}

inline void validate(const ExperimentConfig& c) {
  try {
    if (!(c.frequency > 0.0) || !std::isfinite(c.frequency)) throw ConfigError("frequency must be positive");
    if (c.snr_db && !std::isfinite(*c.snr_db)) throw ConfigError("snr_db must be finite");
    const auto arr = c.resolved_array();
    arr.validate_against(c.grid_inverse);
    arr.validate_against(c.grid_forward);
    c.phantom.validate_within(c.grid_forward);
    c.phantom.validate_within(c.grid_inverse);
    mom::real_wavenumber(mom::wavenumber(c.background_eps, c.frequency));
    if (!c.allow_inverse_crime &&
        (c.grid_forward.dx > 0.5 * c.grid_inverse.dx * (1.0 + 1e-12) ||
         c.grid_forward.dy > 0.5 * c.grid_inverse.dy * (1.0 + 1e-12)))
      throw ConfigError("grid_forward cells must be at most half the grid_inverse cell size (inverse-crime guard)");
    if (c.inversion.beta && !(*c.inversion.beta >= 0.0)) throw ConfigError("inversion.beta must be nonnegative");
    if (c.inversion.discrepancy && !(*c.inversion.discrepancy > 0.0))
      throw ConfigError("inversion.discrepancy must be positive");
    if (c.inversion.k && *c.inversion.k < 1) throw ConfigError("inversion.k must be >= 1");
    if (c.projection.n_angles < 1) throw ConfigError("projection.n_angles must be positive");
    if (!linalg::is_power_of_two(std::size_t(std::max(c.projection.n_samples, 0))))
      throw ConfigError("projection.n_samples must be a power of two");
    for (int t : arr.tx_indices) arr.receivers_for(t);
  } catch (const std::domain_error& e) {
    throw ConfigError(e.what());
  }
}

// ---- simulation ----

// splitmix64 stream; uniforms in (0, 1] from the top 53 bits.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() { return (double(next() >> 11) + 1.0) * 0x1.0p-53; }

  // Circular complex Gaussian with E|z|^2 = 1 (Box-Muller).
  Complex complex_normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-std::log(u1));  // sqrt(-2 ln u1) * sqrt(1/2)
    const double t = 2.0 * std::numbers::pi * u2;
    return {r * std::cos(t), r * std::sin(t)};
  }

 private:
  std::uint64_t state_;
};

struct ScatterData {
  CMatrix values;  // |tx| x |rx|
  mom::AntennaArray array;
  double frequency = 0.0;
  bool noise_applied = false;
};

struct Simulation {
  ScatterData data;
  std::vector<mom::FieldSolution> fields;  // total fields on grid_forward
  double noise_norm = 0.0;                  // Frobenius norm of the injected noise
};

inline double noise_power(const CMatrix& s, double snr_db) {
  return s.squaredNorm() * std::pow(10.0, -snr_db / 10.0) / double(s.size());
}

inline void add_noise(CMatrix& s, double snr_db, std::uint64_t seed, double* injected_norm = nullptr) {
  const double sigma = std::sqrt(noise_power(s, snr_db));
  SplitMix64 rng(seed);
  double n2 = 0.0;
  for (Eigen::Index i = 0; i < s.rows(); ++i)
    for (Eigen::Index j = 0; j < s.cols(); ++j) {
      const Complex e = sigma * rng.complex_normal();
      n2 += std::norm(e);
      s(i, j) += e;
    }
  if (injected_norm) *injected_norm = std::sqrt(n2);
}

inline Simulation simulate(const ExperimentConfig& cfg) {
  const auto array = cfg.resolved_array();
  array.validate_against(cfg.grid_forward);
  const auto map = rasterize(cfg.phantom, cfg.grid_forward, cfg.background_eps);
  const std::size_t nt = array.tx_indices.size();
  const std::size_t nr = array.receivers_per_row();

  Simulation sim;
  sim.data.array = array;
  sim.data.frequency = cfg.frequency;
  sim.data.values = CMatrix::Zero(Eigen::Index(nt), Eigen::Index(nr));
  const bool empty = std::all_of(map.eps_rel.begin(), map.eps_rel.end(),
                                 [&](const Complex& e) { return e == map.background_eps_rel; });
  if (empty) {
    // No scatterer: the total field is the incident field.
    const auto k1 = mom::wavenumber(cfg.background_eps, cfg.frequency);
    for (int t : array.tx_indices) {
      mom::FieldSolution f;
      f.transmitter = t;
      const auto src = array.position(t);
      for (std::size_t n = 0; n < cfg.grid_forward.size(); ++n)
        f.incident_field.push_back(mom::line_source_field(k1, src, cfg.grid_forward.center(n)));
      f.total_field = f.incident_field;
      sim.fields.push_back(std::move(f));
    }
  } else {
    const mom::ForwardSolver solver(map, cfg.frequency);
    sim.fields = solver.solve_all(array);
    parallel_for(nt, [&](std::size_t t) {
      const auto row = solver.scattered_at_receivers(sim.fields[t], array);
      for (std::size_t m = 0; m < nr; ++m) sim.data.values(Eigen::Index(t), Eigen::Index(m)) = row[m];
    });
  }
  if (cfg.snr_db && sim.data.values.squaredNorm() > 0.0) {
    add_noise(sim.data.values, *cfg.snr_db, cfg.seed, &sim.noise_norm);
    sim.data.noise_applied = true;
  }
  return sim;
}

// Noise norm implied by snr_db for data that already contains the noise:
// ||b||^2 = ||S||^2 (1 + 10^(-snr/10)) in expectation.
inline double noise_norm_from_snr(double data_norm, double snr_db) {
  const double r = std::pow(10.0, -snr_db / 10.0);
  return data_norm * std::sqrt(r / (1.0 + r));
}

// ---- metrics ----

struct ReconMetrics {
  double rel_l2_error = 0.0;
  double centroid_offset = 0.0;
  double correlation = 1.0;
};

namespace detail {

inline std::optional<mom::Point2> centroid(const mom::Grid2D& g, const std::vector<Complex>& v,
                                           const std::vector<bool>* mask) {
  double vmax = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i)
    if (!mask || (*mask)[i]) vmax = std::max(vmax, std::abs(v[i]));
  if (vmax == 0.0) return std::nullopt;
  double sw = 0.0, sx = 0.0, sy = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double w = std::max(std::abs(v[i]) - 0.5 * vmax, 0.0);
    const auto c = g.center(i);
    sw += w;
    sx += w * c.x;
    sy += w * c.y;
  }
  return mom::Point2{sx / sw, sy / sw};
}

}  // namespace detail

// Metrics of `recon` against `truth` on grid g, optionally restricted to mask.
// The centroid weights each cell by max(|v| - max|v| / 2, 0).
inline ReconMetrics compute_metrics(const mom::Grid2D& g, const std::vector<Complex>& recon,
                                    const std::vector<Complex>& truth, const std::vector<bool>* mask = nullptr) {
  if (recon.size() != truth.size() || recon.size() != g.size())
    throw DomainError("metrics: map sizes do not match the grid");
  if (mask && mask->size() != g.size()) throw DomainError("metrics: mask size does not match the grid");
  auto in = [&](std::size_t i) { return !mask || (*mask)[i]; };
  double err2 = 0.0, t2 = 0.0;
  Complex mr = 0.0, mt = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in(i)) continue;
    err2 += std::norm(recon[i] - truth[i]);
    t2 += std::norm(truth[i]);
    mr += recon[i];
    mt += truth[i];
    ++count;
  }
  ReconMetrics m;
  if (t2 > 0.0)
    m.rel_l2_error = std::sqrt(err2 / t2);
  else
    m.rel_l2_error = err2 == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();

  if (count > 0) {
    mr /= double(count);
    mt /= double(count);
  }
  double num = 0.0, nr2 = 0.0, nt2 = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (!in(i)) continue;
    const Complex a = recon[i] - mr;
    const Complex b = truth[i] - mt;
    num += (a * std::conj(b)).real();
    nr2 += std::norm(a);
    nt2 += std::norm(b);
  }
  if (nr2 > 0.0 && nt2 > 0.0)
    m.correlation = std::clamp(num / std::sqrt(nr2 * nt2), -1.0, 1.0);
  else
    m.correlation = err2 == 0.0 ? 1.0 : 0.0;

  const auto cr = detail::centroid(g, recon, mask);
  const auto ct = detail::centroid(g, truth, mask);
  if (cr && ct)
    m.centroid_offset = mom::distance(*cr, *ct);
  else
    m.centroid_offset = (cr || ct) ? std::numeric_limits<double>::infinity() : 0.0;
  return m;
}

inline json to_json(const ReconMetrics& m) {
  auto num = [](double v) { return std::isfinite(v) ? json(v) : json("inf"); };
  return {{"rel_l2_error", num(m.rel_l2_error)},
          {"centroid_offset", num(m.centroid_offset)},
          {"correlation", num(m.correlation)}};
}

// ---- reconstruction ----

struct Reconstruction {
  mom::Grid2D grid;
  inversion::BornReconstruction born;
  std::vector<Complex> truth_contrast;
  ReconMetrics metrics;
  double noise_norm = 0.0;  // delta used by the discrepancy principle, 0 if unused
};

inline inversion::BornSystem born_system(const ExperimentConfig& cfg, const ScatterData& data) {
  const auto array = cfg.resolved_array();
  if (std::size_t(data.values.rows()) != array.tx_indices.size() ||
      std::size_t(data.values.cols()) != array.receivers_per_row())
    throw ConfigError("scatter data is " + std::to_string(data.values.rows()) + "x" +
                      std::to_string(data.values.cols()) + " but the array needs " +
                      std::to_string(array.tx_indices.size()) + "x" + std::to_string(array.receivers_per_row()));
  inversion::BornSystem sys;
  sys.a = inversion::born_assemble(cfg.grid_inverse, cfg.background_eps, array);
  sys.b = inversion::stack_rows(data.values);
  sys.grid = cfg.grid_inverse;
  sys.array = array;
  sys.background_eps_rel = cfg.background_eps;
  return sys;
}

inline inversion::InversionRequest resolve_request(const ExperimentConfig& cfg, const ScatterData& data) {
  inversion::InversionRequest req;
  const auto& s = cfg.inversion;
  req.method = s.method;
  req.beta = s.beta;
  req.discrepancy = s.discrepancy;
  if (s.k) req.k = Eigen::Index(*s.k);
  if (req.method == inversion::Method::tikhonov && !req.beta && !req.discrepancy) {
    if (!cfg.snr_db) throw ConfigError("tikhonov needs inversion.beta, inversion.discrepancy or snr_db");
    req.discrepancy = noise_norm_from_snr(data.values.norm(), *cfg.snr_db);
  }
  if (req.method != inversion::Method::tikhonov && !req.k)
    throw ConfigError(std::string(detail::method_name(req.method)) + " needs inversion.k");
  return req;
}

inline Reconstruction reconstruct(const ExperimentConfig& cfg, const ScatterData& data) {
  const auto& gi = cfg.grid_inverse;
  const auto& gf = cfg.grid_forward;
  if (!cfg.allow_inverse_crime && gi.dx == gf.dx && gi.dy == gf.dy)
    throw ConfigError("reconstruct: grid_inverse and grid_forward have identical cells (inverse crime); "
                      "set allow_inverse_crime to override");
  const auto req = resolve_request(cfg, data);
  const auto sys = born_system(cfg, data);
  Reconstruction r;
  r.grid = gi;
  r.born = inversion::born_invert(sys, req);
  r.noise_norm = req.discrepancy.value_or(0.0);
  const auto truth = rasterize(cfg.phantom, gi, cfg.background_eps);
  r.truth_contrast = mom::contrast(truth, cfg.frequency);
  r.metrics = compute_metrics(gi, r.born.contrast, r.truth_contrast);
  return r;
}

// ---- projection experiment ----

struct ProjectionResult {
  mom::Grid2D grid;
  tomo::Sinogram sinogram;
  std::vector<double> map;    // reconstructed chi
  std::vector<double> truth;  // cell-averaged chi
  std::vector<bool> mask;     // shapes enlarged by 20%
  ReconMetrics metrics;
};

// Analytic sinogram of the phantom (bin-averaged samples over a window of
// four phantom radii), reconstructed on a grid with the sample spacing.
inline ProjectionResult rytov_projection_experiment(const Phantom& phantom, Complex background, int n_angles,
                                                    int n_samples, double angle_offset = 0.0) {
  phantom.validate();
  if (phantom.shapes.empty()) throw DomainError("projection experiment: phantom has no shapes");
  double reach = 0.0;
  for (const auto& s : phantom.shapes) reach = std::max(reach, s.reach());
  const double spacing = 4.0 * reach / n_samples;

  ProjectionResult out;
  out.sinogram = tomo::project_phantom(phantom, background, n_angles, n_samples, spacing, tomo::Sampling::bin_average,
                                       tomo::uniform_angles(n_angles, angle_offset));
  const int n = int(std::ceil(2.5 * reach / spacing));
  out.grid = {-0.5 * n * spacing, -0.5 * n * spacing, n, n, spacing, spacing};
  out.map = tomo::fourier_slice_reconstruct(out.sinogram, out.grid);

  Phantom chi;
  for (const auto& s : phantom.shapes) {
    const double v = tomo::detail::shape_value(s, background);
    auto c = s;
    c.eps_rel = 1.0 + v;
    chi.shapes.push_back(c);
  }
  const auto truth = rasterize(chi, out.grid, 1.0, 8);
  out.truth.resize(out.grid.size());
  out.mask.assign(out.grid.size(), false);
  for (std::size_t i = 0; i < out.grid.size(); ++i) {
    out.truth[i] = truth.eps_rel[i].real() - 1.0;
    const auto p = out.grid.center(i);
    for (auto s : phantom.shapes) {
      s.width *= 1.2;
      s.height *= 1.2;
      if (s.contains(p)) out.mask[i] = true;
    }
  }
  std::vector<Complex> r(out.map.begin(), out.map.end());
  std::vector<Complex> t(out.truth.begin(), out.truth.end());
  out.metrics = compute_metrics(out.grid, r, t, &out.mask);
  return out;
}

}  // namespace scattomo::harness
