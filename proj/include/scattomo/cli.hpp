#pragma once

// Batch command-line front end. Exit codes: 0 success, 2 configuration or
// input error, 3 numerical failure. Outputs are staged in a hidden directory
// and moved into place only when the command succeeds.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "scattomo/analytic_em.hpp"
#include "scattomo/dense_linalg.hpp"
#include "scattomo/errors.hpp"
#include "scattomo/harness.hpp"
#include "scattomo/image_io.hpp"
#include "scattomo/matrix_csv.hpp"

namespace scattomo::cli {

namespace fs = std::filesystem;
using nlohmann::json;

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

class OutputStage {
 public:
  explicit OutputStage(fs::path dir) : dir_(std::move(dir)) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw ConfigError("cannot create output directory '" + dir_.string() + "': " + ec.message());
    staging_ = dir_ / ".staging";
    fs::remove_all(staging_, ec);
    fs::create_directories(staging_, ec);
    if (ec) throw ConfigError("cannot create staging directory '" + staging_.string() + "': " + ec.message());
  }

  OutputStage(const OutputStage&) = delete;
  OutputStage& operator=(const OutputStage&) = delete;

  ~OutputStage() {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }

  std::string path(const std::string& name) const { return (staging_ / name).string(); }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream os(path(name), std::ios::binary);
    os << text;
    if (!os) throw ConfigError("cannot write '" + name + "'");
  }

  void commit() {
    for (const auto& entry : fs::directory_iterator(staging_)) fs::rename(entry.path(), dir_ / entry.path().filename());
  }

 private:
  fs::path dir_;
  fs::path staging_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

// Known top-level keys: the experiment schema plus the analytic "fields" block.
inline void check_keys(const json& doc) {
  static const char* kKeys[] = {"frequency", "background_eps", "array",     "grid_inverse", "grid_forward",
                                "phantom",   "snr_db",         "seed",      "allow_inverse_crime",
                                "inversion", "projection",     "fields"};
  if (!doc.is_object()) throw ConfigError("config: top level must be a JSON object");
  for (const auto& [key, value] : doc.items()) {
    bool known = false;
    for (const char* k : kKeys) known = known || key == k;
    if (!known) throw ConfigError("config: unknown key '" + key + "'");
  }
}

struct LoadedConfig {
  json doc;
  harness::ExperimentConfig cfg;
};

inline LoadedConfig load_config(const std::optional<std::string>& path, const std::vector<std::string>& overrides) {
  LoadedConfig out;
  if (path) {
    out.doc = harness::parse_json_text(read_file(*path), *path);
  } else {
    out.doc = harness::to_json(harness::default_config());
  }
  for (const auto& o : overrides) harness::apply_override(out.doc, o);
  check_keys(out.doc);
  out.cfg = harness::from_json(out.doc);
  harness::validate(out.cfg);
  return out;
}

inline std::string dump(const json& j) { return j.dump(2) + "\n"; }

inline std::vector<double> real_parts(const std::vector<linalg::Complex>& v) {
  std::vector<double> r;
  r.reserve(v.size());
  for (const auto& z : v) r.push_back(z.real());
  return r;
}

// ---- commands ----

inline void write_forward(OutputStage& out, const harness::ExperimentConfig& cfg, const harness::Simulation& sim) {
  io::write_complex_csv(out.path("scatter.csv"), sim.data.values);
  for (const auto& f : sim.fields)
    io::write_complex_csv(out.path("fields_tx" + std::to_string(f.transmitter) + ".csv"),
                          io::map_to_matrix(cfg.grid_forward, f.total_field));
  out.write_text("run.json", dump(harness::to_json(cfg)));
}

inline json inversion_summary(const harness::ExperimentConfig& cfg, const harness::Reconstruction& r) {
  json m = harness::to_json(r.metrics);
  m["method"] = harness::method_name(cfg.inversion.method);
  m["beta"] = r.born.beta;
  m["k"] = r.born.k;
  m["discrepancy"] = r.noise_norm;
  return m;
}

inline void write_inversion(OutputStage& out, const harness::ExperimentConfig& cfg, const harness::Reconstruction& r,
                            const std::string& prefix = "recon", const std::string& metrics = "metrics.json") {
  io::write_complex_csv(out.path(prefix + ".csv"), io::map_to_matrix(r.grid, r.born.chi));
  io::write_pgm(out.path(prefix + ".pgm"), r.grid, real_parts(r.born.chi));
  out.write_text(metrics, dump(inversion_summary(cfg, r)));
}

inline void write_projection(OutputStage& out, const harness::ProjectionResult& p, const std::string& prefix,
                             const std::string& metrics) {
  linalg::CMatrix sino(p.sinogram.n_angles, p.sinogram.n_samples);
  for (int a = 0; a < p.sinogram.n_angles; ++a)
    for (int m = 0; m < p.sinogram.n_samples; ++m) sino(a, m) = p.sinogram.at(a, m);
  io::write_complex_csv(out.path(prefix + "_sinogram.csv"), sino);
  std::vector<linalg::Complex> map(p.map.begin(), p.map.end());
  io::write_complex_csv(out.path(prefix + ".csv"), io::map_to_matrix(p.grid, map));
  io::write_pgm(out.path(prefix + ".pgm"), p.grid, p.map);
  json m = harness::to_json(p.metrics);
  m["n_angles"] = p.sinogram.n_angles;
  m["n_samples"] = p.sinogram.n_samples;
  m["sample_spacing"] = p.sinogram.sample_spacing;
  out.write_text(metrics, dump(m));
}

inline harness::ProjectionResult run_projection(const harness::ExperimentConfig& cfg) {
  return harness::rytov_projection_experiment(cfg.phantom, cfg.background_eps, cfg.projection.n_angles,
                                              cfg.projection.n_samples);
}

struct SvdReport {
  std::vector<double> sigma;
  double cond = 0.0;
  long rank = 0;
  bool complex_input = false;
};

inline constexpr double kRankThreshold = 1e-10;

// Singular values of a complex matrix are read off its realification, where
// each one appears twice.
inline SvdReport svd_report(const linalg::CMatrix& a) {
  SvdReport r;
  r.complex_input = a.imag().cwiseAbs().maxCoeff() != 0.0;
  linalg::RVector sigma;
  if (r.complex_input) {
    const auto sys = linalg::realify(a, linalg::CVector::Zero(a.rows()));
    const auto s = linalg::svd(sys.a).sigma;
    sigma.resize(s.size() / 2);
    for (Eigen::Index i = 0; i < sigma.size(); ++i) sigma(i) = s(2 * i);
  } else {
    sigma = linalg::svd(linalg::RMatrix(a.real())).sigma;
  }
  r.sigma.assign(sigma.data(), sigma.data() + sigma.size());
  if (sigma.size() == 0 || sigma(0) == 0.0) {
    r.cond = std::numeric_limits<double>::infinity();
    r.rank = 0;
  } else {
    r.cond = linalg::cond(sigma);
    r.rank = long(linalg::numerical_rank(sigma, kRankThreshold));
  }
  return r;
}

inline json to_json(const SvdReport& r) {
  json j;
  j["sigma"] = r.sigma;
  j["cond"] = std::isfinite(r.cond) ? json(r.cond) : json("inf");
  j["rank"] = r.rank;
  j["rank_threshold"] = kRankThreshold;
  j["complex"] = r.complex_input;
  return j;
}

struct Range {
  double min = 0.0;
  double max = 1.0;
  int n = 2;
};

inline Range range_from_json(const json& f, const char* key) {
  if (!f.contains(key)) throw ConfigError(std::string("fields.") + key + ": missing range");
  const auto& j = f.at(key);
  if (!j.is_object()) throw ConfigError(std::string("fields.") + key + ": expected {min, max, n}");
  Range r{harness::detail::get<double>(j, "min", key), harness::detail::get<double>(j, "max", key),
          harness::detail::get<int>(j, "n", key)};
  if (r.n < 1) throw ConfigError(std::string("fields.") + key + ".n must be positive");
  if (!(r.max >= r.min)) throw ConfigError(std::string("fields.") + key + ": max must not be below min");
  return r;
}

inline double sample(const Range& r, int i) { return r.n == 1 ? r.min : r.min + (r.max - r.min) * i / (r.n - 1); }

// Evaluates the analytic field described by the "fields" block on a 2D
// parameter grid: rows follow the first range, columns the second.
inline linalg::CMatrix evaluate_fields(const json& f) {
  using harness::detail::get_or;
  if (!f.is_object()) throw ConfigError("fields: expected an object");
  const auto kind = harness::detail::get<std::string>(f, "kind", "fields");
  const std::string w = "fields";
  if (kind == "dipole" || kind == "dipole_pec") {
    analytic::DipoleConfig d;
    d.i0 = get_or<double>(f, "i0", d.i0, w);
    d.l = get_or<double>(f, "l", d.l, w);
    d.beta = get_or<double>(f, "beta", d.beta, w);
    d.eta = get_or<double>(f, "eta", d.eta, w);
    d.d = get_or<double>(f, "d", 0.0, w);
    const auto mode_name = get_or<std::string>(f, "mode", "full", w);
    if (mode_name != "full" && mode_name != "farfield") throw ConfigError("fields.mode: expected full or farfield");
    const auto mode = mode_name == "full" ? analytic::DipoleMode::full : analytic::DipoleMode::farfield;
    const Range rr = range_from_json(f, "r");
    const Range th = range_from_json(f, "theta");
    linalg::CMatrix m(rr.n, th.n);
    for (int i = 0; i < rr.n; ++i)
      for (int j = 0; j < th.n; ++j)
        m(i, j) = kind == "dipole" ? analytic::dipole_field(d, sample(rr, i), sample(th, j), mode).e_theta
                                   : analytic::dipole_above_pec(d, sample(rr, i), sample(th, j));
    return m;
  }
  if (kind == "point_charge") {
    analytic::PointChargeConfig c;
    c.q = get_or<double>(f, "q", c.q, w);
    c.r = get_or<double>(f, "height", c.r, w);
    c.epsilon0 = get_or<double>(f, "epsilon0", c.epsilon0, w);
    const double z = get_or<double>(f, "z", 0.0, w);
    const Range y = range_from_json(f, "y");
    const Range x = range_from_json(f, "x");
    linalg::CMatrix m(y.n, x.n);
    for (int i = 0; i < y.n; ++i)
      for (int j = 0; j < x.n; ++j) m(i, j) = analytic::point_charge_potential(c, {sample(x, j), sample(y, i), z});
    return m;
  }
  if (kind == "line_charge") {
    analytic::LineChargeConfig c;
    c.lambda = get_or<double>(f, "lambda", c.lambda, w);
    c.d = get_or<double>(f, "d", c.d, w);
    c.epsilon0 = get_or<double>(f, "epsilon0", c.epsilon0, w);
    const Range rr = range_from_json(f, "radius");
    const Range ph = range_from_json(f, "phi");
    linalg::CMatrix m(rr.n, ph.n);
    for (int i = 0; i < rr.n; ++i)
      for (int j = 0; j < ph.n; ++j) m(i, j) = analytic::line_charge_potential(c, {sample(rr, i), sample(ph, j)});
    return m;
  }
  if (kind == "eigen_green") {
    analytic::SturmLiouvilleGreen g;
    g.length = get_or<double>(f, "length", g.length, w);
    g.n_terms = get_or<int>(f, "n_terms", g.n_terms, w);
    const Range x = range_from_json(f, "x");
    const Range xi = range_from_json(f, "xi");
    linalg::CMatrix m(x.n, xi.n);
    for (int i = 0; i < x.n; ++i)
      for (int j = 0; j < xi.n; ++j) m(i, j) = analytic::eigen_green(g, sample(x, i), sample(xi, j));
    return m;
  }
  throw ConfigError("fields.kind: unsupported '" + kind + "'");
}

// ---- entry point ----

struct Options {
  std::optional<std::string> config;
  std::string output = ".";
  std::vector<std::string> overrides;
  std::optional<std::string> scatter;
  std::optional<std::string> method;
  std::optional<double> beta;
  std::optional<long> k;
  std::optional<double> discrepancy;
  std::optional<std::uint64_t> seed;
  std::string matrix;
};

inline void apply_inversion_flags(harness::ExperimentConfig& cfg, const Options& o) {
  if (o.method) cfg.inversion.method = harness::parse_method(*o.method);
  if (o.beta) {
    if (!(*o.beta >= 0.0)) throw ConfigError("--beta must be nonnegative");
    cfg.inversion.beta = o.beta;
    cfg.inversion.discrepancy.reset();
  }
  if (o.discrepancy) {
    if (!(*o.discrepancy > 0.0)) throw ConfigError("--discrepancy must be positive");
    cfg.inversion.discrepancy = o.discrepancy;
    cfg.inversion.beta.reset();
  }
  if (o.k) {
    if (*o.k < 1) throw ConfigError("--k must be >= 1");
    cfg.inversion.k = o.k;
  }
}

inline int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"scattomo: 2D microwave scattering and tomography toolkit"};
  app.require_subcommand(1);
  Options o;

  auto add_common = [&](CLI::App* sub, bool config_required) {
    auto* c = sub->add_option("-c,--config", o.config, "experiment configuration (JSON)");
    if (config_required) c->required();
    sub->add_option("-o,--output", o.output, "output directory")->required();
    sub->add_option("--set", o.overrides, "override a config value: dotted.path=value (repeatable)");
  };

  auto* forward = app.add_subcommand("forward", "simulate scattered data: scatter.csv, fields_tx<k>.csv, run.json");
  add_common(forward, true);

  auto* invert = app.add_subcommand("invert", "Born inversion of scatter.csv: recon.csv, recon.pgm, metrics.json");
  add_common(invert, true);
  invert->add_option("--scatter", o.scatter, "scatter matrix CSV (default: <output>/scatter.csv)");
  invert->add_option("--method", o.method, "tikhonov | tsvd | subspace");
  invert->add_option("--beta", o.beta, "Tikhonov penalty (>= 0)");
  invert->add_option("--k", o.k, "subspace dimension for tsvd / subspace");
  invert->add_option("--discrepancy", o.discrepancy, "noise norm delta for discrepancy-principle beta");

  auto* project = app.add_subcommand("project", "Fourier-slice reconstruction of the phantom's analytic projections");
  add_common(project, true);

  auto* svd = app.add_subcommand("svd-report", "singular values, cond and numerical rank of a matrix CSV as JSON");
  svd->add_option("matrix", o.matrix, "complex matrix CSV")->required();

  auto* fields = app.add_subcommand("fields", "evaluate the analytic field in the config's fields block: field.csv");
  add_common(fields, true);

  auto* demo = app.add_subcommand("demo", "default experiment end to end: forward, inversion and projection artifacts");
  add_common(demo, false);
  demo->add_option("--seed", o.seed, "noise seed");

  std::string flags = "\nFlags by command:\n";
  for (auto* sub : app.get_subcommands({})) {
    flags += "  " + sub->get_name() + ":";
    for (const auto* opt : sub->get_options()) {
      if (opt->get_name() == "--help") continue;
      flags += " " + (opt->get_lnames().empty() ? opt->get_name() : "--" + opt->get_lnames().front());
    }
    flags += " --help\n";
  }
  flags += "Environment: SCATTOMO_THREADS caps worker threads (0 or unset = all cores).\n"
           "Exit codes: 0 success, 2 configuration/input error, 3 numerical failure.";
  app.footer(flags);

  std::vector<std::string> argv_store{"scattomo"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : argv_store) argv.push_back(s.data());

  try {
    app.parse(int(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitConfig;
  }
  try {
    if (svd->parsed()) {
      const auto report = svd_report(io::read_complex_csv(o.matrix));
      out << to_json(report).dump() << "\n";
      return kExitOk;
    }
    if (demo->parsed()) {
      auto loaded = load_config(o.config, o.overrides);
      auto& cfg = loaded.cfg;
      if (o.seed) cfg.seed = *o.seed;
      OutputStage stage(o.output);
      const auto sim = harness::simulate(cfg);
      write_forward(stage, cfg, sim);
      const auto sys = harness::born_system(cfg, sim.data);
      io::write_complex_csv(stage.path("born_matrix.csv"), sys.a);
      const auto rec = harness::reconstruct(cfg, sim.data);
      write_inversion(stage, cfg, rec);
      write_projection(stage, run_projection(cfg), "projection", "projection_metrics.json");
      stage.commit();
      err << "demo: rel_l2_error " << rec.metrics.rel_l2_error << ", centroid_offset " << rec.metrics.centroid_offset
          << " m, correlation " << rec.metrics.correlation << "\n";
      return kExitOk;
    }
    if (fields->parsed()) {
      auto loaded = load_config(o.config, o.overrides);
      if (!loaded.doc.contains("fields")) throw ConfigError("config has no 'fields' block");
      OutputStage stage(o.output);
      io::write_complex_csv(stage.path("field.csv"), evaluate_fields(loaded.doc["fields"]));
      stage.write_text("run.json", dump(loaded.doc["fields"]));
      stage.commit();
      return kExitOk;
    }
    auto loaded = load_config(o.config, o.overrides);
    auto& cfg = loaded.cfg;
    if (forward->parsed()) {
      OutputStage stage(o.output);
      write_forward(stage, cfg, harness::simulate(cfg));
      stage.commit();
      return kExitOk;
    }
    if (invert->parsed()) {
      apply_inversion_flags(cfg, o);
      harness::validate(cfg);
      const std::string scatter = o.scatter.value_or((fs::path(o.output) / "scatter.csv").string());
      if (!fs::exists(scatter)) throw ConfigError("scatter matrix not found: '" + scatter + "'");
      harness::ScatterData data;
      data.values = io::read_complex_csv(scatter);
      data.array = cfg.resolved_array();
      data.frequency = cfg.frequency;
      OutputStage stage(o.output);
      write_inversion(stage, cfg, harness::reconstruct(cfg, data));
      stage.commit();
      return kExitOk;
    }
    if (project->parsed()) {
      OutputStage stage(o.output);
      write_projection(stage, run_projection(cfg), "recon", "metrics.json");
      stage.commit();
      return kExitOk;
    }
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << "\n";
    return kExitNumerical;
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const io::FormatError& e) {
    err << "input error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::domain_error& e) {
    err << "invalid input: " << e.what() << "\n";
    return kExitConfig;
  } catch (const fs::filesystem_error& e) {
    err << "file error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "failure: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitConfig;
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace scattomo::cli
