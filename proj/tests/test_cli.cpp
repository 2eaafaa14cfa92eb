#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "scattomo/harness.hpp"
#include "scattomo/matrix_csv.hpp"

namespace fs = std::filesystem;
using namespace scattomo;
using nlohmann::json;
using linalg::CMatrix;
using linalg::Complex;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::path(SCATTOMO_TEST_TMP) / "cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

Result run_cli(const std::string& args, const fs::path& dir) {
  const auto out = dir / "stdout.txt", err = dir / "stderr.txt";
  const std::string cmd = std::string("\"") + SCATTOMO_CLI_PATH + "\" " + args + " >\"" + out.string() + "\" 2>\"" +
                          err.string() + "\"";
  const int status = std::system(cmd.c_str());
  Result r;
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_config(const fs::path& dir, const json& doc, const std::string& name = "cfg.json") {
  const auto p = dir / name;
  std::ofstream(p) << doc.dump(2);
  return p;
}

// 16 antennas, 8x8 inverse grid: a few milliseconds per run.
json small_config() {
  auto c = harness::default_config();
  c.array.n_antennas = 16;
  c.array.radius = 0.12;
  c.array.tx_indices = {0, 2, 4, 6, 8, 10, 12, 14};
  c.array.receivers_per_tx = 4;
  c.grid_inverse = harness::square_grid(0.08, 8);
  c.grid_forward = harness::square_grid(0.08, 16);
  c.phantom.shapes = {Shape::disk({0.01, 0.0}, 0.02, 1.05)};
  return harness::to_json(c);
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

}  // namespace

TEST(Cli, HelpListsFlags) {
  const auto dir = scratch("help");
  const auto r = run_cli("--help", dir);
  EXPECT_EQ(r.code, 0);
  for (const char* flag : {"forward", "invert", "project", "svd-report", "fields", "demo", "--config", "--output",
                           "--set", "--scatter", "--method", "--beta", "--k", "--discrepancy", "--seed"})
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  EXPECT_EQ(run_cli("invert --help", dir).code, 0);
}

TEST(Cli, UsageErrorsExitTwo) {
  const auto dir = scratch("usage");
  EXPECT_EQ(run_cli("", dir).code, 2);
  EXPECT_EQ(run_cli("frobnicate", dir).code, 2);
  EXPECT_EQ(run_cli("forward -o " + dir.string(), dir).code, 2);
  EXPECT_EQ(run_cli("forward -c " + (dir / "absent.json").string() + " -o " + dir.string(), dir).code, 2);
}

TEST(Cli, MalformedJsonReportsPosition) {
  const auto dir = scratch("malformed");
  const auto cfg = dir / "bad.json";
  std::ofstream(cfg) << "{\n  \"frequency\": 2.45e9,\n  \"seed\": ,\n}\n";
  const auto r = run_cli("forward -c " + cfg.string() + " -o " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("bad.json:3:"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "scatter.csv"));
}

TEST(Cli, SchemaErrorsExitTwo) {
  const auto dir = scratch("schema");
  auto doc = small_config();
  doc["colour"] = "blue";
  auto r = run_cli("forward -c " + write_config(dir, doc).string() + " -o " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("colour"), std::string::npos);
  doc = small_config();
  doc["grid_forward"] = doc["grid_inverse"];
  r = run_cli("forward -c " + write_config(dir, doc).string() + " -o " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  r = run_cli("forward -c " + write_config(dir, small_config()).string() + " -o " + dir.string() +
                  " --set phantom.0.radius=-1",
              dir);
  EXPECT_EQ(r.code, 2);
}

TEST(Cli, ForwardWritesArtifacts) {
  const auto dir = scratch("forward");
  const auto cfg = write_config(dir, small_config());
  const auto r = run_cli("forward -c " + cfg.string() + " -o " + (dir / "out").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto s = io::read_complex_csv((dir / "out" / "scatter.csv").string());
  EXPECT_EQ(s.rows(), 8);
  EXPECT_EQ(s.cols(), 4);
  for (int k : {0, 2, 14}) EXPECT_TRUE(fs::exists(dir / "out" / ("fields_tx" + std::to_string(k) + ".csv")));
  const auto run = read_json(dir / "out" / "run.json");
  EXPECT_EQ(run["seed"], 42);
  EXPECT_FALSE(fs::exists(dir / "out" / ".staging"));
}

TEST(Cli, InvertBadBetaExitsTwo) {
  const auto dir = scratch("badbeta");
  const auto cfg = write_config(dir, small_config());
  ASSERT_EQ(run_cli("forward -c " + cfg.string() + " -o " + dir.string(), dir).code, 0);
  const auto r = run_cli("invert -c " + cfg.string() + " -o " + dir.string() + " --beta -1", dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("beta"), std::string::npos);
  EXPECT_FALSE(fs::exists(dir / "recon.csv"));
  EXPECT_EQ(run_cli("invert -c " + cfg.string() + " -o " + dir.string() + " --method lasso", dir).code, 2);
  EXPECT_EQ(run_cli("invert -c " + cfg.string() + " -o " + dir.string() + " --method tsvd --k 0", dir).code, 2);
}

TEST(Cli, InvertMissingScatterNamesPath) {
  const auto dir = scratch("noscatter");
  const auto cfg = write_config(dir, small_config());
  const auto missing = dir / "nowhere" / "scatter.csv";
  const auto r = run_cli("invert -c " + cfg.string() + " -o " + dir.string() + " --scatter " + missing.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find(missing.string()), std::string::npos) << r.err;
}

TEST(Cli, InvertRejectsWrongShape) {
  const auto dir = scratch("wrongshape");
  const auto cfg = write_config(dir, small_config());
  io::write_complex_csv((dir / "scatter.csv").string(), CMatrix::Ones(3, 5));
  EXPECT_EQ(run_cli("invert -c " + cfg.string() + " -o " + dir.string(), dir).code, 2);
  std::ofstream(dir / "scatter.csv") << "2,2,complex\n1:0,1:0\n1:0\n";
  const auto r = run_cli("invert -c " + cfg.string() + " -o " + dir.string(), dir);
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("line 3"), std::string::npos) << r.err;
}

TEST(Cli, NumericalFailureExitsThreeWithoutPartialOutput) {
  const auto dir = scratch("numerical");
  auto doc = small_config();
  doc["phantom"][0]["eps"] = json::array({1e306, 0.0});
  const auto cfg = write_config(dir, doc);
  const auto r = run_cli("forward -c " + cfg.string() + " -o " + (dir / "out").string(), dir);
  EXPECT_EQ(r.code, 3) << r.err;
  EXPECT_FALSE(fs::exists(dir / "out" / "scatter.csv"));
  EXPECT_FALSE(fs::exists(dir / "out" / "run.json"));
  EXPECT_FALSE(fs::exists(dir / "out" / ".staging"));
}

TEST(Cli, SvdReportIdentityAndRankOne) {
  const auto dir = scratch("svd");
  io::write_complex_csv((dir / "eye.csv").string(), CMatrix::Identity(5, 5));
  auto r = run_cli("svd-report " + (dir / "eye.csv").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json::parse(r.out);
  EXPECT_EQ(j["cond"], 1.0);
  EXPECT_EQ(j["rank"], 5);
  EXPECT_EQ(j["sigma"].size(), 5u);

  CMatrix one = CMatrix::Zero(4, 3);
  one(0, 0) = Complex(1.0, 2.0);
  one(1, 0) = 3.0;
  one(3, 0) = Complex(0.0, -1.0);
  io::write_complex_csv((dir / "one.csv").string(), one);
  r = run_cli("svd-report " + (dir / "one.csv").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  j = json::parse(r.out);
  EXPECT_EQ(j["cond"], "inf");
  EXPECT_EQ(j["rank"], 1);
  EXPECT_NEAR(j["sigma"][0].get<double>(), std::sqrt(15.0), 1e-14);

  EXPECT_EQ(run_cli("svd-report " + (dir / "missing.csv").string(), dir).code, 2);
}

TEST(Cli, FieldsDipoleAxialNull) {
  const auto dir = scratch("fields");
  json doc;
  doc["fields"] = {{"kind", "dipole"},
                   {"beta", 20.0},
                   {"r", {{"min", 0.5}, {"max", 10.0}, {"n", 6}}},
                   {"theta", {{"min", 0.0}, {"max", 3.0}, {"n", 7}}}};
  const auto cfg = write_config(dir, doc);
  ASSERT_EQ(run_cli("fields -c " + cfg.string() + " -o " + dir.string(), dir).code, 0);
  const auto f = io::read_complex_csv((dir / "field.csv").string());
  ASSERT_EQ(f.rows(), 6);
  ASSERT_EQ(f.cols(), 7);
  for (Eigen::Index i = 0; i < f.rows(); ++i) {
    EXPECT_LT(std::abs(f(i, 0)), 1e-12 * f.row(i).cwiseAbs().maxCoeff());
    EXPECT_GT(std::abs(f(i, 3)), 0.0);
  }
  doc["fields"]["kind"] = "monopole";
  EXPECT_EQ(run_cli("fields -c " + write_config(dir, doc).string() + " -o " + dir.string(), dir).code, 2);
  EXPECT_EQ(run_cli("fields -c " + write_config(dir, small_config()).string() + " -o " + dir.string(), dir).code, 2);
}

TEST(Cli, ProjectDiskWithinTenPercent) {
  const auto dir = scratch("project");
  auto c = harness::default_config();
  c.phantom.shapes = {Shape::disk({0.0, 0.0}, 0.03, 1.02)};
  c.projection.n_angles = 180;
  c.projection.n_samples = 256;
  const auto cfg = write_config(dir, harness::to_json(c));
  ASSERT_EQ(run_cli("project -c " + cfg.string() + " -o " + dir.string(), dir).code, 0);
  const auto m = read_json(dir / "metrics.json");
  EXPECT_LT(m["rel_l2_error"].get<double>(), 0.10);
  EXPECT_EQ(m["n_angles"], 180);
  const auto sino = io::read_complex_csv((dir / "recon_sinogram.csv").string());
  EXPECT_EQ(sino.rows(), 180);
  EXPECT_EQ(sino.cols(), 256);
  EXPECT_TRUE(fs::exists(dir / "recon.pgm"));
}

TEST(Cli, ForwardInvertRoundTrip) {
  const auto dir = scratch("roundtrip");
  const auto cfg = write_config(dir, harness::to_json(harness::default_config()));
  ASSERT_EQ(run_cli("forward -c " + cfg.string() + " -o " + dir.string(), dir).code, 0);
  const auto r = run_cli("invert -c " + cfg.string() + " -o " + dir.string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto m = read_json(dir / "metrics.json");
  EXPECT_LT(m["rel_l2_error"].get<double>(), 0.5);
  EXPECT_LT(m["centroid_offset"].get<double>(), 0.2 / 32);
  EXPECT_GT(m["beta"].get<double>(), 0.0);
  const auto rec = io::read_complex_csv((dir / "recon.csv").string());
  EXPECT_EQ(rec.rows(), 32);
  EXPECT_EQ(rec.cols(), 32);
  EXPECT_EQ(slurp(dir / "recon.pgm").substr(0, 9), "P2\n32 32\n");
}

TEST(Cli, DemoIsDeterministic) {
  const auto dir = scratch("demo");
  const auto a = dir / "a", b = dir / "b";
  ASSERT_EQ(run_cli("demo -o " + a.string(), dir).code, 0);
  ASSERT_EQ(run_cli("demo -o " + b.string(), dir).code, 0);
  int files = 0;
  for (const auto& e : fs::directory_iterator(a)) {
    ++files;
    const auto other = b / e.path().filename();
    ASSERT_TRUE(fs::exists(other)) << other;
    EXPECT_EQ(slurp(e.path()), slurp(other)) << e.path().filename();
  }
  for (const char* name : {"scatter.csv", "born_matrix.csv", "recon.csv", "recon.pgm", "metrics.json", "run.json",
                           "projection.csv", "projection_metrics.json"})
    EXPECT_TRUE(fs::exists(a / name)) << name;
  EXPECT_GT(files, 8);
  EXPECT_LT(read_json(a / "metrics.json")["rel_l2_error"].get<double>(), 0.5);
  EXPECT_LT(read_json(a / "projection_metrics.json")["rel_l2_error"].get<double>(), 0.10);

  // The realified Born matrix has a singular spectrum that falls off steeply.
  const auto r = run_cli("svd-report " + (a / "born_matrix.csv").string(), dir);
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const auto sigma = j["sigma"].get<std::vector<double>>();
  const long rank = j["rank"].get<long>();
  ASSERT_GT(rank, 10);
  for (long i = 1; i < rank; ++i) EXPECT_LE(sigma[std::size_t(i)], sigma[std::size_t(i - 1)]) << i;
  EXPECT_GT(sigma[0] / sigma[std::size_t(rank - 1)], 1e3);
}
