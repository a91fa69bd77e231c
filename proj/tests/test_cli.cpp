#include <cstdlib>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "manireg/metrics_io.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/mesh.hpp"
#include "manireg/sphere.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;

namespace {

struct Outcome {
  int status = -1;
  std::string out, err;
};

class Cli : public ::testing::Test {
protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / (std::string("manireg_cli_") + info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) const { return (dir_ / name).string(); }

  Outcome run(const std::string& args) const {
    const std::string cmd = std::string("\"") + MANIREG_CLI + "\" " + args + " > \"" + path("stdout") +
                            "\" 2> \"" + path("stderr") + "\"";
    Outcome r;
    const int raw = std::system(cmd.c_str());
    r.status = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
    r.out = oracle::read_file(path("stdout"));
    r.err = oracle::read_file(path("stderr"));
    return r;
  }

  /// Clean and noisy two-region fields on a small icosphere.
  void make_mesh_data(const std::string& extra = "--sigma 0.1", int seed = 3) const {
    const Outcome r = run("make-testdata --icosphere 3 --out-mesh " + path("mesh.off") + " --out-field " +
                          path("clean.txt") + " --out-noisy " + path("noisy.txt") + " --seed " +
                          std::to_string(seed) + " " + extra);
    ASSERT_EQ(r.status, 0) << r.err;
  }

  fs::path dir_;
};

} // namespace

TEST_F(Cli, HelpListsSubcommands) {
  const Outcome r = run("--help");
  EXPECT_EQ(r.status, 0);
  for (const char* sub : {"denoise", "deblur", "funk-invert", "make-testdata"})
    EXPECT_NE(r.out.find(sub), std::string::npos) << sub;
}

TEST_F(Cli, MakeTestdataIsReproducible) {
  make_mesh_data();
  const std::string first = oracle::read_file(path("noisy.txt"));
  make_mesh_data();
  EXPECT_EQ(oracle::read_file(path("noisy.txt")), first);
  make_mesh_data("--sigma 0.1", 4);
  EXPECT_NE(oracle::read_file(path("noisy.txt")), first);
  const auto mesh = manireg::load_mesh(path("mesh.off"));
  EXPECT_EQ(mesh.num_vertices(), 642);
  EXPECT_EQ(manireg::read_field(path("clean.txt")).size(), 642);
}

TEST_F(Cli, DenoiseIsDeterministic) {
  make_mesh_data();
  for (const char* p : {"1", "2"}) {
    const std::string base = "denoise --mesh " + path("mesh.off") + " --field " + path("noisy.txt") +
                             " --reference " + path("clean.txt") + " --alpha 0.02 --max-iter 300 --p " + p;
    ASSERT_EQ(run(base + " --out-field " + path("a.txt")).status, 0);
    const Outcome second = run(base + " --out-field " + path("b.txt") + " --out-metrics " + path("m.txt"));
    ASSERT_EQ(second.status, 0) << second.err;
    EXPECT_EQ(oracle::read_file(path("a.txt")), oracle::read_file(path("b.txt")));
    const auto m = manireg::read_metrics(path("m.txt"));
    EXPECT_EQ(m.pipeline, "denoise");
    EXPECT_EQ(m.p, std::stoi(p));
    EXPECT_TRUE(m.snr_input_db && m.snr_output_db);
    EXPECT_LE(m.iterations, 300);
  }
}

TEST_F(Cli, NoiselessDenoiseIsExact) {
  make_mesh_data();
  const Outcome r = run("denoise --mesh " + path("mesh.off") + " --field " + path("clean.txt") +
                    " --sigma 0 --alpha 1e-20 --out-metrics " + path("m.txt"));
  ASSERT_EQ(r.status, 0) << r.err;
  EXPECT_NE(r.out.find("exact"), std::string::npos) << r.out;
  const auto m = manireg::read_metrics(path("m.txt"));
  EXPECT_TRUE(m.snr_output_exact);
  EXPECT_TRUE(std::isinf(*m.snr_output_db));
}

TEST_F(Cli, DeblurWritesKernelAndPly) {
  make_mesh_data("--tau 0.15 --sigma 0.01");
  const Outcome r = run("deblur --mesh " + path("mesh.off") + " --field " + path("noisy.txt") + " --reference " +
                    path("clean.txt") + " --tau 0.15 --alpha 1e-3 --max-iter 200 --out-kernel " +
                    path("kernel.bin") + " --out-ply " + path("out.ply") + " --out-field " + path("u.txt"));
  ASSERT_EQ(r.status, 0) << r.err;
  const auto kernel = manireg::read_kernel_triplets(path("kernel.bin"));
  EXPECT_EQ(kernel.rows(), 642);
  EXPECT_EQ(fs::file_size(path("kernel.bin")), 24 + 24 * static_cast<std::uintmax_t>(kernel.nonZeros()));
  const auto ply = oracle::read_ply(path("out.ply"));
  EXPECT_EQ(ply.positions.size(), 642u);
  EXPECT_EQ(ply.faces.size(), 1280u);
  EXPECT_EQ(manireg::read_field(path("u.txt")).size(), 642);
}

TEST_F(Cli, FunkInvertRoundTrip) {
  const std::string pts = " --num-points 600 --degree 16";
  Outcome r = run("make-testdata --sphere" + pts + " --sigma 0 --out-field " + path("clean.txt") + " --out-noisy " +
              path("funk.txt") + " --out-points " + path("pts.txt"));
  ASSERT_EQ(r.status, 0) << r.err;
  for (const char* solver : {"direct", "landweber"}) {
    r = run("funk-invert --field " + path("funk.txt") + " --reference " + path("clean.txt") + " --points " +
            path("pts.txt") + " --degree 16 --alpha 1e-4 --tol 1e-10 --max-iter 100000 --solver " + solver +
            " --out-metrics " + path("m.txt") + " --out-coeffs " + path("c.csv"));
    ASSERT_EQ(r.status, 0) << r.err;
    const auto m = manireg::read_metrics(path("m.txt"));
    ASSERT_TRUE(m.snr_output_db.has_value());
    EXPECT_GT(*m.snr_output_db, 30.0) << solver;
    EXPECT_EQ(manireg::sphere::read_coefficients(path("c.csv")).size(), 289);
  }
}

TEST_F(Cli, ErrorsExitNonzeroWithDiagnostic) {
  make_mesh_data();
  Outcome r = run("denoise --mesh " + path("missing.off") + " --field " + path("noisy.txt"));
  EXPECT_NE(r.status, 0);
  EXPECT_FALSE(r.err.empty());

  r = run("make-testdata --icosphere 2 --out-field " + path("small.txt"));
  ASSERT_EQ(r.status, 0);
  r = run("denoise --mesh " + path("mesh.off") + " --field " + path("small.txt"));
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("error:"), std::string::npos) << r.err;

  r = run("denoise --mesh " + path("mesh.off") + " --field " + path("noisy.txt") + " --p 3");
  EXPECT_NE(r.status, 0);

  r = run("funk-invert --field " + path("noisy.txt") + " --num-points 642 --degree 6 --alpha 0");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("alpha"), std::string::npos) << r.err;

  r = run("funk-invert --field " + path("noisy.txt") + " --num-points 642 --solver cg");
  EXPECT_NE(r.status, 0);
  EXPECT_NE(r.err.find("--solver"), std::string::npos) << r.err;
}
