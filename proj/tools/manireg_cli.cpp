// Command-line front end: denoise, deblur, funk-invert, make-testdata.

#include <chrono>
#include <cstdint>
#include <iostream>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "manireg/discrete_ops.hpp"
#include "manireg/error.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/geometry.hpp"
#include "manireg/mesh.hpp"
#include "manireg/metrics_io.hpp"
#include "manireg/pipelines.hpp"
#include "manireg/shapes.hpp"
#include "manireg/solver.hpp"
#include "manireg/sphere.hpp"

namespace {

using namespace manireg;
using Clock = std::chrono::steady_clock;

struct CommonOptions {
  std::string field;
  std::string reference;
  std::optional<double> sigma;
  std::uint64_t seed = 1;
  double alpha = 0.05;
  int p = 2;
  std::optional<double> epsilon;
  int max_iter = 5000;
  std::optional<double> tol;
  std::string kappa = "auto";
  std::string out_field;
  std::string out_ply;
  std::string out_metrics;
  std::string colormap = "coolwarm";
  int threads = 1;
};

struct MeshOptions {
  std::string mesh;
  bool snr_unweighted = false;
  std::optional<double> tau;
  std::string out_kernel;
};

struct FunkOptions {
  std::string points;
  Index num_points = 900;
  int degree = 26;
  std::string solver = "direct";
  std::string out_coeffs;
};

struct TestdataOptions {
  std::string mesh;
  std::optional<int> icosphere;
  std::string out_mesh;
  bool sphere = false;
  std::string points;
  Index num_points = 900;
  int degree = 26;
  std::string out_points;
  double sigma = 0.1;
  std::uint64_t seed = 1;
  std::optional<double> tau;
  double low = 0.0;
  double high = 1.0;
  std::string out_field;
  std::string out_noisy;
  int threads = 1;
};

void warn(const std::string& msg) { std::cerr << "warning: " << msg << '\n'; }

SolverConfig solver_config(const CommonOptions& o) {
  SolverConfig cfg;
  cfg.max_iter = o.max_iter;
  cfg.tol = o.tol;
  if (o.kappa != "auto") {
    try {
      cfg.kappa = parse_double(o.kappa);
    } catch (const Error&) {
      throw Error("solver", "--kappa must be a number or 'auto', got '" + o.kappa + "'");
    }
  }
  cfg.validate();
  return cfg;
}

Surface load_surface(const std::string& path) {
  std::vector<std::string> warnings;
  TriangleMesh mesh = load_mesh(path, &warnings);
  for (const auto& w : warnings) warn(w);
  return Surface(std::move(mesh));
}

void fill_solve_metrics(RunMetrics& m, const SolveReport& rep) {
  m.kappa = rep.final_kappa;
  m.iterations = rep.iterations;
  m.final_update = rep.final_update;
  m.step_halvings = static_cast<int>(rep.step_halvings.size());
  m.termination = to_string(rep.termination);
  if (!rep.step_halvings.empty())
    warn("step size halved " + std::to_string(rep.step_halvings.size()) +
         " times after objective increases");
  if (rep.termination == Termination::max_iter)
    warn("stopped at --max-iter " + std::to_string(rep.iterations) + " before reaching the tolerance");
}

void print_summary(const RunMetrics& m) {
  std::cout << m.pipeline << ": " << m.iterations << " iterations, " << m.termination;
  if (m.snr_input_db) std::cout << ", SNR in " << format_double(*m.snr_input_db) << " dB";
  if (m.snr_output_exact)
    std::cout << ", SNR out exact";
  else if (m.snr_output_db)
    std::cout << ", SNR out " << format_double(*m.snr_output_db) << " dB";
  std::cout << '\n';
}

// Shared body of denoise and deblur. With --sigma the field is taken as the
// clean signal and data are synthesized from it (blur for deblur, then
// noise); otherwise the field is the observed data.
int run_mesh_pipeline(const std::string& name, const CommonOptions& o, const MeshOptions& mo) {
  const auto start = Clock::now();
  const SolverConfig cfg = solver_config(o);
  const Colormap cmap = parse_colormap(o.colormap);
  const Surface s = load_surface(mo.mesh);
  const Field field = read_field(o.field);
  detail::require_size("metrics_io", "--field values", s.num_vertices(), field.size());

  std::shared_ptr<const ForwardOperator> op;
  if (name == "deblur") {
    const double tau = mo.tau ? *mo.tau : 2.0 * s.mesh.mean_edge_length();
    ConvolutionOptions copt;
    copt.threads = o.threads;
    auto blur = std::make_shared<ConvolutionOperator>(build_convolution(s, tau, copt));
    if (blur->unsplit_obtuse_corners() > 0)
      warn(std::to_string(blur->unsplit_obtuse_corners()) +
           " obtuse corners fell back to edge-only distance updates; geodesics there are less accurate");
    if (!mo.out_kernel.empty()) write_kernel_triplets(mo.out_kernel, blur->matrix());
    op = blur;
  } else {
    op = std::make_shared<IdentityOperator>(s.num_vertices());
  }

  Field data = field;
  std::optional<Field> reference;
  if (o.sigma) {
    data = add_noise(op->apply(field), *o.sigma, o.seed);
    reference = field;
  }
  if (!o.reference.empty()) {
    reference = read_field(o.reference);
    detail::require_size("metrics_io", "--reference values", s.num_vertices(), reference->size());
  }

  const Regularizer reg{o.p, o.p == 1 ? (o.epsilon ? *o.epsilon : pipelines::default_epsilon(data)) : 0.0};
  const auto result = name == "deblur" ? pipelines::deblur(s, op, data, o.alpha, reg, cfg)
                                       : pipelines::denoise(s, data, o.alpha, reg, cfg);

  RunMetrics m;
  m.pipeline = name;
  m.alpha = o.alpha;
  m.p = reg.p;
  m.epsilon = reg.epsilon;
  fill_solve_metrics(m, result.report);
  if (reference) {
    const Field weights = mo.snr_unweighted ? Field() : s.vertex_area;
    m.snr_input_db = snr(*reference, data, weights).db;
    const Snr out = snr(*reference, result.solution, weights);
    m.snr_output_exact = out.exact;
    m.snr_output_db = out.db;
  }
  if (!o.out_field.empty()) write_field(o.out_field, result.solution);
  if (!o.out_ply.empty()) export_colored_mesh(s.mesh, result.solution, o.out_ply, cmap);
  m.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (!o.out_metrics.empty()) write_metrics(o.out_metrics, m);
  print_summary(m);
  return 0;
}

sphere::SpherePointSet point_set(const std::string& path, Index n) {
  if (!path.empty()) return sphere::load_points(path);
  if (n < 1) throw Error("sphere_funk", "--num-points must be >= 1");
  return sphere::fibonacci_points(n);
}

int run_funk(const CommonOptions& o, const FunkOptions& fo) {
  const auto start = Clock::now();
  const Colormap cmap = parse_colormap(o.colormap);
  if (fo.solver != "direct" && fo.solver != "landweber")
    throw Error("solver", "unknown --solver '" + fo.solver + "'", "use direct or landweber");
  const sphere::ShBasis basis(fo.degree, point_set(fo.points, fo.num_points), o.threads);
  if (basis.underdetermined())
    warn(std::to_string(basis.num_points()) + " points for " + std::to_string(basis.size()) +
         " basis functions: the Funk data do not determine every coefficient");
  const Field y = read_field(o.field);
  detail::require_size("metrics_io", "--field samples", basis.num_points(), y.size());

  RunMetrics m;
  m.pipeline = "funk-invert";
  m.alpha = o.alpha;
  m.p = 2;
  Field c;
  if (fo.solver == "direct") {
    c = sphere::funk_invert_direct(basis, y, o.alpha);
    m.termination = "direct";
  } else {
    const auto result = sphere::funk_invert_landweber(basis, y, o.alpha, solver_config(o));
    c = result.solution;
    fill_solve_metrics(m, result.report);
  }
  const Field u = basis.synthesize(c);
  if (!o.reference.empty()) {
    const Field ref = read_field(o.reference);
    detail::require_size("metrics_io", "--reference samples", basis.num_points(), ref.size());
    const Snr out = snr(ref, u);
    m.snr_output_exact = out.exact;
    m.snr_output_db = out.db;
  }
  if (!o.out_field.empty()) write_field(o.out_field, u);
  if (!fo.out_coeffs.empty()) sphere::write_coefficients(fo.out_coeffs, c);
  if (!o.out_ply.empty()) {
    const TriangleMesh ico = shapes::icosphere(4);
    Field on_mesh(ico.num_vertices());
    std::vector<double> row(static_cast<std::size_t>(basis.size()));
    for (Index k = 0; k < ico.num_vertices(); ++k) {
      sphere::eval_real_sh(fo.degree, ico.vertex(k).normalized(), row.data());
      on_mesh[k] = Eigen::Map<const Field>(row.data(), basis.size()).dot(c);
    }
    export_colored_mesh(ico, on_mesh, o.out_ply, cmap);
  }
  m.runtime_s = std::chrono::duration<double>(Clock::now() - start).count();
  if (!o.out_metrics.empty()) write_metrics(o.out_metrics, m);
  print_summary(m);
  return 0;
}

int run_testdata(const TestdataOptions& t) {
  if (t.sphere) {
    const sphere::SpherePointSet pts = point_set(t.points, t.num_points);
    const sphere::ShBasis basis(t.degree, pts, t.threads);
    const Field clean = sphere::sample(pts, sphere::funk_test_function);
    const Field c = sphere::fit_coefficients(basis, clean);
    const Field funk = basis.synthesize(sphere::funk_forward(basis, c));
    if (!t.out_points.empty()) sphere::write_points(t.out_points, pts);
    if (!t.out_field.empty()) write_field(t.out_field, clean);
    if (!t.out_noisy.empty()) write_field(t.out_noisy, add_noise(funk, t.sigma, t.seed));
    std::cout << "make-testdata: " << pts.size() << " sphere points, degree " << t.degree << '\n';
    return 0;
  }

  if (t.mesh.empty() == !t.icosphere)
    throw Error("metrics_io", "make-testdata needs exactly one of --mesh or --icosphere",
                "pass --mesh FILE, --icosphere N, or --sphere for Funk-Radon data");
  const TriangleMesh mesh = t.icosphere ? shapes::icosphere(*t.icosphere) : load_surface(t.mesh).mesh;
  if (!t.out_mesh.empty()) write_off(t.out_mesh, mesh);
  const Field clean = pipelines::two_region_field(mesh, t.low, t.high);
  Field observed = clean;
  if (t.tau) {
    const Surface s(mesh);
    ConvolutionOptions copt;
    copt.threads = t.threads;
    observed = build_convolution(s, *t.tau, copt).apply(clean);
  }
  if (!t.out_field.empty()) write_field(t.out_field, clean);
  if (!t.out_noisy.empty()) write_field(t.out_noisy, add_noise(observed, t.sigma, t.seed));
  std::cout << "make-testdata: " << mesh.num_vertices() << " vertices, " << mesh.num_triangles()
            << " triangles\n";
  return 0;
}

void add_common(CLI::App* app, CommonOptions& o, bool solver_flags = true) {
  app->add_option("--field", o.field, "Input field file (one value per line or index,value)")->required();
  app->add_option("--reference", o.reference, "Ground-truth field for SNR reporting");
  app->add_option("--alpha", o.alpha, "Regularization weight (roughly proportional to the noise level)")
      ->capture_default_str();
  if (solver_flags) {
    app->add_option("--max-iter", o.max_iter, "Landweber iteration cap")->capture_default_str();
    app->add_option("--tol", o.tol, "Stop when the sup-norm update falls below this [1e-6 * data range]");
    app->add_option("--kappa", o.kappa, "Step size, or 'auto' for a power-iteration bound")
        ->capture_default_str();
  }
  app->add_option("--out-field", o.out_field, "Write the reconstruction here");
  app->add_option("--out-ply", o.out_ply, "Write a vertex-colored PLY of the reconstruction");
  app->add_option("--out-metrics", o.out_metrics, "Write run metrics (key = value lines)");
  app->add_option("--colormap", o.colormap, "PLY colormap: coolwarm or grayscale")->capture_default_str();
  app->add_option("--threads", o.threads, "Worker threads (1 gives bit-reproducible output)")
      ->capture_default_str()
      ->check(CLI::PositiveNumber);
}

void add_mesh_flags(CLI::App* app, CommonOptions& o, MeshOptions& mo) {
  app->add_option("--mesh", mo.mesh, "Closed triangle mesh (.off or .obj)")->required()->check(CLI::ExistingFile);
  app->add_option("--sigma", o.sigma,
                  "Treat --field as clean: synthesize data with N(0, sigma^2) noise and use it as reference");
  app->add_option("--seed", o.seed, "Noise seed")->capture_default_str();
  app->add_option("--p", o.p, "Regularizer exponent: 1 total variation, 2 Sobolev")
      ->capture_default_str()
      ->check(CLI::IsMember({1, 2}));
  app->add_option("--epsilon", o.epsilon, "TV smoothing for --p 1 [1e-3 * data range]");
  app->add_flag("--snr-unweighted", mo.snr_unweighted, "Plain Euclidean norms in the SNR instead of area weights");
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Variational regularization of scalar fields on triangle meshes and the sphere"};
  app.require_subcommand(1);

  CommonOptions denoise_opt, deblur_opt, funk_opt;
  MeshOptions denoise_mesh, deblur_mesh;
  FunkOptions funk;
  TestdataOptions td;

  auto* denoise = app.add_subcommand("denoise", "Denoise a vertex field (identity forward operator)");
  add_common(denoise, denoise_opt);
  add_mesh_flags(denoise, denoise_opt, denoise_mesh);

  auto* deblur = app.add_subcommand("deblur", "Deconvolve a field blurred by a geodesic Gaussian");
  add_common(deblur, deblur_opt);
  add_mesh_flags(deblur, deblur_opt, deblur_mesh);
  deblur->add_option("--tau", deblur_mesh.tau, "Gaussian width in mesh units [2 * mean edge length]");
  deblur->add_option("--out-kernel", deblur_mesh.out_kernel, "Dump the blur matrix as binary triplets");

  auto* funk_cmd = app.add_subcommand("funk-invert", "Invert Funk-Radon samples on the sphere");
  add_common(funk_cmd, funk_opt);
  auto* pts = funk_cmd->add_option("--points", funk.points, "Point file, one 'x y z' per line");
  funk_cmd->add_option("--num-points", funk.num_points, "Fibonacci points when no --points")
      ->capture_default_str()
      ->excludes(pts);
  funk_cmd->add_option("--degree", funk.degree, "Maximal spherical-harmonic degree")->capture_default_str();
  funk_cmd->add_option("--solver", funk.solver, "direct or landweber")->capture_default_str();
  funk_cmd->add_option("--out-coeffs", funk.out_coeffs, "Write coefficients as j,l,m,value CSV");

  auto* testdata = app.add_subcommand("make-testdata", "Write synthetic clean and noisy fields");
  auto* mesh_opt = testdata->add_option("--mesh", td.mesh, "Mesh to sample the two-region field on");
  testdata->add_option("--icosphere", td.icosphere, "Use a unit icosphere with this many subdivisions")
      ->excludes(mesh_opt);
  testdata->add_option("--out-mesh", td.out_mesh, "Write the mesh used (OFF)");
  testdata->add_option("--low", td.low, "Two-region field value below the curve")->capture_default_str();
  testdata->add_option("--high", td.high, "Two-region field value above the curve")->capture_default_str();
  testdata->add_option("--tau", td.tau, "Blur the clean field with this Gaussian width before adding noise");
  testdata->add_flag("--sphere", td.sphere, "Funk-Radon data of cos(3 pi (z - y)) + cos(3 pi x) instead");
  testdata->add_option("--points", td.points, "Point file for --sphere");
  testdata->add_option("--num-points", td.num_points, "Fibonacci points for --sphere")->capture_default_str();
  testdata->add_option("--degree", td.degree, "Basis degree for --sphere")->capture_default_str();
  testdata->add_option("--out-points", td.out_points, "Write the sphere points used");
  testdata->add_option("--sigma", td.sigma, "Noise standard deviation")->capture_default_str();
  testdata->add_option("--seed", td.seed, "Noise seed")->capture_default_str();
  testdata->add_option("--out-field", td.out_field, "Clean field");
  testdata->add_option("--out-noisy", td.out_noisy, "Noisy (blurred, Funk-transformed) observation");
  testdata->add_option("--threads", td.threads, "Worker threads")->capture_default_str()->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*denoise) return run_mesh_pipeline("denoise", denoise_opt, denoise_mesh);
    if (*deblur) return run_mesh_pipeline("deblur", deblur_opt, deblur_mesh);
    if (*funk_cmd) return run_funk(funk_opt, funk);
    return run_testdata(td);
  } catch (const manireg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    if (!e.hint().empty()) std::cerr << "hint: " << e.hint() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
