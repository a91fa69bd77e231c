#include <cmath>
#include <memory>

#include <Eigen/SparseCholesky>
#include <gtest/gtest.h>

#include "manireg/discrete_ops.hpp"
#include "manireg/error.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/shapes.hpp"
#include "manireg/solver.hpp"
#include "oracles.hpp"

using namespace manireg;

namespace {

std::shared_ptr<const ForwardOperator> identity(const Surface& s) {
  return std::make_shared<IdentityOperator>(s.num_vertices());
}

/// Minimizer of the p = 2 functional from the assembled normal equations
///   (F^T W F + alpha Z^T A~ Z) u = F^T W y,  W = diag(2 * barycentric area).
Field direct_quadratic_minimizer(const TriangleMesh& mesh, const oracle::SpMat& F, const Field& y,
                                 double alpha) {
  const oracle::SpMat Z = oracle::gradient_matrix(mesh), At = oracle::gradient_weights(mesh);
  const Field w = 2.0 * oracle::barycentric_areas(mesh);
  const oracle::SpMat W = oracle::SpMat(w.asDiagonal());
  const oracle::SpMat H = oracle::SpMat(F.transpose()) * W * F + alpha * (oracle::SpMat(Z.transpose()) * At * Z);
  Eigen::SimplicialLDLT<oracle::SpMat> ldlt(H);
  return ldlt.solve(Field(F.transpose() * (W * y)));
}

void expect_non_increasing(const SolveReport& rep) {
  for (std::size_t j = 1; j < rep.objective_trace.size(); ++j)
    EXPECT_LE(rep.objective_trace[j].second, rep.objective_trace[j - 1].second) << "at " << rep.objective_trace[j].first;
}

} // namespace

TEST(Landweber, NearIdentityProblemReturnsData) {
  const Surface s(oracle::jittered_sphere(2, 41));
  const Field y = oracle::random_field(s.num_vertices(), 1);
  const TikhonovProblem pb(s, identity(s), y, 1e-12, Regularizer::sobolev());
  const auto res = landweber_minimize(pb);
  const double tol = default_tolerance(y);
  EXPECT_EQ(res.report.termination, Termination::converged);
  EXPECT_LE((res.solution - y).cwiseAbs().maxCoeff(), 10.0 * tol);
}

TEST(Landweber, QuadraticMatchesDirectSolve) {
  const auto mesh = oracle::jittered_sphere(2, 42, 0.1);
  ASSERT_LE(mesh.num_vertices(), 200);
  const Surface s(mesh);
  const Field y = oracle::random_field(s.num_vertices(), 2);
  const auto blur = std::make_shared<ConvolutionOperator>(build_convolution(s, s.mesh.mean_edge_length()));
  const std::pair<std::shared_ptr<const ForwardOperator>, oracle::SpMat> cases[] = {
      {identity(s), oracle::SpMat(Eigen::MatrixXd::Identity(s.num_vertices(), s.num_vertices()).sparseView())},
      {blur, oracle::SpMat(blur->matrix())}};
  for (const auto& [op, F] : cases) {
    const double alpha = 0.05;
    const TikhonovProblem pb(s, op, y, alpha, Regularizer::sobolev());
    SolverConfig cfg;
    cfg.tol = 1e-11;
    cfg.max_iter = 100000;
    const auto res = landweber_minimize(pb, cfg);
    const Field direct = direct_quadratic_minimizer(mesh, F, y, alpha);
    const double best = tikhonov_value(pb, direct);
    EXPECT_LE((tikhonov_value(pb, res.solution) - best) / best, 1e-8);
    EXPECT_GE(tikhonov_value(pb, res.solution), best * (1.0 - 1e-12));
    EXPECT_EQ(res.report.termination, Termination::converged);
    expect_non_increasing(res.report);
  }
}

TEST(Landweber, SobolevTraceIsMonotoneWithoutHalvings) {
  const Surface s(shapes::icosphere(3));
  const Field y = oracle::random_field(s.num_vertices(), 3);
  for (double alpha : {1e-3, 0.1, 10.0}) {
    const TikhonovProblem pb(s, identity(s), y, alpha, Regularizer::sobolev());
    SolverConfig cfg;
    cfg.log_every = 1;
    const auto res = landweber_minimize(pb, cfg);
    expect_non_increasing(res.report);
    EXPECT_TRUE(res.report.step_halvings.empty()) << "alpha " << alpha;
    EXPECT_EQ(res.report.objective_trace.front().first, 0);
    EXPECT_EQ(res.report.objective_trace.back().first, res.report.iterations);
  }
}

TEST(Landweber, TotalVariationNeverEndsAboveStart) {
  const Surface s(oracle::jittered_sphere(2, 43));
  const Field y = oracle::random_field(s.num_vertices(), 4);
  const TikhonovProblem pb(s, identity(s), y, 0.05, Regularizer::total_variation(1e-2));
  const Field u0 = oracle::random_field(s.num_vertices(), 5, -3.0, 3.0);
  SolverConfig cfg;
  cfg.max_iter = 300;
  const auto res = landweber_minimize(pb, cfg, u0);
  EXPECT_LE(tikhonov_value(pb, res.solution), tikhonov_value(pb, u0));
  expect_non_increasing(res.report);
}

TEST(Landweber, OversizedStepIsHalvedAndRecorded) {
  const Surface s(shapes::icosphere(2));
  const Field y = oracle::random_field(s.num_vertices(), 6);
  const TikhonovProblem pb(s, identity(s), y, 0.1, Regularizer::sobolev());
  SolverConfig cfg;
  cfg.kappa = 50.0 * auto_step(pb);
  cfg.log_every = 1;
  const auto res = landweber_minimize(pb, cfg);
  EXPECT_FALSE(res.report.step_halvings.empty());
  EXPECT_LT(res.report.final_kappa, res.report.initial_kappa);
  expect_non_increasing(res.report);
}

TEST(Landweber, BitIdenticalReruns) {
  const Surface s(oracle::jittered_sphere(2, 44));
  const Field y = oracle::random_field(s.num_vertices(), 7);
  const TikhonovProblem pb(s, identity(s), y, 0.02, Regularizer::total_variation(1e-2));
  SolverConfig cfg;
  cfg.max_iter = 200;
  const auto a = landweber_minimize(pb, cfg), b = landweber_minimize(pb, cfg);
  EXPECT_EQ(a.solution, b.solution);
  EXPECT_EQ(a.report.objective_trace, b.report.objective_trace);
}

TEST(Landweber, StopsAtMaxIter) {
  const Surface s(shapes::icosphere(2));
  const Field y = oracle::random_field(s.num_vertices(), 8);
  const TikhonovProblem pb(s, identity(s), y, 1.0, Regularizer::total_variation(1e-3));
  SolverConfig cfg;
  cfg.max_iter = 5;
  const auto res = landweber_minimize(pb, cfg);
  EXPECT_EQ(res.report.iterations, 5);
  EXPECT_EQ(res.report.termination, Termination::max_iter);
}

TEST(Landweber, NonFiniteGradientAborts) {
  const Surface s(shapes::icosphere(1));
  Field y = oracle::random_field(s.num_vertices(), 9);
  y[3] = std::numeric_limits<double>::quiet_NaN();
  const TikhonovProblem pb(s, identity(s), y, 0.1, Regularizer::sobolev());
  SolverConfig cfg;
  cfg.kappa = 0.1;
  try {
    landweber_minimize(pb, cfg, Field(Field::Zero(s.num_vertices())));
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.module(), "solver");
    EXPECT_NE(std::string(e.what()).find("non-finite"), std::string::npos);
  }
}

TEST(Landweber, ConfigValidation) {
  const Surface s(shapes::icosphere(1));
  const TikhonovProblem pb(s, identity(s), Field::Zero(s.num_vertices()), 0.1, Regularizer::sobolev());
  SolverConfig bad;
  bad.kappa = -1.0;
  EXPECT_THROW(landweber_minimize(pb, bad), Error);
  bad = {};
  bad.tol = 0.0;
  EXPECT_THROW(landweber_minimize(pb, bad), Error);
  bad = {};
  bad.max_iter = 0;
  EXPECT_THROW(landweber_minimize(pb, bad), Error);
  EXPECT_THROW(landweber_minimize(pb, {}, Field(Field::Zero(3))), DimensionError);
}

TEST(PowerIteration, KnownSpectrum) {
  const Field diag = (Field(5) << 1.0, 3.0, 0.5, 7.0, 2.0).finished();
  const double lambda =
      estimate_largest_eigenvalue([&](const Field& v) { return Field(diag.cwiseProduct(v)); }, 5, 200);
  EXPECT_NEAR(lambda, 7.0, 1e-10);
}

TEST(AutoStep, IdentityOperatorMatchesLumpedMass) {
  // Unit total area so the lumped mass is O(1 / K).
  const auto ico = shapes::icosphere(3, 1.0 / std::sqrt(4.0 * std::numbers::pi));
  const Surface s(ico);
  const TikhonovProblem pb(s, identity(s), Field::Zero(s.num_vertices()), 1e-14, Regularizer::sobolev());
  const double lambda_f = (2.0 * oracle::barycentric_areas(ico)).maxCoeff();
  EXPECT_NEAR(auto_step(pb), 0.9 * 2.0 / lambda_f, 0.02 * 0.9 * 2.0 / lambda_f);
  const auto bounds = estimate_spectral_bounds(pb);
  EXPECT_LE(bounds.fit, lambda_f * (1 + 1e-12));
}

TEST(AutoStep, DecreasesWithAlpha) {
  const Surface s(oracle::jittered_sphere(2, 45));
  const Field y = Field::Zero(s.num_vertices());
  for (const auto& reg : {Regularizer::sobolev(), Regularizer::total_variation(1e-2)}) {
    double previous = std::numeric_limits<double>::infinity();
    for (double alpha : {1e-3, 1e-2, 1e-1, 1.0}) {
      const double k = auto_step(TikhonovProblem(s, identity(s), y, alpha, reg));
      EXPECT_LT(k, previous);
      previous = k;
    }
  }
}

TEST(AutoStep, RespectsTotalVariationBound) {
  // Large sphere so that the fit Hessian norm exceeds 1.
  for (double radius : {8.0, 20.0}) {
    const Surface s(shapes::icosphere(3, radius));
    const TikhonovProblem probe(s, identity(s), Field::Zero(s.num_vertices()), 1.0, Regularizer::sobolev());
    ASSERT_GE(estimate_spectral_bounds(probe).fit, 1.0);
    for (double eps : {1e-3, 1e-1})
      for (double alpha : {1e-2, 1.0}) {
        const TikhonovProblem pb(s, identity(s), Field::Zero(s.num_vertices()), alpha,
                                 Regularizer::total_variation(eps));
        EXPECT_LT(auto_step(pb), 2.0 / (1.0 + alpha * 8.0 / eps));
      }
  }
}

TEST(Defaults, ToleranceAndInitialGuess) {
  EXPECT_DOUBLE_EQ(default_tolerance((Field(3) << -1.0, 0.5, 3.0).finished()), 4e-6);
  EXPECT_DOUBLE_EQ(default_tolerance(Field::Constant(4, 2.0)), 1e-12);
  const Surface s(shapes::icosphere(1));
  const Field y = oracle::random_field(s.num_vertices(), 10);
  const TikhonovProblem pb(s, identity(s), y, 0.1, Regularizer::sobolev());
  EXPECT_EQ(default_initial_guess(pb), y);
}
