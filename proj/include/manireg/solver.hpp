#ifndef MANIREG_SOLVER_HPP
#define MANIREG_SOLVER_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "manireg/discrete_ops.hpp"
#include "manireg/error.hpp"

namespace manireg {

enum class Termination { converged, max_iter };

inline const char* to_string(Termination t) {
  return t == Termination::converged ? "converged" : "max_iter";
}

struct SolverConfig {
  std::optional<double> kappa;  ///< empty: choose with auto_step
  int max_iter = 5000;
  std::optional<double> tol;    ///< empty: 1e-6 * range of the data
  int log_every = 100;
  int max_step_halvings = 60;

  void validate() const {
    if (kappa && !(*kappa > 0.0)) throw Error("solver", "step size kappa must be positive", "pass --kappa > 0 or auto");
    if (tol && !(*tol > 0.0)) throw Error("solver", "tolerance must be positive", "pass --tol > 0");
    if (max_iter < 1) throw Error("solver", "max_iter must be >= 1", "pass --max-iter >= 1");
    if (log_every < 1) throw Error("solver", "log_every must be >= 1");
  }
};

struct SolveReport {
  int iterations = 0;
  double final_update = std::numeric_limits<double>::infinity();
  /// (iteration, objective) every log_every iterations, plus the first and
  /// last iterate.
  std::vector<std::pair<int, double>> objective_trace;
  Termination termination = Termination::max_iter;
  double initial_kappa = 0.0;
  double final_kappa = 0.0;
  /// Iterations at which the step was halved after an objective increase.
  std::vector<int> step_halvings;
};

template <typename Vector>
struct SolveResult {
  Vector solution;
  SolveReport report;
};

/// Largest eigenvalue of a symmetric positive semi-definite operator by
/// power iteration from a fixed pseudo-random start; returns the final
/// Rayleigh quotient.
template <typename Apply>
double estimate_largest_eigenvalue(Apply&& apply, Index n, int iterations = 30,
                                   std::uint64_t seed = 0x5eedULL) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  Field v(n);
  for (Index k = 0; k < n; ++k) v[k] = uni(rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    Field w = apply(v);
    lambda = v.dot(w);
    const double norm = w.norm();
    if (!std::isfinite(norm) || norm == 0.0) break;
    v = w / norm;
  }
  if (!std::isfinite(lambda))
    throw Error("solver", "power iteration produced a non-finite eigenvalue estimate",
                "check the operator and data for NaN/Inf");
  return lambda;
}

/// Generic Landweber (fixed-step gradient) loop
///   u <- u - kappa grad(u)
/// stopping on the first sup-norm update below tol. A step that raises
/// the objective is retried with half the step size.
template <typename Vector, typename Objective, typename Gradient>
SolveResult<Vector> landweber_iterate(Objective&& objective, Gradient&& gradient, Vector u,
                                      double kappa, double tol, const SolverConfig& cfg) {
  SolveResult<Vector> out;
  auto& rep = out.report;
  rep.initial_kappa = kappa;
  double f = objective(u);
  rep.objective_trace.emplace_back(0, f);

  for (int it = 1; it <= cfg.max_iter; ++it) {
    const Vector g = gradient(u);
    if (!g.allFinite())
      throw Error("solver", "non-finite gradient at iteration " + std::to_string(it),
                  "the step size is too large; lower --kappa or use auto");
    Vector next;
    double f_next = 0.0;
    for (int halvings = 0;; ++halvings) {
      next = u - kappa * g;
      f_next = objective(next);
      if (std::isfinite(f_next) && f_next <= f + 4.0 * std::numeric_limits<double>::epsilon() * std::abs(f))
        break;
      if (halvings >= cfg.max_step_halvings)
        throw Error("solver",
                    "objective keeps increasing after " + std::to_string(halvings) +
                        " step halvings at iteration " + std::to_string(it),
                    "lower --kappa or check the operator");
      kappa *= 0.5;
      rep.step_halvings.push_back(it);
    }
    rep.final_update = (next - u).cwiseAbs().maxCoeff();
    u = std::move(next);
    f = f_next;
    rep.iterations = it;
    if (it % cfg.log_every == 0) rep.objective_trace.emplace_back(it, f);
    if (rep.final_update < tol) {
      rep.termination = Termination::converged;
      break;
    }
  }
  if (rep.objective_trace.back().first != rep.iterations)
    rep.objective_trace.emplace_back(rep.iterations, f);
  rep.final_kappa = kappa;
  out.solution = std::move(u);
  return out;
}

/// Estimated largest eigenvalues of the fit-term Hessian and of the
/// quadratic (p = 2) regularizer Hessian.
struct SpectralBounds {
  double fit = 0.0;
  double sobolev = 0.0;
};

inline SpectralBounds estimate_spectral_bounds(const TikhonovProblem& pb, int iterations = 30) {
  const Index n = pb.surface().num_vertices();
  SpectralBounds b;
  b.fit = estimate_largest_eigenvalue([&](const Field& v) { return fit_hessian_apply(pb, v); }, n, iterations);
  b.sobolev = estimate_largest_eigenvalue(
      [&](const Field& v) { return regularizer_gradient(pb.surface(), Regularizer::sobolev(), v); }, n,
      iterations);
  if (!(b.fit > 0.0) || !(b.sobolev > 0.0))
    throw Error("solver", "degenerate spectral estimate (fit " + std::to_string(b.fit) +
                              ", regularizer " + std::to_string(b.sobolev) + ")");
  return b;
}

/// Step size 0.9 * 2 / (Lambda_F + alpha * Lambda_R) from power-iteration
/// estimates. For total variation the regularizer curvature is bounded by
/// max(8, Lambda_R) / epsilon.
inline double auto_step(const TikhonovProblem& pb) {
  const auto b = estimate_spectral_bounds(pb);
  const auto& reg = pb.regularizer();
  const double curvature = reg.p == 2 ? b.sobolev : std::max(8.0, b.sobolev) / reg.epsilon;
  return 0.9 * 2.0 / (b.fit + pb.alpha() * curvature);
}

/// Default start: the data when the operator is square, F^T y otherwise.
inline Field default_initial_guess(const TikhonovProblem& pb) {
  if (pb.op().input_size() == pb.op().output_size()) return pb.data();
  return pb.op().apply_adjoint(pb.data());
}

/// 1e-6 times the data range (1e-12 for constant data).
inline double default_tolerance(const Field& data) {
  const double range = data.size() ? data.maxCoeff() - data.minCoeff() : 0.0;
  return range > 0.0 ? 1e-6 * range : 1e-12;
}

inline SolveResult<Field> landweber_minimize(const TikhonovProblem& pb, const SolverConfig& cfg = {},
                                             std::optional<Field> u0 = std::nullopt) {
  cfg.validate();
  Field start = u0 ? std::move(*u0) : default_initial_guess(pb);
  detail::require_size("solver", "initial guess", pb.surface().num_vertices(), start.size());
  const double kappa = cfg.kappa ? *cfg.kappa : auto_step(pb);
  const double tol = cfg.tol ? *cfg.tol : default_tolerance(pb.data());
  return landweber_iterate(
      [&](const Field& u) { return tikhonov_value(pb, u); },
      [&](const Field& u) { return tikhonov_gradient(pb, u); }, std::move(start), kappa, tol, cfg);
}

} // namespace manireg

#endif
