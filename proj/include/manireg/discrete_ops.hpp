#ifndef MANIREG_DISCRETE_OPS_HPP
#define MANIREG_DISCRETE_OPS_HPP

#include <cmath>
#include <memory>
#include <string>
#include <utility>

#include "manireg/error.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/geometry.hpp"

namespace manireg {

/// Gradient-norm penalty (1/p) sum_i 2 A_i |grad u|_i^p for p in {1, 2}.
/// For p = 1 the norm is smoothed to sqrt(|grad u|^2 + epsilon^2).
struct Regularizer {
  int p = 2;
  double epsilon = 0.0;

  static Regularizer sobolev() { return {2, 0.0}; }
  static Regularizer total_variation(double epsilon) { return {1, epsilon}; }

  void validate() const {
    if (p != 1 && p != 2)
      throw Error("discrete_ops", "regularizer exponent p must be 1 or 2, got " + std::to_string(p),
                  "use --p 1 (total variation) or --p 2 (Sobolev)");
    if (p == 1 && !(epsilon > 0.0))
      throw Error("discrete_ops", "total variation needs a smoothing epsilon > 0",
                  "pass --epsilon > 0");
  }
};

/// Discrete Tikhonov functional for data on the vertices of a surface.
/// Keeps a reference to the surface, which must outlive the problem.
class TikhonovProblem {
public:
  TikhonovProblem(const Surface& surface, std::shared_ptr<const ForwardOperator> op, Field data,
                  double alpha, Regularizer reg)
      : surface_(&surface), op_(std::move(op)), data_(std::move(data)), alpha_(alpha), reg_(reg) {
    if (!op_) throw Error("discrete_ops", "missing forward operator");
    if (!(alpha_ > 0.0) || !std::isfinite(alpha_))
      throw Error("discrete_ops", "regularization weight alpha must be positive",
                  "pass --alpha > 0");
    reg_.validate();
    detail::require_size("discrete_ops", "operator input", surface.num_vertices(), op_->input_size());
    detail::require_size("discrete_ops", "operator output", surface.num_vertices(), op_->output_size());
    detail::require_size("discrete_ops", "data", op_->output_size(), data_.size());
  }

  const Surface& surface() const { return *surface_; }
  const ForwardOperator& op() const { return *op_; }
  std::shared_ptr<const ForwardOperator> op_ptr() const { return op_; }
  const Field& data() const { return data_; }
  double alpha() const { return alpha_; }
  const Regularizer& regularizer() const { return reg_; }

private:
  const Surface* surface_;
  std::shared_ptr<const ForwardOperator> op_;
  Field data_;
  double alpha_;
  Regularizer reg_;
};

/// Vertex-lumped fit term (1/6) sum_i 2 A_i sum_{j in t_i} ((F u)_j - y_j)^2.
inline double fit_term(const TikhonovProblem& pb, const Field& u) {
  const auto& s = pb.surface();
  detail::require_size("discrete_ops", "fit_term input", s.num_vertices(), u.size());
  const Field r = pb.op().apply(u) - pb.data();
  double sum = 0.0;
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const Eigen::Vector3d local = s.local_values(i, r);
    sum += 2.0 * s.triangle(i).area * local.squaredNorm();
  }
  return sum / 6.0;
}

namespace detail {

/// (1/3) V~^T A^T A V~ r: each vertex value weighted by (1/3) sum 2 A_i.
inline Field lumped_weighting(const Surface& s, const Field& r) {
  Field out = Field::Zero(s.num_vertices());
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const double w = 2.0 * s.triangle(i).area / 3.0;
    for (Index k : s.mesh.triangle(i)) out[k] += w * r[k];
  }
  return out;
}

} // namespace detail

inline Field fit_gradient(const TikhonovProblem& pb, const Field& u) {
  detail::require_size("discrete_ops", "fit_gradient input", pb.surface().num_vertices(), u.size());
  const Field r = pb.op().apply(u) - pb.data();
  return pb.op().apply_adjoint(detail::lumped_weighting(pb.surface(), r));
}

/// Hessian of the fit term applied to v: F^T W F v.
inline Field fit_hessian_apply(const TikhonovProblem& pb, const Field& v) {
  return pb.op().apply_adjoint(detail::lumped_weighting(pb.surface(), pb.op().apply(v)));
}

inline double regularizer_value(const Surface& s, const Regularizer& reg, const Field& u) {
  reg.validate();
  detail::require_size("discrete_ops", "regularizer input", s.num_vertices(), u.size());
  const double eps2 = reg.epsilon * reg.epsilon;
  double sum = 0.0;
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const auto& g = s.triangle(i);
    const double z2 = g.apply(s.local_values(i, u)).squaredNorm();
    sum += 2.0 * g.area * (reg.p == 2 ? 0.5 * z2 : std::sqrt(z2 + eps2));
  }
  return sum;
}

/// Exact derivative of regularizer_value: per-triangle scatter of
/// 2 A_i w_i grad_map^T grad_map u_local with w_i = 1 (p = 2) or
/// 1 / sqrt(|Z_i|^2 + eps^2) (p = 1). Accumulated in triangle order.
inline Field regularizer_gradient(const Surface& s, const Regularizer& reg, const Field& u) {
  reg.validate();
  detail::require_size("discrete_ops", "regularizer input", s.num_vertices(), u.size());
  const double eps2 = reg.epsilon * reg.epsilon;
  Field out = Field::Zero(s.num_vertices());
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const auto& g = s.triangle(i);
    const Eigen::Vector3d z = g.apply(s.local_values(i, u));
    const double w = reg.p == 2 ? 1.0 : 1.0 / std::sqrt(z.squaredNorm() + eps2);
    const Eigen::Vector3d local = (2.0 * g.area * w) * g.apply_transpose(z);
    const auto& t = s.mesh.triangle(i);
    for (int c = 0; c < 3; ++c) out[t[c]] += local[c];
  }
  return out;
}

inline double tikhonov_value(const TikhonovProblem& pb, const Field& u) {
  return fit_term(pb, u) + pb.alpha() * regularizer_value(pb.surface(), pb.regularizer(), u);
}

inline Field tikhonov_gradient(const TikhonovProblem& pb, const Field& u) {
  return fit_gradient(pb, u) + pb.alpha() * regularizer_gradient(pb.surface(), pb.regularizer(), u);
}

} // namespace manireg

#endif
