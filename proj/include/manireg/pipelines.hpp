#ifndef MANIREG_PIPELINES_HPP
#define MANIREG_PIPELINES_HPP

#include <cmath>
#include <memory>
#include <utility>

#include "manireg/discrete_ops.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/geometry.hpp"
#include "manireg/solver.hpp"

namespace manireg::pipelines {

/// Piecewise-constant field: `high` where the direction from the vertex
/// centroid lies above the wavy curve z = 0.2 sin(3 phi), `low` elsewhere.
inline Field two_region_field(const TriangleMesh& mesh, double low = 0.0, double high = 1.0) {
  Point3 centroid = Point3::Zero();
  for (const auto& v : mesh.vertices()) centroid += v;
  centroid /= static_cast<double>(mesh.num_vertices());
  Field u(mesh.num_vertices());
  for (Index k = 0; k < mesh.num_vertices(); ++k) {
    const Point3 d = (mesh.vertex(k) - centroid).normalized();
    u[k] = d.z() > 0.2 * std::sin(3.0 * std::atan2(d.y(), d.x())) ? high : low;
  }
  return u;
}

/// Default total-variation smoothing: 1e-3 of the data range.
inline double default_epsilon(const Field& data) {
  const double range = data.maxCoeff() - data.minCoeff();
  return range > 0.0 ? 1e-3 * range : 1e-3;
}

/// Identity forward operator: minimizes the Tikhonov functional with
/// F = I starting from the data.
inline SolveResult<Field> denoise(const Surface& s, const Field& data, double alpha, Regularizer reg,
                                  const SolverConfig& cfg = {}) {
  const TikhonovProblem pb(s, std::make_shared<IdentityOperator>(s.num_vertices()), data, alpha, reg);
  return landweber_minimize(pb, cfg);
}

/// Deconvolution with a geodesic Gaussian blur operator.
inline SolveResult<Field> deblur(const Surface& s, std::shared_ptr<const ForwardOperator> blur,
                                 const Field& data, double alpha, Regularizer reg,
                                 const SolverConfig& cfg = {}) {
  const TikhonovProblem pb(s, std::move(blur), data, alpha, reg);
  return landweber_minimize(pb, cfg);
}

} // namespace manireg::pipelines

#endif
