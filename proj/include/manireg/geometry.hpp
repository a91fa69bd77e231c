#ifndef MANIREG_GEOMETRY_HPP
#define MANIREG_GEOMETRY_HPP

#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>
#include <Eigen/SparseCore>

#include "manireg/error.hpp"
#include "manireg/mesh.hpp"

namespace manireg {

/// Per-vertex embedded gradients, one column per triangle (3 x L).
using TangentField = Eigen::Matrix3Xd;

/// Constant per-triangle geometric data of the piecewise-linear
/// parametrization x(z1,z2) = v_a + z1 (v_b - v_a) + z2 (v_c - v_a).
struct TriangleGeometry {
  /// Derivatives of the three local hat functions with respect to the
  /// barycentric parameters (z1, z2).
  static Eigen::Matrix<double, 2, 3> jacobian() {
    Eigen::Matrix<double, 2, 3> j;
    j << -1.0, 1.0, 0.0, -1.0, 0.0, 1.0;
    return j;
  }

  double area = 0.0;
  Eigen::Matrix3d vertex_block;  ///< columns are the triangle's vertices in local order
  Eigen::Matrix2d metric;        ///< first fundamental form of the parametrization
  Eigen::Matrix3d grad_map;      ///< local vertex values -> embedded gradient
  Eigen::Vector3d normal;        ///< unit normal, right-handed w.r.t. local order
  Eigen::Matrix<double, 3, 2> dual_frame;  ///< tangents * metric^-1, so grad_map = dual_frame * J

  /// grad_map * local, evaluated on the differences J * local so that
  /// constants map to exactly zero.
  Eigen::Vector3d apply(const Eigen::Vector3d& local) const {
    return dual_frame * Eigen::Vector2d(local[1] - local[0], local[2] - local[0]);
  }

  /// grad_map^T * z.
  Eigen::Vector3d apply_transpose(const Eigen::Vector3d& z) const {
    const Eigen::Vector2d w = dual_frame.transpose() * z;
    return {-w[0] - w[1], w[0], w[1]};
  }
};

/// Builds the per-triangle geometry. Throws on triangles whose metric
/// determinant falls below the degenerate-area threshold.
inline std::vector<TriangleGeometry> assemble_geometry(const TriangleMesh& mesh) {
  const double diag = mesh.bounding_box_diagonal();
  const double min_area = kDegenerateAreaFraction * diag * diag;
  const Eigen::Matrix<double, 2, 3> J = TriangleGeometry::jacobian();

  std::vector<TriangleGeometry> out(static_cast<std::size_t>(mesh.num_triangles()));
  for (Index i = 0; i < mesh.num_triangles(); ++i) {
    const auto& t = mesh.triangle(i);
    auto& g = out[static_cast<std::size_t>(i)];
    for (int c = 0; c < 3; ++c) g.vertex_block.col(c) = mesh.vertex(t[c]);

    const Eigen::Matrix<double, 3, 2> tangents = g.vertex_block * J.transpose();
    const Eigen::Vector3d cross = tangents.col(0).cross(tangents.col(1));
    g.area = 0.5 * cross.norm();
    g.metric = tangents.transpose() * tangents;
    const double det = g.metric.determinant();
    if (!(det > 4.0 * min_area * min_area))
      throw Error("mesh_core", "degenerate triangle " + std::to_string(i) + " (metric determinant " +
                              std::to_string(det) + ")",
                  "remove zero-area faces before loading");
    g.normal = cross / cross.norm();
    g.dual_frame = tangents * g.metric.inverse();
    g.grad_map = g.dual_frame * J;
  }
  return out;
}

/// Mesh together with its assembled geometry. Immutable once built.
struct Surface {
  TriangleMesh mesh;
  std::vector<TriangleGeometry> geometry;
  /// Lumped (barycentric) vertex areas: one third of the incident triangle
  /// areas.
  Field vertex_area;

  explicit Surface(TriangleMesh m) : mesh(std::move(m)), geometry(assemble_geometry(mesh)) {
    vertex_area = Field::Zero(mesh.num_vertices());
    for (Index i = 0; i < mesh.num_triangles(); ++i)
      for (Index k : mesh.triangle(i)) vertex_area[k] += geometry[static_cast<std::size_t>(i)].area / 3.0;
  }

  Index num_vertices() const { return mesh.num_vertices(); }
  Index num_triangles() const { return mesh.num_triangles(); }
  const TriangleGeometry& triangle(Index i) const { return geometry[static_cast<std::size_t>(i)]; }

  Eigen::Vector3d local_values(Index i, const Field& u) const {
    const auto& t = mesh.triangle(i);
    return {u[t[0]], u[t[1]], u[t[2]]};
  }
};

/// Per-triangle embedded gradient of the piecewise-linear field u.
inline TangentField gradient(const Surface& s, const Field& u) {
  detail::require_size("mesh_core", "gradient input", s.num_vertices(), u.size());
  TangentField z(3, s.num_triangles());
  for (Index i = 0; i < s.num_triangles(); ++i) z.col(i) = s.triangle(i).apply(s.local_values(i, u));
  return z;
}

/// Negative transpose of the area-weighted gradient: for every u and X,
///   sum_i 2 A_i <grad(u)_i, X_i> = -sum_k u_k div(X)_k.
inline Field divergence(const Surface& s, const TangentField& x) {
  detail::require_size("mesh_core", "divergence input", s.num_triangles(), x.cols());
  Field out = Field::Zero(s.num_vertices());
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const auto& g = s.triangle(i);
    const Eigen::Vector3d local = -2.0 * g.area * g.apply_transpose(x.col(i));
    const auto& t = s.mesh.triangle(i);
    for (int c = 0; c < 3; ++c) out[t[c]] += local[c];
  }
  return out;
}

/// Row r = 3 i + j selects vertex t_i[j]; the sparse 0/1 matrix mapping
/// vertex values to per-triangle local values.
struct ConnectivitySelector {
  std::vector<Index> rows;
  Index num_vertices = 0;

  explicit ConnectivitySelector(const TriangleMesh& mesh) : num_vertices(mesh.num_vertices()) {
    rows.reserve(static_cast<std::size_t>(3 * mesh.num_triangles()));
    for (const auto& t : mesh.triangles()) rows.insert(rows.end(), t.begin(), t.end());
  }

  Field apply(const Field& u) const {
    detail::require_size("mesh_core", "selector input", num_vertices, u.size());
    Field out(static_cast<Index>(rows.size()));
    for (std::size_t r = 0; r < rows.size(); ++r) out[static_cast<Index>(r)] = u[rows[r]];
    return out;
  }

  Eigen::SparseMatrix<double> matrix() const {
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) trip.emplace_back(static_cast<int>(r), static_cast<int>(rows[r]), 1.0);
    Eigen::SparseMatrix<double> m(static_cast<Index>(rows.size()), num_vertices);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }
};

} // namespace manireg

#endif
