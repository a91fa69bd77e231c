#include <cmath>

#include <gtest/gtest.h>

#include "manireg/error.hpp"
#include "manireg/geometry.hpp"
#include "manireg/shapes.hpp"
#include "oracles.hpp"

using namespace manireg;

namespace {

TriangleMesh single_triangle(const Point3& a, const Point3& b, const Point3& c) {
  return TriangleMesh::create({a, b, c}, {{0, 1, 2}}, Topology::open);
}

std::vector<TriangleMesh> fixtures() {
  std::vector<TriangleMesh> out{shapes::tetrahedron(), shapes::unit_cube()};
  for (int n = 2; n <= 4; ++n) out.push_back(shapes::icosphere(n));
  return out;
}

} // namespace

TEST(Geometry, UnitRightTriangle) {
  const Surface s(single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
  const auto& g = s.triangle(0);
  EXPECT_TRUE(g.metric.isApprox(Eigen::Matrix2d::Identity(), 1e-15));
  EXPECT_DOUBLE_EQ(g.area, 0.5);
  EXPECT_DOUBLE_EQ(std::sqrt(g.metric.determinant()), 1.0);
  EXPECT_TRUE(g.normal.isApprox(Eigen::Vector3d::UnitZ()));
}

TEST(Geometry, ScaledRightTriangle) {
  const Surface s(single_triangle({0, 0, 0}, {2, 0, 0}, {0, 2, 0}));
  const auto& g = s.triangle(0);
  Eigen::Matrix2d expected;
  expected << 4, 0, 0, 4;
  EXPECT_TRUE(g.metric.isApprox(expected, 1e-15));
  EXPECT_DOUBLE_EQ(g.area, 2.0);
}

TEST(Geometry, JacobianIsReferenceElement) {
  Eigen::Matrix<double, 2, 3> j;
  j << -1, 1, 0, -1, 0, 1;
  EXPECT_EQ(TriangleGeometry::jacobian(), j);
}

TEST(Geometry, IdentitiesOnAllFixtures) {
  for (const auto& mesh : fixtures()) {
    const Surface s(mesh);
    for (Index i = 0; i < s.num_triangles(); ++i) {
      const auto& g = s.triangle(i);
      EXPECT_NEAR(std::sqrt(g.metric.determinant()), 2.0 * g.area, 1e-10 * 2.0 * g.area);
      EXPECT_NEAR(g.area, oracle::heron_area(mesh, i), 1e-12 * g.area);
      const Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(g.metric);
      EXPECT_GT(eig.eigenvalues().minCoeff(), 0.0);
      EXPECT_EQ(g.metric(0, 1), g.metric(1, 0));
      const Eigen::Vector3d constant = g.grad_map * Eigen::Vector3d::Ones();
      EXPECT_LT(constant.norm(), 1e-12 * g.grad_map.norm());
      for (int c = 0; c < 3; ++c) {
        const Eigen::Vector3d z = g.grad_map.col(c);
        EXPECT_LE(std::abs(z.dot(g.normal)), 1e-10 * z.norm());
        EXPECT_TRUE(z.isApprox(oracle::hat_gradient(mesh, i, c), 1e-10));
      }
    }
  }
}

TEST(Geometry, GradientOfConstantIsExactlyZero) {
  for (const auto& mesh : fixtures()) {
    const Surface s(mesh);
    const TangentField z = gradient(s, Field::Constant(s.num_vertices(), 3.25));
    EXPECT_EQ(z.cwiseAbs().maxCoeff(), 0.0);
  }
}

TEST(Geometry, LinearFunctionOnPlanarMesh) {
  const Surface s(shapes::planar_grid(6, 5, 0.3, Point3(-1.0, 0.5, 0.0)));
  Field ux(s.num_vertices()), uxy(s.num_vertices());
  for (Index k = 0; k < s.num_vertices(); ++k) {
    ux[k] = s.mesh.vertex(k).x();
    uxy[k] = 2.0 * s.mesh.vertex(k).x() - 0.5 * s.mesh.vertex(k).y() + 7.0;
  }
  const TangentField zx = gradient(s, ux), zxy = gradient(s, uxy);
  for (Index i = 0; i < s.num_triangles(); ++i) {
    EXPECT_TRUE(zx.col(i).isApprox(Eigen::Vector3d(1, 0, 0), 1e-10));
    EXPECT_TRUE(zxy.col(i).isApprox(Eigen::Vector3d(2, -0.5, 0), 1e-10));
  }
}

TEST(Geometry, IndicatorOfOneVertexMatchesBarycentricGradients) {
  // On (0,0,0),(1,0,0),(0,1,0) the hat functions are 1-x-y, x, y.
  const Surface s(single_triangle({0, 0, 0}, {1, 0, 0}, {0, 1, 0}));
  const Eigen::Vector3d expected[3] = {{-1, -1, 0}, {1, 0, 0}, {0, 1, 0}};
  for (int c = 0; c < 3; ++c) {
    Field u = Field::Zero(3);
    u[c] = 1.0;
    const Eigen::Vector3d z = gradient(s, u).col(0);
    EXPECT_TRUE(z.isApprox(expected[c], 1e-14)) << z.transpose();
    EXPECT_NEAR(z.norm(), expected[c].norm(), 1e-14);
  }
}

TEST(Geometry, GradientIsLinear) {
  const Surface s(oracle::jittered_sphere(2, 11));
  const Field u = oracle::random_field(s.num_vertices(), 1);
  const Field v = oracle::random_field(s.num_vertices(), 2);
  const TangentField gu = gradient(s, u), gv = gradient(s, v);
  EXPECT_LT((gradient(s, u + v) - (gu + gv)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT((gradient(s, Field(-2.5 * u)) - (-2.5 * gu)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Geometry, DivergenceIsNegativeAdjointOfWeightedGradient) {
  const Surface s(oracle::jittered_sphere(2, 5));
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const Field u = oracle::random_field(s.num_vertices(), 100 + seed);
    // Random tangential field: project random vectors onto each plane.
    TangentField x(3, s.num_triangles());
    const Field raw = oracle::random_field(3 * s.num_triangles(), 200 + seed);
    for (Index i = 0; i < s.num_triangles(); ++i) {
      const Eigen::Vector3d r = raw.segment<3>(3 * i);
      const Eigen::Vector3d n = s.triangle(i).normal;
      x.col(i) = r - r.dot(n) * n;
    }
    const TangentField z = gradient(s, u);
    double lhs = 0.0;
    for (Index i = 0; i < s.num_triangles(); ++i) lhs += 2.0 * s.triangle(i).area * z.col(i).dot(x.col(i));
    const double rhs = -u.dot(divergence(s, x));
    EXPECT_NEAR(lhs, rhs, 1e-12 * std::max(1.0, std::abs(lhs)));
  }
}

TEST(Geometry, DivergenceMatchesAssembledTranspose) {
  const auto mesh = oracle::jittered_sphere(1, 3);
  const Surface s(mesh);
  const oracle::SpMat Z = oracle::gradient_matrix(mesh);
  const oracle::SpMat At = oracle::gradient_weights(mesh);
  const Field xflat = oracle::random_field(3 * s.num_triangles(), 9);
  const TangentField x = Eigen::Map<const TangentField>(xflat.data(), 3, s.num_triangles());
  const Field expected = -(Z.transpose() * (At * xflat));
  EXPECT_LT((divergence(s, x) - expected).cwiseAbs().maxCoeff(), 1e-12 * expected.cwiseAbs().maxCoeff());
}

TEST(Geometry, MatchesGlobalMatrixAssembly) {
  // Global J, V and the selector reproduce the per-triangle tangent frames,
  // metric blocks and gradients.
  const auto mesh = oracle::jittered_sphere(2, 7);
  const Surface s(mesh);
  const oracle::SpMat J = oracle::jacobian_blocks(mesh);
  const oracle::SpMat V = oracle::vertex_blocks(mesh);
  const Eigen::MatrixXd E = Eigen::MatrixXd(V * oracle::SpMat(J.transpose()));
  const oracle::SpMat Z = oracle::gradient_matrix(mesh);
  const Field u = oracle::random_field(s.num_vertices(), 4);
  const Field zu = Z * u;
  const TangentField z = gradient(s, u);
  for (Index i = 0; i < s.num_triangles(); ++i) {
    const Eigen::Matrix<double, 3, 2> e = E.block(3 * i, 2 * i, 3, 2);
    EXPECT_TRUE((e.transpose() * e).isApprox(s.triangle(i).metric, 1e-13));
    EXPECT_TRUE(s.triangle(i).vertex_block.isApprox(Eigen::Matrix3d(V.block(3 * i, 3 * i, 3, 3))));
    EXPECT_TRUE(z.col(i).isApprox(zu.segment<3>(3 * i), 1e-10));
  }
}

TEST(Geometry, ConnectivitySelector) {
  const auto mesh = shapes::icosphere(1);
  const ConnectivitySelector sel(mesh);
  const auto m = sel.matrix();
  EXPECT_EQ(m.rows(), 3 * mesh.num_triangles());
  EXPECT_EQ(m.cols(), mesh.num_vertices());
  const Eigen::SparseMatrix<double, Eigen::RowMajor> rm = m;
  for (Index r = 0; r < rm.rows(); ++r) {
    EXPECT_EQ(rm.row(r).nonZeros(), 1);
    EXPECT_EQ(rm.row(r).sum(), 1.0);
  }
  EXPECT_TRUE(Eigen::MatrixXd(m).isApprox(Eigen::MatrixXd(oracle::selector(mesh))));

  const Surface s(mesh);
  for (int coord = 0; coord < 3; ++coord) {
    Field pos(mesh.num_vertices());
    for (Index k = 0; k < mesh.num_vertices(); ++k) pos[k] = mesh.vertex(k)[coord];
    const Field picked = sel.apply(pos);
    for (Index i = 0; i < mesh.num_triangles(); ++i)
      for (int c = 0; c < 3; ++c) EXPECT_EQ(picked[3 * i + c], s.triangle(i).vertex_block(coord, c));
  }
}

TEST(Geometry, VertexAreasSumToSurfaceArea) {
  const Surface s(shapes::icosphere(4));
  double total = 0.0;
  for (Index i = 0; i < s.num_triangles(); ++i) total += s.triangle(i).area;
  EXPECT_NEAR(s.vertex_area.sum(), total, 1e-12 * total);
  EXPECT_NEAR(total, 4.0 * std::numbers::pi, 0.01 * 4.0 * std::numbers::pi);
  EXPECT_TRUE(s.vertex_area.isApprox(oracle::barycentric_areas(s.mesh), 1e-12));
}

TEST(Geometry, LengthMismatchThrows) {
  const Surface s(shapes::tetrahedron());
  EXPECT_THROW(gradient(s, Field::Zero(5)), DimensionError);
  EXPECT_THROW(divergence(s, TangentField::Zero(3, 2)), DimensionError);
}
