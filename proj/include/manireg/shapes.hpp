#ifndef MANIREG_SHAPES_HPP
#define MANIREG_SHAPES_HPP

#include <cmath>
#include <map>
#include <utility>
#include <vector>

#include "manireg/mesh.hpp"

namespace manireg::shapes {

/// Regular tetrahedron inscribed in the unit sphere, outward oriented.
inline TriangleMesh tetrahedron() {
  const double s = 1.0 / std::sqrt(3.0);
  std::vector<Point3> v{{s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};
  std::vector<Triangle> t{{0, 1, 2}, {0, 3, 1}, {0, 2, 3}, {1, 3, 2}};
  return TriangleMesh::create(std::move(v), std::move(t));
}

/// Surface of the unit cube [0,1]^3, two triangles per face.
inline TriangleMesh unit_cube() {
  std::vector<Point3> v;
  for (int i = 0; i < 8; ++i) v.emplace_back(i & 1, (i >> 1) & 1, (i >> 2) & 1);
  std::vector<Triangle> t{
      {0, 2, 1}, {1, 2, 3},  // z = 0
      {4, 5, 6}, {5, 7, 6},  // z = 1
      {0, 1, 4}, {1, 5, 4},  // y = 0
      {2, 6, 3}, {3, 6, 7},  // y = 1
      {0, 4, 2}, {2, 4, 6},  // x = 0
      {1, 3, 5}, {3, 7, 5},  // x = 1
  };
  return TriangleMesh::create(std::move(v), std::move(t));
}

/// Unit icosphere: icosahedron refined `subdivisions` times by edge
/// midpoints projected to the sphere. K = 10*4^n + 2, L = 20*4^n.
inline TriangleMesh icosphere(int subdivisions, double radius = 1.0) {
  const double phi = (1.0 + std::sqrt(5.0)) / 2.0;
  std::vector<Point3> v{{-1, phi, 0}, {1, phi, 0},  {-1, -phi, 0}, {1, -phi, 0},
                        {0, -1, phi}, {0, 1, phi},  {0, -1, -phi}, {0, 1, -phi},
                        {phi, 0, -1}, {phi, 0, 1},  {-phi, 0, -1}, {-phi, 0, 1}};
  for (auto& p : v) p.normalize();
  std::vector<Triangle> t{{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
                          {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
                          {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
                          {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};
  for (int s = 0; s < subdivisions; ++s) {
    std::map<std::pair<Index, Index>, Index> midpoint;
    auto mid = [&](Index a, Index b) {
      const auto key = std::minmax(a, b);
      auto it = midpoint.find(key);
      if (it != midpoint.end()) return it->second;
      v.push_back((v[static_cast<std::size_t>(a)] + v[static_cast<std::size_t>(b)]).normalized());
      const Index id = static_cast<Index>(v.size()) - 1;
      midpoint.emplace(key, id);
      return id;
    };
    std::vector<Triangle> refined;
    refined.reserve(t.size() * 4);
    for (const auto& f : t) {
      const Index ab = mid(f[0], f[1]), bc = mid(f[1], f[2]), ca = mid(f[2], f[0]);
      refined.push_back({f[0], ab, ca});
      refined.push_back({f[1], bc, ab});
      refined.push_back({f[2], ca, bc});
      refined.push_back({ab, bc, ca});
    }
    t = std::move(refined);
  }
  for (auto& p : v) p *= radius;
  return TriangleMesh::create(std::move(v), std::move(t));
}

/// Open planar grid in z = 0 with nx*ny square cells of side `spacing`,
/// each split along alternating diagonals, lower-left corner at `origin`.
inline TriangleMesh planar_grid(int nx, int ny, double spacing = 1.0,
                                const Point3& origin = Point3::Zero()) {
  std::vector<Point3> v;
  for (int j = 0; j <= ny; ++j)
    for (int i = 0; i <= nx; ++i) v.push_back(origin + Point3(i * spacing, j * spacing, 0.0));
  auto id = [nx](int i, int j) { return static_cast<Index>(j * (nx + 1) + i); };
  std::vector<Triangle> t;
  for (int j = 0; j < ny; ++j)
    for (int i = 0; i < nx; ++i) {
      const Index a = id(i, j), b = id(i + 1, j), c = id(i + 1, j + 1), d = id(i, j + 1);
      if ((i + j) % 2 == 0) {
        t.push_back({a, b, c});
        t.push_back({a, c, d});
      } else {
        t.push_back({a, b, d});
        t.push_back({b, c, d});
      }
    }
  return TriangleMesh::create(std::move(v), std::move(t), Topology::open);
}

} // namespace manireg::shapes

#endif
