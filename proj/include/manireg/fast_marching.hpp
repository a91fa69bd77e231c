#ifndef MANIREG_FAST_MARCHING_HPP
#define MANIREG_FAST_MARCHING_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <functional>
#include <limits>
#include <numbers>
#include <queue>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "manireg/error.hpp"
#include "manireg/mesh.hpp"

namespace manireg {

namespace detail {

/// Arrival time at corner C of a planar triangle (A, B, C) given times at
/// A and B. Side lengths: ac = |AC|, bc = |BC|, ab = |AB|.
///
/// First tries a point-source front: the virtual source S with |SA| = ta,
/// |SB| = tb on the far side of AB, accepted when segment SC crosses AB.
/// Falls back to a plane-wave front with the same upwind test. Returns
/// +inf when neither front reaches C through the edge AB.
inline double triangle_update(double ac, double bc, double ab, double ta, double tb) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double xc = (ac * ac + ab * ab - bc * bc) / (2.0 * ab);
  const double yc = std::sqrt(std::max(0.0, ac * ac - xc * xc));
  if (!(yc > 0.0)) return inf;
  const double slack = 1e-12 * ab;

  const double xs = (ta * ta - tb * tb + ab * ab) / (2.0 * ab);
  const double ys2 = ta * ta - xs * xs;
  if (ys2 >= 0.0) {
    const double ys = -std::sqrt(ys2);
    const double s = -ys / (yc - ys);
    const double xcross = xs + s * (xc - xs);
    if (xcross >= -slack && xcross <= ab + slack) return std::hypot(xc - xs, yc - ys);
  }

  const double nx = (tb - ta) / ab;
  if (std::abs(nx) <= 1.0) {
    const double ny = std::sqrt(1.0 - nx * nx);
    if (ny > 0.0) {
      const double xhit = xc - nx * yc / ny;
      if (xhit >= -slack && xhit <= ab + slack) return ta + nx * xc + ny * yc;
    }
  }
  return inf;
}

} // namespace detail

/// Fast marching solver for |grad d| = 1 on a triangle mesh.
///
/// Obtuse corners are handled by unfolding neighbouring triangles into the
/// plane of the obtuse triangle until a vertex falls inside the section
/// where both sub-angles are acute; that vertex is linked to the corner by
/// a virtual edge and the corner is updated from the two virtual acute
/// triangles. Corners where no such vertex is found within a bounded
/// number of unfoldings are updated along mesh edges only (Dijkstra
/// accuracy); their count is reported by unsplit_obtuse_corners().
///
/// Holds a reference to the mesh, which must outlive the solver.
class GeodesicSolver {
public:
  static constexpr int kMaxUnfoldings = 16;

  explicit GeodesicSolver(const TriangleMesh& mesh) : mesh_(mesh) {
    const Index L = mesh.num_triangles();
    edge_length_.resize(static_cast<std::size_t>(L));
    split_.resize(static_cast<std::size_t>(L));
    virtual_users_.assign(static_cast<std::size_t>(mesh.num_vertices()), {});
    for (Index i = 0; i < L; ++i) {
      const auto& t = mesh.triangle(i);
      for (int c = 0; c < 3; ++c)
        edge_length_[static_cast<std::size_t>(i)][c] =
            (mesh.vertex(t[(c + 1) % 3]) - mesh.vertex(t[(c + 2) % 3])).norm();
    }
    for (Index i = 0; i < L; ++i)
      for (int c = 0; c < 3; ++c)
        if (is_obtuse(i, c)) {
          auto& s = split_[static_cast<std::size_t>(i)][c];
          s = find_split(i, c);
          if (s.vertex >= 0)
            virtual_users_[static_cast<std::size_t>(s.vertex)].emplace_back(i, c);
          else
            ++unsplit_;
        }
  }

  /// Corners with an obtuse angle for which no virtual edge was found.
  Index unsplit_obtuse_corners() const { return unsplit_; }

  /// Geodesic distance from `source` to every vertex. Vertices farther than
  /// `max_distance` are left at +inf; with the default (unbounded) radius
  /// every vertex must be reached, otherwise the mesh is disconnected and
  /// an error lists the unreached vertices.
  Field distances(Index source,
                  double max_distance = std::numeric_limits<double>::infinity()) const {
    const Index K = mesh_.num_vertices();
    if (source < 0 || source >= K)
      throw Error("forward_ops", "source vertex " + std::to_string(source) + " out of range");
    constexpr double inf = std::numeric_limits<double>::infinity();
    Field dist = Field::Constant(K, inf);
    std::vector<char> alive(static_cast<std::size_t>(K), 0);
    using Entry = std::pair<double, Index>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<>> front;

    dist[source] = 0.0;
    front.emplace(0.0, source);
    auto relax = [&](Index c) {
      if (alive[static_cast<std::size_t>(c)]) return;
      const double t = arrival(c, dist, alive);
      if (t < dist[c]) {
        dist[c] = t;
        front.emplace(t, c);
      }
    };

    while (!front.empty()) {
      const auto [t, v] = front.top();
      front.pop();
      if (alive[static_cast<std::size_t>(v)] || t != dist[v]) continue;
      if (t > max_distance) break;
      alive[static_cast<std::size_t>(v)] = 1;
      for (Index n : mesh_.vertex_neighbors(v)) relax(n);
      for (const auto& [tri, corner] : virtual_users_[static_cast<std::size_t>(v)])
        relax(mesh_.triangle(tri)[corner]);
    }

    std::vector<Index> unreached;
    for (Index k = 0; k < K; ++k)
      if (!alive[static_cast<std::size_t>(k)]) {
        dist[k] = inf;
        unreached.push_back(k);
      }
    if (!unreached.empty() && std::isinf(max_distance)) {
      std::string list;
      for (std::size_t j = 0; j < std::min<std::size_t>(unreached.size(), 10); ++j)
        list += (j ? "," : "") + std::to_string(unreached[j]);
      if (unreached.size() > 10) list += ",...";
      throw Error("forward_ops",
                  "mesh is disconnected: " + std::to_string(unreached.size()) +
                      " vertices unreachable from " + std::to_string(source) + " [" + list + "]",
                  "split the mesh into connected components");
    }
    return dist;
  }

private:
  struct Split {
    Index vertex = -1;
    double to_corner = 0.0;  ///< |C D'| in the unfolded plane
    double to_prev = 0.0;    ///< |A D'|
    double to_next = 0.0;    ///< |B D'|
  };

  double len(Index tri, int corner) const {
    return edge_length_[static_cast<std::size_t>(tri)][corner];
  }

  bool is_obtuse(Index tri, int c) const {
    const double a = len(tri, (c + 2) % 3), b = len(tri, (c + 1) % 3), opp = len(tri, c);
    return opp * opp > a * a + b * b;
  }

  static Eigen::Vector2d place(const Eigen::Vector2d& p, const Eigen::Vector2d& q, double dp,
                               double dq, const Eigen::Vector2d& avoid) {
    const Eigen::Vector2d e = q - p;
    const double d = e.norm();
    const Eigen::Vector2d ex = e / d;
    const Eigen::Vector2d ey(-ex.y(), ex.x());
    const double x = (dp * dp - dq * dq + d * d) / (2.0 * d);
    const double y = std::sqrt(std::max(0.0, dp * dp - x * x));
    const double side = ey.dot(avoid - p) > 0.0 ? -1.0 : 1.0;
    return p + x * ex + side * y * ey;
  }

  Split find_split(Index tri, int c) const {
    const auto& t = mesh_.triangle(tri);
    const double ca = len(tri, (c + 2) % 3), cb = len(tri, (c + 1) % 3), ab = len(tri, c);
    const double cos_theta = (ca * ca + cb * cb - ab * ab) / (2.0 * ca * cb);
    const double theta = std::acos(std::clamp(cos_theta, -1.0, 1.0));
    const double lo = theta - std::numbers::pi / 2.0, hi = std::numbers::pi / 2.0;

    const Eigen::Vector2d posA(ca, 0.0);
    const Eigen::Vector2d posB(cb * std::cos(theta), cb * std::sin(theta));
    Index p = t[(c + 1) % 3], q = t[(c + 2) % 3];
    Eigen::Vector2d pp = posA, pq = posB, avoid = Eigen::Vector2d::Zero();
    Index current = tri;
    int across = c;

    for (int step = 0; step < kMaxUnfoldings; ++step) {
      const Index next = mesh_.adjacent_triangle(current, across);
      if (next < 0) return {};
      const auto& nt = mesh_.triangle(next);
      int xc = 0;
      while (nt[xc] == p || nt[xc] == q) ++xc;
      const Index x = nt[xc];
      const Eigen::Vector2d px = place(pp, pq, (mesh_.vertex(x) - mesh_.vertex(p)).norm(),
                                       (mesh_.vertex(x) - mesh_.vertex(q)).norm(), avoid);
      const double phi = std::atan2(px.y(), px.x());
      if (phi >= lo && phi <= hi) {
        Split s;
        s.vertex = x;
        s.to_corner = px.norm();
        s.to_prev = (px - posA).norm();
        s.to_next = (px - posB).norm();
        return s;
      }
      // Continue across the edge of the new triangle that the section still
      // intersects.
      if (phi < lo) {
        avoid = pp;
        p = x;
        pp = px;
      } else {
        avoid = pq;
        q = x;
        pq = px;
      }
      across = opposite_corner(nt, p, q);
      current = next;
    }
    return {};
  }

  static int index_of(const Triangle& t, Index v) {
    for (int k = 0; k < 3; ++k)
      if (t[k] == v) return k;
    return -1;
  }

  static int opposite_corner(const Triangle& t, Index a, Index b) {
    for (int k = 0; k < 3; ++k)
      if (t[k] != a && t[k] != b) return k;
    return -1;
  }

  double arrival(Index c, const Field& dist, const std::vector<char>& alive) const {
    double best = dist[c];
    auto is_alive = [&](Index v) { return alive[static_cast<std::size_t>(v)] != 0; };
    for (Index tri : mesh_.vertex_triangles(c)) {
      const auto& t = mesh_.triangle(tri);
      const int corner = index_of(t, c);
      const Index a = t[(corner + 1) % 3], b = t[(corner + 2) % 3];
      const double la = len(tri, (corner + 2) % 3), lb = len(tri, (corner + 1) % 3);
      const bool alive_a = is_alive(a), alive_b = is_alive(b);
      if (alive_a) best = std::min(best, dist[a] + la);
      if (alive_b) best = std::min(best, dist[b] + lb);
      if (alive_a && alive_b)
        best = std::min(best, detail::triangle_update(la, lb, len(tri, corner), dist[a], dist[b]));
      const Split& s = split_[static_cast<std::size_t>(tri)][corner];
      if (s.vertex >= 0 && is_alive(s.vertex)) {
        const double td = dist[s.vertex];
        best = std::min(best, td + s.to_corner);
        if (alive_a) best = std::min(best, detail::triangle_update(la, s.to_corner, s.to_prev, dist[a], td));
        if (alive_b) best = std::min(best, detail::triangle_update(s.to_corner, lb, s.to_next, td, dist[b]));
      }
    }
    return best;
  }

  const TriangleMesh& mesh_;
  std::vector<std::array<double, 3>> edge_length_;  ///< indexed by opposite corner
  std::vector<std::array<Split, 3>> split_;
  std::vector<std::vector<std::pair<Index, int>>> virtual_users_;
  Index unsplit_ = 0;
};

/// Geodesic distances from one vertex by fast marching.
inline Field geodesic_distances(const TriangleMesh& mesh, Index source) {
  return GeodesicSolver(mesh).distances(source);
}

/// Shortest paths along mesh edges (Dijkstra). An upper bound for the
/// polyhedral geodesic distance.
inline Field edge_graph_distances(const TriangleMesh& mesh, Index source) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  Field dist = Field::Constant(mesh.num_vertices(), inf);
  using Entry = std::pair<double, Index>;
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> front;
  dist[source] = 0.0;
  front.emplace(0.0, source);
  while (!front.empty()) {
    const auto [t, v] = front.top();
    front.pop();
    if (t != dist[v]) continue;
    for (Index n : mesh.vertex_neighbors(v)) {
      const double cand = t + (mesh.vertex(n) - mesh.vertex(v)).norm();
      if (cand < dist[n]) {
        dist[n] = cand;
        front.emplace(cand, n);
      }
    }
  }
  return dist;
}

} // namespace manireg

#endif
