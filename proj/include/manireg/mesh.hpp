#ifndef MANIREG_MESH_HPP
#define MANIREG_MESH_HPP

#include <algorithm>
#include <array>
#include <cctype>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Geometry>

#include "manireg/error.hpp"

namespace manireg {

using Index = std::int64_t;
using Point3 = Eigen::Vector3d;
using Triangle = std::array<Index, 3>;
/// Coefficients of a piecewise-linear function, one value per vertex (or
/// per sample point on the sphere).
using Field = Eigen::VectorXd;

/// Whether boundary edges are admissible. Loaded meshes are always closed;
/// open patches exist for planar test fixtures.
enum class Topology { closed, open };

enum class MeshFormat { off, obj };

/// Triangles whose area is below this fraction of the squared bounding-box
/// diagonal are rejected.
inline constexpr double kDegenerateAreaFraction = 1e-12;

/// Immutable, validated triangle mesh with vertex/edge connectivity.
///
/// Triangles keep the vertex order given at construction; local slot j of
/// triangle i is the j-th entry of the triple. Orientation consistency is
/// enforced by requiring every directed edge to occur at most once.
class TriangleMesh {
public:
  TriangleMesh() = default;

  static TriangleMesh create(std::vector<Point3> vertices, std::vector<Triangle> triangles,
                             Topology topology = Topology::closed) {
    TriangleMesh m;
    m.vertices_ = std::move(vertices);
    m.triangles_ = std::move(triangles);
    m.topology_ = topology;
    m.validate_and_link();
    return m;
  }

  Index num_vertices() const { return static_cast<Index>(vertices_.size()); }
  Index num_triangles() const { return static_cast<Index>(triangles_.size()); }
  Index num_edges() const { return num_edges_; }
  Topology topology() const { return topology_; }

  const std::vector<Point3>& vertices() const { return vertices_; }
  const std::vector<Triangle>& triangles() const { return triangles_; }
  const Point3& vertex(Index k) const { return vertices_[static_cast<std::size_t>(k)]; }
  const Triangle& triangle(Index i) const { return triangles_[static_cast<std::size_t>(i)]; }

  /// Triangles incident to vertex k, in increasing index order.
  const std::vector<Index>& vertex_triangles(Index k) const {
    return vertex_triangles_[static_cast<std::size_t>(k)];
  }

  /// Vertices sharing an edge with vertex k, sorted.
  const std::vector<Index>& vertex_neighbors(Index k) const {
    return vertex_neighbors_[static_cast<std::size_t>(k)];
  }

  /// Triangle across the edge opposite local corner `corner` of triangle i,
  /// or -1 on a boundary.
  Index adjacent_triangle(Index i, int corner) const {
    return adjacent_[static_cast<std::size_t>(3 * i + corner)];
  }

  /// V - E + F.
  Index euler_characteristic() const { return num_vertices() - num_edges() + num_triangles(); }

  double bounding_box_diagonal() const {
    if (vertices_.empty()) return 0.0;
    Point3 lo = vertices_.front(), hi = vertices_.front();
    for (const auto& v : vertices_) {
      lo = lo.cwiseMin(v);
      hi = hi.cwiseMax(v);
    }
    return (hi - lo).norm();
  }

  double triangle_area(Index i) const {
    const auto& t = triangle(i);
    return 0.5 * (vertex(t[1]) - vertex(t[0])).cross(vertex(t[2]) - vertex(t[0])).norm();
  }

  double mean_edge_length() const {
    double sum = 0.0;
    Index count = 0;
    for (Index k = 0; k < num_vertices(); ++k) {
      for (Index n : vertex_neighbors(k)) {
        if (n > k) {
          sum += (vertex(n) - vertex(k)).norm();
          ++count;
        }
      }
    }
    return count > 0 ? sum / static_cast<double>(count) : 0.0;
  }

  double min_edge_length() const {
    double best = std::numeric_limits<double>::infinity();
    for (Index k = 0; k < num_vertices(); ++k)
      for (Index n : vertex_neighbors(k)) best = std::min(best, (vertex(n) - vertex(k)).norm());
    return best;
  }

private:
  static std::string edge_name(Index a, Index b) {
    return "(" + std::to_string(a) + "," + std::to_string(b) + ")";
  }

  void validate_and_link() {
    const Index K = num_vertices();
    const Index L = num_triangles();
    if (K == 0 || L == 0) throw Error("mesh_core", "mesh has no vertices or no triangles");

    for (Index i = 0; i < L; ++i) {
      const auto& t = triangle(i);
      for (Index v : t) {
        if (v < 0 || v >= K)
          throw Error("mesh_core",
                      "triangle " + std::to_string(i) + " references vertex " + std::to_string(v) +
                          " outside [0," + std::to_string(K) + ")");
      }
      if (t[0] == t[1] || t[1] == t[2] || t[0] == t[2])
        throw Error("mesh_core", "triangle " + std::to_string(i) + " repeats a vertex index");
    }

    const double diag = bounding_box_diagonal();
    const double min_area = kDegenerateAreaFraction * diag * diag;
    for (Index i = 0; i < L; ++i) {
      if (!(triangle_area(i) > min_area))
        throw Error("mesh_core", "degenerate triangle " + std::to_string(i),
                    "remove zero-area faces before loading");
    }

    // Directed edge (a,b) -> (triangle, corner opposite the edge).
    std::map<std::pair<Index, Index>, std::pair<Index, int>> directed;
    for (Index i = 0; i < L; ++i) {
      const auto& t = triangle(i);
      for (int c = 0; c < 3; ++c) {
        const Index a = t[(c + 1) % 3], b = t[(c + 2) % 3];
        auto [it, inserted] = directed.emplace(std::make_pair(a, b), std::make_pair(i, c));
        if (!inserted) {
          // Either a non-manifold edge or a flipped neighbour; tell them apart
          // by counting undirected uses.
          Index uses = 0;
          for (Index j = 0; j < L; ++j)
            for (int d = 0; d < 3; ++d) {
              const Index p = triangle(j)[(d + 1) % 3], q = triangle(j)[(d + 2) % 3];
              if ((p == a && q == b) || (p == b && q == a)) ++uses;
            }
          if (uses > 2)
            throw Error("mesh_core",
                        "non-manifold edge " + edge_name(a, b) + " shared by " +
                            std::to_string(uses) + " triangles");
          throw Error("mesh_core",
                      "inconsistent orientation: directed edge " + edge_name(a, b) +
                          " appears in triangles " + std::to_string(it->second.first) + " and " +
                          std::to_string(i),
                      "reorient faces consistently (counter-clockwise)");
        }
      }
    }

    adjacent_.assign(static_cast<std::size_t>(3 * L), -1);
    num_edges_ = 0;
    for (const auto& [edge, owner] : directed) {
      const auto twin = directed.find({edge.second, edge.first});
      if (twin == directed.end()) {
        if (topology_ == Topology::closed)
          throw Error("mesh_core",
                      "boundary edge " + edge_name(edge.first, edge.second) + " in triangle " +
                          std::to_string(owner.first),
                      "the surface must be closed (every edge shared by exactly 2 triangles)");
        ++num_edges_;
        continue;
      }
      adjacent_[static_cast<std::size_t>(3 * owner.first + owner.second)] = twin->second.first;
      if (edge.first < edge.second) ++num_edges_;
    }

    vertex_triangles_.assign(static_cast<std::size_t>(K), {});
    vertex_neighbors_.assign(static_cast<std::size_t>(K), {});
    for (Index i = 0; i < L; ++i) {
      const auto& t = triangle(i);
      for (int c = 0; c < 3; ++c) {
        vertex_triangles_[static_cast<std::size_t>(t[c])].push_back(i);
        vertex_neighbors_[static_cast<std::size_t>(t[c])].push_back(t[(c + 1) % 3]);
        vertex_neighbors_[static_cast<std::size_t>(t[c])].push_back(t[(c + 2) % 3]);
      }
    }
    for (Index k = 0; k < K; ++k) {
      auto& nb = vertex_neighbors_[static_cast<std::size_t>(k)];
      if (nb.empty())
        throw Error("mesh_core", "vertex " + std::to_string(k) + " is not referenced by any triangle",
                    "strip unreferenced vertices");
      std::sort(nb.begin(), nb.end());
      nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
    }
  }

  std::vector<Point3> vertices_;
  std::vector<Triangle> triangles_;
  Topology topology_ = Topology::closed;
  std::vector<Index> adjacent_;
  std::vector<std::vector<Index>> vertex_triangles_;
  std::vector<std::vector<Index>> vertex_neighbors_;
  Index num_edges_ = 0;
};

namespace detail {

[[noreturn]] inline void parse_fail(const std::string& what, std::size_t line_no) {
  throw Error("mesh_core", "parse error at line " + std::to_string(line_no) + ": " + what,
              "check the file against the declared format");
}

} // namespace detail

/// Reads an ASCII OFF file: "OFF", "K L E", K coordinate lines, L face
/// lines "3 i j k" (0-based).
inline TriangleMesh read_off(std::istream& in, Topology topology = Topology::closed) {
  std::string line;
  std::size_t line_no = 0;
  auto next = [&]() {
    while (true) {
      if (!std::getline(in, line)) return false;
      ++line_no;
      const auto hash = line.find('#');
      if (hash != std::string::npos) line.erase(hash);
      if (line.find_first_not_of(" \t\r") != std::string::npos) return true;
    }
  };
  if (!next()) detail::parse_fail("empty file", line_no);
  std::istringstream header(line);
  std::string magic;
  header >> magic;
  if (magic != "OFF") detail::parse_fail("missing OFF header", line_no);
  long long K = -1, L = -1, E = 0;
  if (!(header >> K)) {
    if (!next()) detail::parse_fail("missing counts line", line_no);
    header = std::istringstream(line);
    header >> K;
  }
  if (!(header >> L >> E) || K < 0 || L < 0) detail::parse_fail("bad counts line", line_no);

  std::vector<Point3> vertices(static_cast<std::size_t>(K));
  for (auto& v : vertices) {
    if (!next()) detail::parse_fail("unexpected end of file in vertex list", line_no);
    std::istringstream ls(line);
    if (!(ls >> v.x() >> v.y() >> v.z())) detail::parse_fail("bad vertex record", line_no);
  }
  std::vector<Triangle> triangles(static_cast<std::size_t>(L));
  for (auto& t : triangles) {
    if (!next()) detail::parse_fail("unexpected end of file in face list", line_no);
    std::istringstream ls(line);
    int n = 0;
    if (!(ls >> n)) detail::parse_fail("bad face record", line_no);
    if (n != 3) detail::parse_fail("only triangular faces are supported", line_no);
    if (!(ls >> t[0] >> t[1] >> t[2])) detail::parse_fail("bad face record", line_no);
  }
  return TriangleMesh::create(std::move(vertices), std::move(triangles), topology);
}

/// Reads "v x y z" and "f a b c" records (1-based, negative indices are
/// relative). Other record types are skipped and reported in `warnings`.
inline TriangleMesh read_obj(std::istream& in, std::vector<std::string>* warnings = nullptr,
                             Topology topology = Topology::closed) {
  std::vector<Point3> vertices;
  std::vector<Triangle> triangles;
  std::map<std::string, std::size_t> skipped;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string tag;
    if (!(ls >> tag)) continue;
    if (tag == "v") {
      Point3 p;
      if (!(ls >> p.x() >> p.y() >> p.z())) detail::parse_fail("bad vertex record", line_no);
      vertices.push_back(p);
    } else if (tag == "f") {
      std::vector<Index> ids;
      std::string tok;
      while (ls >> tok) {
        const auto slash = tok.find('/');
        long long raw = 0;
        try {
          raw = std::stoll(tok.substr(0, slash));
        } catch (const std::exception&) {
          detail::parse_fail("bad face index '" + tok + "'", line_no);
        }
        if (raw == 0) detail::parse_fail("face index 0 is invalid in OBJ", line_no);
        ids.push_back(raw > 0 ? raw - 1 : static_cast<Index>(vertices.size()) + raw);
      }
      if (ids.size() != 3) detail::parse_fail("only triangular faces are supported", line_no);
      triangles.push_back({ids[0], ids[1], ids[2]});
    } else {
      ++skipped[tag];
    }
  }
  if (warnings) {
    for (const auto& [tag, count] : skipped)
      warnings->push_back("ignored " + std::to_string(count) + " OBJ record(s) of type '" + tag +
                          "'");
  }
  return TriangleMesh::create(std::move(vertices), std::move(triangles), topology);
}

inline MeshFormat format_from_path(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  if (ext == ".off") return MeshFormat::off;
  if (ext == ".obj") return MeshFormat::obj;
  throw Error("mesh_core", "cannot infer mesh format from extension '" + ext + "'",
              "use a .off or .obj file");
}

inline TriangleMesh load_mesh(const std::filesystem::path& path, MeshFormat format,
                              std::vector<std::string>* warnings = nullptr) {
  std::ifstream in(path);
  if (!in) throw Error("mesh_core", "cannot open " + path.string(), "check the --mesh path");
  return format == MeshFormat::off ? read_off(in) : read_obj(in, warnings);
}

inline TriangleMesh load_mesh(const std::filesystem::path& path,
                              std::vector<std::string>* warnings = nullptr) {
  return load_mesh(path, format_from_path(path), warnings);
}

inline void write_off(std::ostream& out, const TriangleMesh& mesh) {
  out << "OFF\n" << mesh.num_vertices() << ' ' << mesh.num_triangles() << " 0\n";
  out << std::setprecision(17);
  for (const auto& v : mesh.vertices()) out << v.x() << ' ' << v.y() << ' ' << v.z() << '\n';
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

inline void write_off(const std::filesystem::path& path, const TriangleMesh& mesh) {
  std::ofstream out(path);
  if (!out) throw Error("mesh_core", "cannot write " + path.string());
  write_off(out, mesh);
}

} // namespace manireg

#endif
