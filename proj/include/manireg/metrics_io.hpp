#ifndef MANIREG_METRICS_IO_HPP
#define MANIREG_METRICS_IO_HPP

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "manireg/error.hpp"
#include "manireg/mesh.hpp"

namespace manireg {

// ---------------------------------------------------------------------------
// Field files

/// Shortest decimal text that parses back to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), res.ptr);
}

inline double parse_double(const std::string& text) {
  std::string t = text;
  t.erase(0, t.find_first_not_of(" \t\r"));
  t.erase(t.find_last_not_of(" \t\r") + 1);
  if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
  if (t == "-inf") return -std::numeric_limits<double>::infinity();
  if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
  // from_chars keeps subnormals, which stod reports as out of range.
  const char* first = t.data() + (t.size() > 1 && t[0] == '+' && t[1] != '-' ? 1 : 0);
  const char* last = t.data() + t.size();
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (first == last || ptr != last || ec != std::errc())
    throw Error("metrics_io", "not a number: '" + text + "'");
  return v;
}

enum class FieldFormat { plain, csv };

/// Reads one value per line, or "index,value" rows (indices 0..K-1 in
/// order). Blank lines and '#' comments are skipped; an optional
/// non-numeric header row is allowed in CSV.
inline Field read_field(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("metrics_io", "cannot open field file " + path.string(), "check the --field path");
  std::vector<double> values;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto comma = line.find(',');
    try {
      if (comma == std::string::npos) {
        values.push_back(parse_double(line));
      } else {
        const std::string idx = line.substr(0, comma);
        if (values.empty() && idx.find_first_of("0123456789") == std::string::npos) continue;
        if (static_cast<std::size_t>(parse_double(idx)) != values.size())
          throw Error("metrics_io", "CSV indices must run 0..K-1 in order");
        values.push_back(parse_double(line.substr(comma + 1)));
      }
    } catch (const Error& e) {
      throw Error("metrics_io", path.string() + ":" + std::to_string(line_no) + ": " + e.what(),
                  "field files hold one value per line or 'index,value' rows");
    }
    if (!std::isfinite(values.back()))
      throw Error("metrics_io", path.string() + ":" + std::to_string(line_no) + ": non-finite value");
  }
  return Eigen::Map<Field>(values.data(), static_cast<Index>(values.size()));
}

inline void write_field(const std::filesystem::path& path, const Field& u,
                        FieldFormat format = FieldFormat::plain) {
  std::ofstream out(path);
  if (!out) throw Error("metrics_io", "cannot write " + path.string(), "check the output directory");
  if (format == FieldFormat::csv) out << "index,value\n";
  for (Index k = 0; k < u.size(); ++k) {
    if (format == FieldFormat::csv) out << k << ',';
    out << format_double(u[k]) << '\n';
  }
}

// ---------------------------------------------------------------------------
// Signal-to-noise ratio

struct Snr {
  double db = 0.0;
  bool exact = false;  ///< estimate equals the reference up to round-off
};

/// Relative residual at or below which an estimate counts as exact.
inline constexpr double kExactResidual = 1e-15;

/// 20 log10(|u_ref| / |u - u_ref|) with norms weighted by `weights`
/// (typically lumped vertex areas); empty weights give plain Euclidean
/// norms. A residual within round-off of zero reports +inf and `exact`.
inline Snr snr(const Field& reference, const Field& estimate, const Field& weights = Field()) {
  detail::require_size("metrics_io", "estimate", reference.size(), estimate.size());
  if (weights.size() != 0) detail::require_size("metrics_io", "weights", reference.size(), weights.size());
  auto norm2 = [&](const Field& v) {
    return weights.size() ? v.cwiseAbs2().dot(weights) : v.squaredNorm();
  };
  const double ref = norm2(reference);
  if (!(ref > 0.0)) throw Error("metrics_io", "SNR reference has zero norm");
  const double err = norm2(estimate - reference);
  if (err <= kExactResidual * kExactResidual * ref) return {std::numeric_limits<double>::infinity(), true};
  return {10.0 * std::log10(ref / err), false};
}

// ---------------------------------------------------------------------------
// Colored mesh export

enum class Colormap { grayscale, coolwarm };

/// Linear colormaps over t in [0, 1]: grayscale black -> white; coolwarm
/// blue (59,76,192) -> white (221,221,221) -> red (180,4,38), piecewise
/// linear through the midpoint.
inline std::array<unsigned char, 3> map_color(double t, Colormap cmap) {
  t = std::clamp(std::isfinite(t) ? t : 0.5, 0.0, 1.0);
  auto lerp = [](double a, double b, double s) { return static_cast<unsigned char>(std::lround(a + (b - a) * s)); };
  if (cmap == Colormap::grayscale) {
    const auto g = lerp(0, 255, t);
    return {g, g, g};
  }
  if (t < 0.5) return {lerp(59, 221, 2 * t), lerp(76, 221, 2 * t), lerp(192, 221, 2 * t)};
  return {lerp(221, 180, 2 * t - 1), lerp(221, 4, 2 * t - 1), lerp(221, 38, 2 * t - 1)};
}

inline Colormap parse_colormap(const std::string& name) {
  if (name == "grayscale" || name == "gray") return Colormap::grayscale;
  if (name == "coolwarm") return Colormap::coolwarm;
  throw Error("metrics_io", "unknown colormap '" + name + "'", "use grayscale or coolwarm");
}

/// ASCII PLY with per-vertex uchar RGB; colors map [min, max] of the field
/// linearly onto the colormap (a constant field maps to the midpoint).
inline void export_colored_mesh(const TriangleMesh& mesh, const Field& field,
                                const std::filesystem::path& path, Colormap cmap = Colormap::coolwarm) {
  detail::require_size("metrics_io", "field", mesh.num_vertices(), field.size());
  std::ofstream out(path);
  if (!out) throw Error("metrics_io", "cannot write " + path.string(), "check the output directory");
  const double lo = field.minCoeff(), hi = field.maxCoeff();
  out << "ply\nformat ascii 1.0\n"
      << "element vertex " << mesh.num_vertices() << "\n"
      << "property float x\nproperty float y\nproperty float z\n"
      << "property uchar red\nproperty uchar green\nproperty uchar blue\n"
      << "element face " << mesh.num_triangles() << "\n"
      << "property list uchar int vertex_indices\nend_header\n";
  for (Index k = 0; k < mesh.num_vertices(); ++k) {
    const auto& v = mesh.vertex(k);
    const double t = hi > lo ? (field[k] - lo) / (hi - lo) : 0.5;
    const auto rgb = map_color(t, cmap);
    out << format_double(v.x()) << ' ' << format_double(v.y()) << ' ' << format_double(v.z()) << ' '
        << int(rgb[0]) << ' ' << int(rgb[1]) << ' ' << int(rgb[2]) << '\n';
  }
  for (const auto& t : mesh.triangles()) out << "3 " << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
}

// ---------------------------------------------------------------------------
// Run metrics

/// Summary of one pipeline run, stored as flat "key = value" lines.
struct RunMetrics {
  std::string pipeline;
  std::optional<double> snr_input_db;
  std::optional<double> snr_output_db;
  bool snr_output_exact = false;
  double alpha = 0.0;
  int p = 2;
  double epsilon = 0.0;
  double kappa = 0.0;
  int iterations = 0;
  double final_update = 0.0;
  int step_halvings = 0;
  double runtime_s = 0.0;
  std::string termination;

  bool operator==(const RunMetrics&) const = default;
};

inline void write_metrics(std::ostream& out, const RunMetrics& m) {
  out << "pipeline = " << m.pipeline << '\n';
  if (m.snr_input_db) out << "snr_input_db = " << format_double(*m.snr_input_db) << '\n';
  if (m.snr_output_db) out << "snr_output_db = " << format_double(*m.snr_output_db) << '\n';
  out << "snr_output_exact = " << (m.snr_output_exact ? "true" : "false") << '\n'
      << "alpha = " << format_double(m.alpha) << '\n'
      << "p = " << m.p << '\n'
      << "epsilon = " << format_double(m.epsilon) << '\n'
      << "kappa = " << format_double(m.kappa) << '\n'
      << "iterations = " << m.iterations << '\n'
      << "final_update = " << format_double(m.final_update) << '\n'
      << "step_halvings = " << m.step_halvings << '\n'
      << "runtime_s = " << format_double(m.runtime_s) << '\n'
      << "termination = " << m.termination << '\n';
}

inline RunMetrics parse_metrics(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) throw Error("metrics_io", "bad metrics line '" + line + "'");
    kv[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const std::string& key) -> const std::string& {
    const auto it = kv.find(key);
    if (it == kv.end()) throw Error("metrics_io", "metrics file lacks key '" + key + "'");
    return it->second;
  };
  RunMetrics m;
  m.pipeline = get("pipeline");
  if (kv.count("snr_input_db")) m.snr_input_db = parse_double(kv["snr_input_db"]);
  if (kv.count("snr_output_db")) m.snr_output_db = parse_double(kv["snr_output_db"]);
  m.snr_output_exact = get("snr_output_exact") == "true";
  m.alpha = parse_double(get("alpha"));
  m.p = std::stoi(get("p"));
  m.epsilon = parse_double(get("epsilon"));
  m.kappa = parse_double(get("kappa"));
  m.iterations = std::stoi(get("iterations"));
  m.final_update = parse_double(get("final_update"));
  m.step_halvings = std::stoi(get("step_halvings"));
  m.runtime_s = parse_double(get("runtime_s"));
  m.termination = get("termination");
  return m;
}

inline void write_metrics(const std::filesystem::path& path, const RunMetrics& m) {
  std::ofstream out(path);
  if (!out) throw Error("metrics_io", "cannot write " + path.string(), "check the output directory");
  write_metrics(out, m);
}

inline RunMetrics read_metrics(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("metrics_io", "cannot open " + path.string());
  return parse_metrics(in);
}

} // namespace manireg

#endif
