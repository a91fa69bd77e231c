#ifndef MANIREG_FORWARD_OPS_HPP
#define MANIREG_FORWARD_OPS_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <random>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "manireg/error.hpp"
#include "manireg/fast_marching.hpp"
#include "manireg/geometry.hpp"
#include "manireg/parallel.hpp"

namespace manireg {

/// Linear map between coefficient vectors with its adjoint.
class ForwardOperator {
public:
  virtual ~ForwardOperator() = default;

  virtual Index input_size() const = 0;
  virtual Index output_size() const = 0;
  virtual Field apply(const Field& u) const = 0;
  virtual Field apply_adjoint(const Field& r) const = 0;
};

class IdentityOperator final : public ForwardOperator {
public:
  explicit IdentityOperator(Index n) : n_(n) {}

  Index input_size() const override { return n_; }
  Index output_size() const override { return n_; }

  Field apply(const Field& u) const override {
    detail::require_size("forward_ops", "identity input", n_, u.size());
    return u;
  }

  Field apply_adjoint(const Field& r) const override {
    detail::require_size("forward_ops", "identity adjoint input", n_, r.size());
    return r;
  }

private:
  Index n_;
};

using KernelMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

/// Operator backed by an explicit sparse matrix; the adjoint is the
/// transpose.
class SparseMatrixOperator : public ForwardOperator {
public:
  explicit SparseMatrixOperator(KernelMatrix m) : m_(std::move(m)) { m_.makeCompressed(); }

  Index input_size() const override { return m_.cols(); }
  Index output_size() const override { return m_.rows(); }

  Field apply(const Field& u) const override {
    detail::require_size("forward_ops", "operator input", m_.cols(), u.size());
    return m_ * u;
  }

  Field apply_adjoint(const Field& r) const override {
    detail::require_size("forward_ops", "adjoint input", m_.rows(), r.size());
    return m_.transpose() * r;
  }

  const KernelMatrix& matrix() const { return m_; }

private:
  KernelMatrix m_;
};

struct ConvolutionOptions {
  /// Kernel support in units of tau; entries beyond are dropped.
  double truncation = 4.0;
  /// Keep every entry (full geodesic distance field per row).
  bool dense = false;
  int threads = 1;
};

/// Row-normalized geodesic Gaussian blur
///   H_ik ~ w_k exp(-d(v_i, v_k)^2 / (2 tau^2)),  sum_k H_ik = 1,
/// with lumped vertex areas w_k and fast-marching distances d.
class ConvolutionOperator final : public SparseMatrixOperator {
public:
  ConvolutionOperator(KernelMatrix m, double tau, Index unsplit_corners)
      : SparseMatrixOperator(std::move(m)), tau_(tau), unsplit_corners_(unsplit_corners) {}

  double tau() const { return tau_; }
  /// Obtuse corners handled with edge-only updates while building the
  /// kernel (0 on well-shaped meshes).
  Index unsplit_obtuse_corners() const { return unsplit_corners_; }

private:
  double tau_;
  Index unsplit_corners_;
};

inline ConvolutionOperator build_convolution(const Surface& s, double tau,
                                             const ConvolutionOptions& opt = {}) {
  if (!(tau > 0.0) || !std::isfinite(tau))
    throw Error("forward_ops", "kernel width tau must be positive", "pass --tau > 0");
  const GeodesicSolver solver(s.mesh);
  const double radius =
      opt.dense ? std::numeric_limits<double>::infinity() : opt.truncation * tau;
  const Index K = s.num_vertices();

  std::vector<std::vector<std::pair<Index, double>>> rows(static_cast<std::size_t>(K));
  parallel_for(K, opt.threads, [&](Index i) {
    const Field d = solver.distances(i, radius);
    auto& row = rows[static_cast<std::size_t>(i)];
    double total = 0.0;
    for (Index k = 0; k < K; ++k) {
      if (!(d[k] <= radius)) continue;
      const double w = s.vertex_area[k] * std::exp(-d[k] * d[k] / (2.0 * tau * tau));
      row.emplace_back(k, w);
      total += w;
    }
    for (auto& entry : row) entry.second /= total;
  });

  std::vector<Eigen::Triplet<double>> trip;
  for (Index i = 0; i < K; ++i)
    for (const auto& [k, w] : rows[static_cast<std::size_t>(i)]) trip.emplace_back(i, k, w);
  KernelMatrix h(K, K);
  h.setFromTriplets(trip.begin(), trip.end());
  return ConvolutionOperator(std::move(h), tau, solver.unsplit_obtuse_corners());
}

/// u + N(0, sigma^2) i.i.d. per entry, reproducible from `seed`.
inline Field add_noise(const Field& u, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw Error("forward_ops", "noise level sigma must be >= 0");
  if (sigma == 0.0) return u;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, sigma);
  Field out = u;
  for (Index k = 0; k < out.size(); ++k) out[k] += normal(rng);
  return out;
}

/// Binary sparse triplet dump: int64 rows, int64 cols, int64 nnz, then nnz
/// records of (int64 row, int64 col, float64 value), native byte order.
inline void write_kernel_triplets(const std::filesystem::path& path, const KernelMatrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("forward_ops", "cannot write " + path.string());
  auto put = [&](auto v) { out.write(reinterpret_cast<const char*>(&v), sizeof(v)); };
  put(static_cast<std::int64_t>(m.rows()));
  put(static_cast<std::int64_t>(m.cols()));
  put(static_cast<std::int64_t>(m.nonZeros()));
  for (Index i = 0; i < m.outerSize(); ++i)
    for (KernelMatrix::InnerIterator it(m, i); it; ++it) {
      put(static_cast<std::int64_t>(it.row()));
      put(static_cast<std::int64_t>(it.col()));
      put(static_cast<double>(it.value()));
    }
}

inline KernelMatrix read_kernel_triplets(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("forward_ops", "cannot open " + path.string());
  auto get = [&](auto& v) {
    if (!in.read(reinterpret_cast<char*>(&v), sizeof(v)))
      throw Error("forward_ops", "truncated kernel file " + path.string());
  };
  std::int64_t rows = 0, cols = 0, nnz = 0;
  get(rows);
  get(cols);
  get(nnz);
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(nnz));
  for (std::int64_t e = 0; e < nnz; ++e) {
    std::int64_t i = 0, k = 0;
    double v = 0.0;
    get(i);
    get(k);
    get(v);
    trip.emplace_back(i, k, v);
  }
  KernelMatrix m(rows, cols);
  m.setFromTriplets(trip.begin(), trip.end());
  return m;
}

} // namespace manireg

#endif
