#ifndef MANIREG_SPHERE_HPP
#define MANIREG_SPHERE_HPP

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numbers>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Core>
#include <Eigen/QR>

#include "manireg/error.hpp"
#include "manireg/forward_ops.hpp"
#include "manireg/parallel.hpp"
#include "manireg/solver.hpp"

namespace manireg::sphere {

// Real spherical harmonics are indexed by j = l (l + 1) + m with
// m = -l..l, so degrees 0..L occupy (L + 1)^2 consecutive slots.
inline constexpr int sh_index(int l, int m) { return l * (l + 1) + m; }
inline constexpr int sh_count(int max_degree) { return (max_degree + 1) * (max_degree + 1); }

inline int sh_degree(int j) {
  int l = static_cast<int>(std::sqrt(static_cast<double>(j)));
  while (l * l > j) --l;
  while ((l + 1) * (l + 1) <= j) ++l;
  return l;
}

inline int sh_order(int j) {
  const int l = sh_degree(j);
  return j - l * (l + 1);
}

/// P_l(0) by the recurrence P_l(0) = -P_{l-2}(0) (l - 1) / l.
inline double legendre_at_zero(int l) {
  if (l < 0) throw Error("sphere_funk", "Legendre degree must be >= 0");
  if (l % 2 == 1) return 0.0;
  double p = 1.0;
  for (int k = 2; k <= l; k += 2) p = -p * static_cast<double>(k - 1) / static_cast<double>(k);
  return p;
}

/// Writes all (L+1)^2 orthonormal real spherical harmonics at the unit
/// vector `x` into `out`. No Condon-Shortley phase; m > 0 carries cos(m phi),
/// m < 0 carries sin(|m| phi).
inline void eval_real_sh(int max_degree, const Eigen::Vector3d& x, double* out) {
  const int n = max_degree + 1;
  const double c = std::clamp(x.z(), -1.0, 1.0);
  const double s = std::sqrt(std::max(0.0, 1.0 - c * c));
  const double phi = std::atan2(x.y(), x.x());

  // Normalized associated Legendre values, p[l * n + m].
  std::vector<double> p(static_cast<std::size_t>(n * n), 0.0);
  auto P = [&](int l, int m) -> double& { return p[static_cast<std::size_t>(l * n + m)]; };
  P(0, 0) = std::sqrt(1.0 / (4.0 * std::numbers::pi));
  for (int m = 1; m <= max_degree; ++m)
    P(m, m) = std::sqrt((2.0 * m + 1.0) / (2.0 * m)) * s * P(m - 1, m - 1);
  for (int m = 0; m < max_degree; ++m) P(m + 1, m) = std::sqrt(2.0 * m + 3.0) * c * P(m, m);
  for (int m = 0; m <= max_degree; ++m)
    for (int l = m + 2; l <= max_degree; ++l) {
      const double ll = l, mm = m;
      const double a = std::sqrt((4.0 * ll * ll - 1.0) / (ll * ll - mm * mm));
      const double b = std::sqrt(((ll - 1.0) * (ll - 1.0) - mm * mm) / (4.0 * (ll - 1.0) * (ll - 1.0) - 1.0));
      P(l, m) = a * (c * P(l - 1, m) - b * P(l - 2, m));
    }

  for (int l = 0; l <= max_degree; ++l) {
    out[sh_index(l, 0)] = P(l, 0);
    for (int m = 1; m <= l; ++m) {
      out[sh_index(l, m)] = std::numbers::sqrt2 * P(l, m) * std::cos(m * phi);
      out[sh_index(l, -m)] = std::numbers::sqrt2 * P(l, m) * std::sin(m * phi);
    }
  }
}

inline double real_sh(int l, int m, const Eigen::Vector3d& x) {
  std::vector<double> all(static_cast<std::size_t>(sh_count(l)));
  eval_real_sh(l, x, all.data());
  return all[static_cast<std::size_t>(sh_index(l, m))];
}

/// Unit vectors on S^2.
class SpherePointSet {
public:
  SpherePointSet() = default;

  /// Normalizes every input vector; zero vectors are rejected.
  explicit SpherePointSet(std::vector<Eigen::Vector3d> points) : points_(std::move(points)) {
    for (std::size_t i = 0; i < points_.size(); ++i) {
      const double n = points_[i].norm();
      if (!(n > 0.0) || !std::isfinite(n))
        throw Error("sphere_funk", "point " + std::to_string(i) + " cannot be normalized");
      points_[i] /= n;
    }
  }

  Index size() const { return static_cast<Index>(points_.size()); }
  const Eigen::Vector3d& operator[](Index i) const { return points_[static_cast<std::size_t>(i)]; }
  const std::vector<Eigen::Vector3d>& points() const { return points_; }

private:
  std::vector<Eigen::Vector3d> points_;
};

/// Golden-angle spiral with z_i = 1 - (2 i + 1) / N. A single point is
/// placed at the north pole.
inline SpherePointSet fibonacci_points(Index n) {
  if (n < 1) throw Error("sphere_funk", "need at least one point");
  if (n == 1) return SpherePointSet({Eigen::Vector3d(0, 0, 1)});
  const double golden = std::numbers::pi * (3.0 - std::sqrt(5.0));
  std::vector<Eigen::Vector3d> pts;
  pts.reserve(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const double z = 1.0 - (2.0 * static_cast<double>(i) + 1.0) / static_cast<double>(n);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    const double phi = golden * static_cast<double>(i);
    pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
  }
  return SpherePointSet(std::move(pts));
}

/// Whitespace-separated "x y z" per line; blank lines and '#' comments
/// are skipped.
inline SpherePointSet load_points(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("sphere_funk", "cannot open point file " + path.string(), "check the --points path");
  std::vector<Eigen::Vector3d> pts;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ls(line);
    Eigen::Vector3d p;
    if (!(ls >> p.x() >> p.y() >> p.z()))
      throw Error("sphere_funk", "bad point record at line " + std::to_string(line_no) + " of " + path.string());
    pts.push_back(p);
  }
  if (pts.empty()) throw Error("sphere_funk", "point file " + path.string() + " is empty");
  return SpherePointSet(std::move(pts));
}

inline void write_points(const std::filesystem::path& path, const SpherePointSet& pts) {
  std::ofstream out(path);
  if (!out) throw Error("sphere_funk", "cannot write " + path.string());
  out << std::setprecision(17);
  for (const auto& p : pts.points()) out << p.x() << ' ' << p.y() << ' ' << p.z() << '\n';
}

/// Real spherical-harmonic basis of degree <= max_degree sampled at a
/// point set, together with the diagonal Funk-Radon and Laplace-Beltrami
/// spectra.
class ShBasis {
public:
  ShBasis(int max_degree, SpherePointSet points, int threads = 1)
      : max_degree_(max_degree), points_(std::move(points)) {
    if (max_degree < 0) throw Error("sphere_funk", "degree must be >= 0");
    const Index R = sh_count(max_degree);
    const Index N = points_.size();
    eval_.resize(N, R);
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows(N, R);
    parallel_for(N, threads, [&](Index i) { eval_real_sh(max_degree, points_[i], rows.row(i).data()); });
    eval_ = rows;

    funk_.resize(R);
    lb_.resize(R);
    for (int j = 0; j < R; ++j) {
      const int l = sh_degree(j);
      funk_[j] = 2.0 * std::numbers::pi * legendre_at_zero(l);
      lb_[j] = static_cast<double>(l) * (l + 1);
    }
  }

  int max_degree() const { return max_degree_; }
  Index size() const { return eval_.cols(); }
  Index num_points() const { return eval_.rows(); }
  const SpherePointSet& points() const { return points_; }
  /// N x R matrix of basis values at the points.
  const Eigen::MatrixXd& eval_matrix() const { return eval_; }
  /// Diagonal 2 pi P_l(0) of the Funk-Radon transform.
  const Field& funk_spectrum() const { return funk_; }
  /// Diagonal l (l + 1) of -Laplace-Beltrami.
  const Field& lb_spectrum() const { return lb_; }
  /// Fewer points than basis functions: least squares is underdetermined.
  bool underdetermined() const { return num_points() < size(); }

  Field synthesize(const Field& c) const {
    detail::require_size("sphere_funk", "coefficients", size(), c.size());
    return eval_ * c;
  }

private:
  int max_degree_;
  SpherePointSet points_;
  Eigen::MatrixXd eval_;
  Field funk_;
  Field lb_;
};

/// Least-squares fitter for one basis (column-pivoted QR of B).
class ShFit {
public:
  static constexpr double kMaxCondition = 1e12;

  explicit ShFit(const ShBasis& basis) : qr_(basis.eval_matrix()), n_(basis.num_points()) {
    const auto& r = qr_.matrixQR();
    const Index R = basis.size();
    const double top = std::abs(r(0, 0));
    const double bottom = R <= r.rows() ? std::abs(r(R - 1, R - 1)) : 0.0;
    condition_ = bottom > 0.0 ? top / bottom : std::numeric_limits<double>::infinity();
    if (basis.underdetermined() || !(condition_ <= kMaxCondition))
      throw Error("sphere_funk",
                  "sample matrix is rank deficient (condition estimate " + std::to_string(condition_) +
                      ", " + std::to_string(basis.num_points()) + " points for " +
                      std::to_string(R) + " basis functions)",
                  "use more sample points or a lower --degree");
  }

  double condition_estimate() const { return condition_; }

  Field coefficients(const Field& samples) const {
    detail::require_size("sphere_funk", "samples", n_, samples.size());
    return qr_.solve(samples);
  }

private:
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr_;
  Index n_;
  double condition_ = 0.0;
};

inline Field fit_coefficients(const ShBasis& basis, const Field& samples) {
  return ShFit(basis).coefficients(samples);
}

/// Funk-Radon transform in coefficient space (unnormalized great-circle
/// integral): componentwise product with 2 pi P_l(0).
inline Field funk_forward(const ShBasis& basis, const Field& c) {
  detail::require_size("sphere_funk", "coefficients", basis.size(), c.size());
  return basis.funk_spectrum().cwiseProduct(c);
}

/// Coefficients -> Funk-Radon transform sampled at the basis points.
class FunkRadonOperator final : public ForwardOperator {
public:
  explicit FunkRadonOperator(const ShBasis& basis)
      : matrix_(basis.eval_matrix() * basis.funk_spectrum().asDiagonal()) {}

  Index input_size() const override { return matrix_.cols(); }
  Index output_size() const override { return matrix_.rows(); }

  Field apply(const Field& c) const override {
    detail::require_size("sphere_funk", "coefficients", matrix_.cols(), c.size());
    return matrix_ * c;
  }

  Field apply_adjoint(const Field& r) const override {
    detail::require_size("sphere_funk", "samples", matrix_.rows(), r.size());
    return matrix_.transpose() * r;
  }

  const Eigen::MatrixXd& matrix() const { return matrix_; }

private:
  Eigen::MatrixXd matrix_;
};

namespace detail {

inline void require_positive_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha))
    throw Error("sphere_funk",
                "alpha must be > 0: the Funk-Radon matrix annihilates every odd-degree harmonic, so "
                "F^T B^T B F is rank deficient and only the Laplace-Beltrami term makes the system "
                "solvable",
                "pass --alpha > 0");
}

/// Normal-equation matrix F^T B^T B F + alpha L and right-hand side F^T B^T y.
inline std::pair<Eigen::MatrixXd, Field> funk_normal_equations(const ShBasis& basis, const Field& y,
                                                              double alpha) {
  manireg::detail::require_size("sphere_funk", "data samples", basis.num_points(), y.size());
  const FunkRadonOperator op(basis);
  Eigen::MatrixXd m = op.matrix().transpose() * op.matrix();
  m.diagonal() += alpha * basis.lb_spectrum();
  return {std::move(m), op.apply_adjoint(y)};
}

} // namespace detail

/// Solves (F^T B^T B F + alpha L) c = F^T B^T y by Cholesky.
inline Field funk_invert_direct(const ShBasis& basis, const Field& y, double alpha) {
  detail::require_positive_alpha(alpha);
  auto [m, rhs] = detail::funk_normal_equations(basis, y, alpha);
  Eigen::LLT<Eigen::MatrixXd> llt(m);
  if (llt.info() != Eigen::Success)
    throw Error("sphere_funk", "normal equations are not positive definite",
                "increase --alpha or use more sample points");
  return llt.solve(rhs);
}

/// Landweber iteration c <- c - kappa (F^T B^T (B F c - y) + alpha L c)
/// from c = 0. With an empty cfg.kappa the step is 0.9 * 2 / lambda_max of
/// the system matrix.
inline SolveResult<Field> funk_invert_landweber(const ShBasis& basis, const Field& y, double alpha,
                                                const SolverConfig& cfg = {}) {
  detail::require_positive_alpha(alpha);
  cfg.validate();
  auto [m, rhs] = detail::funk_normal_equations(basis, y, alpha);
  const double half_yy = 0.5 * y.squaredNorm();
  const double kappa =
      cfg.kappa ? *cfg.kappa
                : 0.9 * 2.0 / estimate_largest_eigenvalue([&](const Field& v) { return Field(m * v); }, m.rows());
  const double tol = cfg.tol ? *cfg.tol : 1e-10 * std::max(1.0, rhs.cwiseAbs().maxCoeff());
  return landweber_iterate(
      [&](const Field& c) { return 0.5 * c.dot(m * c) - rhs.dot(c) + half_yy; },
      [&](const Field& c) { return Field(m * c - rhs); }, Field(Field::Zero(basis.size())), kappa, tol,
      cfg);
}

/// Dirichlet-type seminorm c^T L c (squared L2 norm of the surface
/// gradient of the expansion).
inline double gradient_seminorm_sq(const ShBasis& basis, const Field& c) {
  return c.dot(basis.lb_spectrum().cwiseProduct(c));
}

/// Keeps the even-degree (keep_even) or odd-degree coefficients only.
inline Field parity_projection(const Field& c, bool keep_even) {
  Field out = c;
  for (Index j = 0; j < c.size(); ++j)
    if ((sh_degree(static_cast<int>(j)) % 2 == 0) != keep_even) out[j] = 0.0;
  return out;
}

/// Gauss-Legendre nodes and weights on [-1, 1].
inline std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = 0.0;
      for (int k = 1; k <= n; ++k) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p2) / k;
      }
      dp = n * (z * p0 - p1) / (z * z - 1.0);
      const double dz = p0 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    x[static_cast<std::size_t>(i)] = z;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

/// Product rule on S^2 (Gauss-Legendre in cos(theta) x uniform phi), exact
/// for polynomials of degree <= 2 n - 1.
inline std::pair<SpherePointSet, Field> product_quadrature(int n) {
  const auto [x, w] = gauss_legendre(n);
  const int nphi = 2 * n;
  std::vector<Eigen::Vector3d> pts;
  Field weights(static_cast<Index>(n) * nphi);
  Index k = 0;
  for (int i = 0; i < n; ++i) {
    const double z = x[static_cast<std::size_t>(i)], r = std::sqrt(1.0 - z * z);
    for (int j = 0; j < nphi; ++j) {
      const double phi = 2.0 * std::numbers::pi * j / nphi;
      pts.emplace_back(r * std::cos(phi), r * std::sin(phi), z);
      weights[k++] = w[static_cast<std::size_t>(i)] * 2.0 * std::numbers::pi / nphi;
    }
  }
  return {SpherePointSet(std::move(pts)), weights};
}

/// The even test field cos(3 pi (z - y)) + cos(3 pi x).
inline double funk_test_function(const Eigen::Vector3d& p) {
  return std::cos(3.0 * std::numbers::pi * (p.z() - p.y())) + std::cos(3.0 * std::numbers::pi * p.x());
}

inline Field sample(const SpherePointSet& pts, double (*fn)(const Eigen::Vector3d&)) {
  Field out(pts.size());
  for (Index i = 0; i < pts.size(); ++i) out[i] = fn(pts[i]);
  return out;
}

/// CSV "j,l,m,value" with a header line.
inline void write_coefficients(const std::filesystem::path& path, const Field& c) {
  std::ofstream out(path);
  if (!out) throw Error("sphere_funk", "cannot write " + path.string());
  out << "j,l,m,value\n" << std::setprecision(17);
  for (Index j = 0; j < c.size(); ++j) {
    const int jj = static_cast<int>(j);
    out << j << ',' << sh_degree(jj) << ',' << sh_order(jj) << ',' << c[j] << '\n';
  }
}

inline Field read_coefficients(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("sphere_funk", "cannot open " + path.string());
  std::string line;
  std::vector<double> values;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == 'j') continue;
    std::istringstream ls(line);
    std::string j, l, m, v;
    if (!std::getline(ls, j, ',') || !std::getline(ls, l, ',') || !std::getline(ls, m, ',') ||
        !std::getline(ls, v))
      throw Error("sphere_funk", "bad coefficient record '" + line + "'");
    if (std::stoll(j) != static_cast<long long>(values.size()))
      throw Error("sphere_funk", "coefficient rows must be in index order");
    values.push_back(std::stod(v));
  }
  return Eigen::Map<Field>(values.data(), static_cast<Index>(values.size()));
}

} // namespace manireg::sphere

#endif
