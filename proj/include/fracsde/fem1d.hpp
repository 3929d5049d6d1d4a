#pragma once

// P1 finite elements on (0, 1) with homogeneous Dirichlet conditions.
// Unknowns are the interior nodes x_j = j h, j = 1..M-1.

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <utility>
#include <vector>

#include <Eigen/Core>

namespace fracsde {

using Vector = Eigen::VectorXd;

class Mesh {
 public:
  explicit Mesh(std::size_t n_intervals) : n_intervals_(n_intervals) {
    if (n_intervals < 2)
      throw std::invalid_argument("Mesh needs at least 2 intervals, got " + std::to_string(n_intervals));
  }

  [[nodiscard]] std::size_t n_intervals() const { return n_intervals_; }
  [[nodiscard]] std::size_t n_interior() const { return n_intervals_ - 1; }
  [[nodiscard]] double h() const { return 1.0 / static_cast<double>(n_intervals_); }
  /// Coordinate of interior node j (0-based: node j sits at (j + 1) h).
  [[nodiscard]] double node(std::size_t j) const {
    return static_cast<double>(j + 1) / static_cast<double>(n_intervals_);
  }
  [[nodiscard]] Mesh refined() const { return Mesh(2 * n_intervals_); }

  friend bool operator==(const Mesh&, const Mesh&) = default;

 private:
  std::size_t n_intervals_;
};

struct TridiagonalMatrix {
  Vector sub;    // size n-1, sub(i) = A(i+1, i)
  Vector diag;   // size n
  Vector super;  // size n-1, super(i) = A(i, i+1)
  bool symmetric = false;

  [[nodiscard]] std::size_t size() const { return static_cast<std::size_t>(diag.size()); }

  [[nodiscard]] Vector apply(const Vector& x) const {
    const Eigen::Index n = diag.size();
    Vector y(n);
    apply_into(x, y);
    return y;
  }

  void apply_into(const Vector& x, Vector& y) const {
    const Eigen::Index n = diag.size();
    if (x.size() != n) throw std::invalid_argument("TridiagonalMatrix::apply: size mismatch");
    y.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double v = diag(i) * x(i);
      if (i > 0) v += sub(i - 1) * x(i - 1);
      if (i + 1 < n) v += super(i) * x(i + 1);
      y(i) = v;
    }
  }

  /// a A + b B for matrices of the same size.
  [[nodiscard]] static TridiagonalMatrix combine(double a, const TridiagonalMatrix& A, double b,
                                                 const TridiagonalMatrix& B) {
    if (A.size() != B.size()) throw std::invalid_argument("TridiagonalMatrix::combine: size mismatch");
    return {a * A.sub + b * B.sub, a * A.diag + b * B.diag, a * A.super + b * B.super,
            A.symmetric && B.symmetric};
  }

  [[nodiscard]] Eigen::MatrixXd dense() const {
    const Eigen::Index n = diag.size();
    Eigen::MatrixXd d = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d(i, i) = diag(i);
      if (i + 1 < n) {
        d(i, i + 1) = super(i);
        d(i + 1, i) = sub(i);
      }
    }
    return d;
  }
};

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// LU factors of a tridiagonal matrix (Thomas algorithm, no pivoting).
class TridiagonalFactorization {
 public:
  explicit TridiagonalFactorization(const TridiagonalMatrix& a) : sub_(a.sub), super_(a.super) {
    const Eigen::Index n = a.diag.size();
    pivot_.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      double p = a.diag(i);
      if (i > 0) p -= sub_(i - 1) / pivot_(i - 1) * super_(i - 1);
      if (p == 0.0 || !std::isfinite(p))
        throw SingularMatrixError("zero pivot at row " + std::to_string(i));
      pivot_(i) = p;
    }
    ++counter();
  }

  [[nodiscard]] Vector solve(const Vector& b) const {
    Vector x = b;
    solve_in_place(x);
    return x;
  }

  void solve_in_place(Vector& x) const {
    const Eigen::Index n = pivot_.size();
    if (x.size() != n) throw std::invalid_argument("TridiagonalFactorization::solve: size mismatch");
    for (Eigen::Index i = 1; i < n; ++i) x(i) -= sub_(i - 1) / pivot_(i - 1) * x(i - 1);
    x(n - 1) /= pivot_(n - 1);
    for (Eigen::Index i = n - 2; i >= 0; --i) x(i) = (x(i) - super_(i) * x(i + 1)) / pivot_(i);
  }

  /// Process-wide count of factorizations built; instrumentation for tests.
  static std::size_t instances_created() { return counter().load(); }

 private:
  static std::atomic<std::size_t>& counter() {
    static std::atomic<std::size_t> c{0};
    return c;
  }

  Vector sub_;
  Vector super_;
  Vector pivot_;
};

inline Vector solve_tridiagonal(const TridiagonalMatrix& a, const Vector& b) {
  return TridiagonalFactorization(a).solve(b);
}

inline TridiagonalMatrix assemble_mass(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.n_interior());
  const double h = mesh.h();
  return {Vector::Constant(n - 1, h / 6.0), Vector::Constant(n, 4.0 * h / 6.0),
          Vector::Constant(n - 1, h / 6.0), true};
}

inline TridiagonalMatrix assemble_stiffness(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.n_interior());
  const double h = mesh.h();
  return {Vector::Constant(n - 1, -1.0 / h), Vector::Constant(n, 2.0 / h),
          Vector::Constant(n - 1, -1.0 / h), true};
}

/// A member of X_h: interior nodal values, implicit zeros on the boundary.
struct FemFunction {
  Mesh mesh;
  Vector coeffs;

  explicit FemFunction(const Mesh& m) : mesh(m), coeffs(Vector::Zero(static_cast<Eigen::Index>(m.n_interior()))) {}
  FemFunction(const Mesh& m, Vector c) : mesh(m), coeffs(std::move(c)) {
    if (static_cast<std::size_t>(coeffs.size()) != mesh.n_interior())
      throw std::invalid_argument("FemFunction: coefficient count does not match mesh");
  }

  /// Point evaluation of the piecewise-linear function.
  [[nodiscard]] double operator()(double x) const {
    const double s = x * static_cast<double>(mesh.n_intervals());
    const auto cell = static_cast<std::size_t>(std::clamp(std::floor(s), 0.0, static_cast<double>(mesh.n_intervals() - 1)));
    const double frac = s - static_cast<double>(cell);
    auto value = [&](std::size_t node) {
      return (node == 0 || node == mesh.n_intervals()) ? 0.0 : coeffs(static_cast<Eigen::Index>(node - 1));
    };
    return (1.0 - frac) * value(cell) + frac * value(cell + 1);
  }
};

/// Nodal interpolant of g.
template <typename F>
FemFunction interpolate(const Mesh& mesh, F&& g) {
  FemFunction f(mesh);
  for (std::size_t j = 0; j < mesh.n_interior(); ++j) f.coeffs(static_cast<Eigen::Index>(j)) = g(mesh.node(j));
  return f;
}

/// L2 projection from the load vector l_j = (g, chi_j): solves M c = l.
inline FemFunction l2_project(const Vector& loads, const Mesh& mesh) {
  if (static_cast<std::size_t>(loads.size()) != mesh.n_interior())
    throw std::invalid_argument("l2_project: load vector does not match mesh");
  return FemFunction(mesh, solve_tridiagonal(assemble_mass(mesh), loads));
}

/// Loads (g, chi_j) by 4-point Gauss-Legendre per element; exact for
/// polynomial g up to degree 6.
template <typename F>
Vector assemble_load(const Mesh& mesh, F&& g) {
  static constexpr double kNodes[4] = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563,
                                       0.8611363115940526};
  static constexpr double kWeights[4] = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461,
                                         0.3478548451374538};
  const double h = mesh.h();
  Vector loads = Vector::Zero(static_cast<Eigen::Index>(mesh.n_interior()));
  for (std::size_t cell = 0; cell < mesh.n_intervals(); ++cell) {
    const double left = static_cast<double>(cell) * h;
    for (int q = 0; q < 4; ++q) {
      const double xi = 0.5 * (kNodes[q] + 1.0);
      const double gw = g(left + xi * h) * kWeights[q] * 0.5 * h;
      if (cell > 0) loads(static_cast<Eigen::Index>(cell - 1)) += gw * (1.0 - xi);
      if (cell + 1 < mesh.n_intervals()) loads(static_cast<Eigen::Index>(cell)) += gw * xi;
    }
  }
  return loads;
}

template <typename F>
  requires std::is_invocable_r_v<double, F, double>
FemFunction l2_project(const Mesh& mesh, F&& g) {
  return l2_project(assemble_load(mesh, std::forward<F>(g)), mesh);
}

/// sqrt(c^T M c).
inline double l2_norm(const FemFunction& f) {
  const Vector mc = assemble_mass(f.mesh).apply(f.coeffs);
  return std::sqrt(std::max(0.0, f.coeffs.dot(mc)));
}

/// Exact representation of f on the uniformly refined mesh.
inline FemFunction refine_interpolate(const FemFunction& f) {
  const Mesh fine = f.mesh.refined();
  FemFunction out(fine);
  const auto n = f.coeffs.size();
  for (Eigen::Index j = 0; j < n; ++j) out.coeffs(2 * j + 1) = f.coeffs(j);
  // midpoints, including the two next to the boundary
  for (Eigen::Index j = 0; j <= n; ++j) {
    const double left = j > 0 ? f.coeffs(j - 1) : 0.0;
    const double right = j < n ? f.coeffs(j) : 0.0;
    out.coeffs(2 * j) = 0.5 * (left + right);
  }
  return out;
}

/// Interpolates a coarse function onto a nested finer mesh (any power-of-two ratio).
inline FemFunction prolongate(const FemFunction& f, const Mesh& target) {
  if (target.n_intervals() % f.mesh.n_intervals() != 0)
    throw std::invalid_argument("prolongate: meshes are not nested");
  FemFunction cur = f;
  while (cur.mesh.n_intervals() < target.n_intervals()) {
    if (target.n_intervals() % (2 * cur.mesh.n_intervals()) != 0)
      throw std::invalid_argument("prolongate: refinement ratio must be a power of two");
    cur = refine_interpolate(cur);
  }
  return cur;
}

/// ||a - b||_{L2}; the coarser function is refined onto the finer mesh first.
inline double l2_distance(const FemFunction& a, const FemFunction& b) {
  if (a.mesh.n_intervals() < b.mesh.n_intervals()) return l2_distance(b, a);
  const FemFunction bf = prolongate(b, a.mesh);
  return l2_norm(FemFunction(a.mesh, a.coeffs - bf.coeffs));
}

}  // namespace fracsde
