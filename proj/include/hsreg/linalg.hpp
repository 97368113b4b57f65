#pragma once

// Dense real linear algebra: a row-major matrix type, Cholesky factorization
// for the SPD step systems, the closed-form eigensystem of tridiag(-1, 2, -1)
// and a one-sided Jacobi SVD used by the closed-form solution oracle.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numbers>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "hsreg/error.hpp"

namespace hsreg {

using Vector = std::vector<double>;

class DenseMatrix {
 public:
  DenseMatrix() = default;

  DenseMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), entries_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
      throw Error(ErrorCode::InvalidDimension, "matrix dimensions must be positive");
    }
  }

  DenseMatrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
      : rows_(rows), cols_(cols), entries_(std::move(entries)) {
    if (rows == 0 || cols == 0) {
      throw Error(ErrorCode::InvalidDimension, "matrix dimensions must be positive");
    }
    if (entries_.size() != rows * cols) {
      throw Error(ErrorCode::DimensionMismatch,
                  "entry count " + std::to_string(entries_.size()) + " != " +
                      std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (double v : entries_) {
      if (!std::isfinite(v)) throw Error(ErrorCode::Domain, "matrix entries must be finite");
    }
  }

  static DenseMatrix identity(std::size_t n) {
    DenseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  static DenseMatrix diagonal(std::span<const double> d) {
    DenseMatrix m(d.size(), d.size());
    for (std::size_t i = 0; i < d.size(); ++i) m(i, i) = d[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }

  double& operator()(std::size_t i, std::size_t j) noexcept { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const noexcept { return entries_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) noexcept { return {entries_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const noexcept {
    return {entries_.data() + i * cols_, cols_};
  }

  const std::vector<double>& entries() const noexcept { return entries_; }

  Vector column(std::size_t j) const {
    Vector c(rows_);
    for (std::size_t i = 0; i < rows_; ++i) c[i] = (*this)(i, j);
    return c;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

// ---------------------------------------------------------------------------
// Vector and matrix kernels

namespace detail {
inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + ": " + std::to_string(a) + " vs " + std::to_string(b));
  }
}
}  // namespace detail

inline double dot(std::span<const double> a, std::span<const double> b) {
  detail::require_same_size(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

/// Euclidean norm with scaling, safe against overflow/underflow of the squares.
inline double norm2(std::span<const double> a) {
  double scale = 0.0;
  for (double v : a) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : a) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

inline Vector subtract(std::span<const double> a, std::span<const double> b) {
  detail::require_same_size(a.size(), b.size(), "subtract");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] - b[i];
  return r;
}

inline Vector add(std::span<const double> a, std::span<const double> b) {
  detail::require_same_size(a.size(), b.size(), "add");
  Vector r(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) r[i] = a[i] + b[i];
  return r;
}

inline Vector scaled(std::span<const double> a, double factor) {
  Vector r(a.begin(), a.end());
  for (double& v : r) v *= factor;
  return r;
}

/// A * x
inline Vector multiply(const DenseMatrix& a, std::span<const double> x) {
  detail::require_same_size(a.cols(), x.size(), "matrix-vector product");
  Vector y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    double s = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) s += r[j] * x[j];
    y[i] = s;
  }
  return y;
}

/// A^T * x
inline Vector multiply_transposed(const DenseMatrix& a, std::span<const double> x) {
  detail::require_same_size(a.rows(), x.size(), "transposed matrix-vector product");
  Vector y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const auto r = a.row(i);
    const double xi = x[i];
    for (std::size_t j = 0; j < r.size(); ++j) y[j] += r[j] * xi;
  }
  return y;
}

inline DenseMatrix multiply(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_same_size(a.cols(), b.rows(), "matrix product");
  DenseMatrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto bk = b.row(k);
      for (std::size_t j = 0; j < bk.size(); ++j) ci[j] += aik * bk[j];
    }
  }
  return c;
}

inline DenseMatrix transpose(const DenseMatrix& a) {
  DenseMatrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// A^T A, exactly symmetric.
inline DenseMatrix gram(const DenseMatrix& a) {
  const std::size_t n = a.cols();
  DenseMatrix g(n, n);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const auto r = a.row(k);
    for (std::size_t i = 0; i < n; ++i) {
      const double aki = r[i];
      if (aki == 0.0) continue;
      auto gi = g.row(i);
      for (std::size_t j = i; j < n; ++j) gi[j] += aki * r[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j) g(i, j) = g(j, i);
  return g;
}

/// a + factor * b
inline DenseMatrix add_scaled(const DenseMatrix& a, double factor, const DenseMatrix& b) {
  detail::require_same_size(a.rows(), b.rows(), "matrix sum rows");
  detail::require_same_size(a.cols(), b.cols(), "matrix sum cols");
  DenseMatrix c = a;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ci = c.row(i);
    const auto bi = b.row(i);
    for (std::size_t j = 0; j < ci.size(); ++j) ci[j] += factor * bi[j];
  }
  return c;
}

inline double max_abs(const DenseMatrix& a) {
  double m = 0.0;
  for (double v : a.entries()) m = std::max(m, std::abs(v));
  return m;
}

inline double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
  detail::require_same_size(a.rows(), b.rows(), "matrix difference rows");
  detail::require_same_size(a.cols(), b.cols(), "matrix difference cols");
  double m = 0.0;
  for (std::size_t k = 0; k < a.entries().size(); ++k)
    m = std::max(m, std::abs(a.entries()[k] - b.entries()[k]));
  return m;
}

// ---------------------------------------------------------------------------
// Symmetric eigensystem of the unscaled second-difference matrix

struct SymEigen {
  std::size_t dim = 0;
  Vector eigenvalues;        ///< ascending
  DenseMatrix eigenvectors;  ///< column k pairs with eigenvalues[k]
};

/// Closed-form eigenpairs of tridiag(-1, 2, -1) of size m:
/// lambda_k = 4 sin^2(k pi / (2(m+1))), v_k(j) = sqrt(2/(m+1)) sin(j k pi/(m+1)).
inline SymEigen laplacian_eigen(std::size_t m) {
  if (m == 0) throw Error(ErrorCode::InvalidDimension, "laplacian_eigen requires m >= 1");
  const double np1 = static_cast<double>(m + 1);
  const double pi = std::numbers::pi;
  SymEigen e;
  e.dim = m;
  e.eigenvalues.resize(m);
  e.eigenvectors = DenseMatrix(m, m);
  const double norm = std::sqrt(2.0 / np1);
  for (std::size_t k = 1; k <= m; ++k) {
    // 2 - 2cos(x) written as 4 sin^2(x/2) to avoid cancellation at small k.
    const double half = std::sin(static_cast<double>(k) * pi / (2.0 * np1));
    e.eigenvalues[k - 1] = 4.0 * half * half;
    for (std::size_t j = 1; j <= m; ++j) {
      // Reduce j*k modulo 2(m+1) so the sine argument stays in [0, 2pi).
      const std::size_t jk = (j * k) % (2 * (m + 1));
      e.eigenvectors(j - 1, k - 1) = norm * std::sin(static_cast<double>(jk) * pi / np1);
    }
  }
  return e;
}

// ---------------------------------------------------------------------------
// Cholesky

struct SpdFactorization {
  std::size_t dim = 0;
  DenseMatrix lower;  ///< L with M = L L^T
};

inline SpdFactorization spd_factor(const DenseMatrix& m) {
  if (m.rows() != m.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "spd_factor requires a square matrix");
  }
  const std::size_t n = m.rows();
  const double scale = max_abs(m);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < i; ++j)
      if (std::abs(m(i, j) - m(j, i)) > 1e-10 * scale) {
        throw Error(ErrorCode::Domain, "spd_factor requires a symmetric matrix");
      }

  DenseMatrix l(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    const auto lj = l.row(j);
    double diag = m(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= lj[k] * lj[k];
    if (!(diag > 0.0)) throw NotSpdError(j, diag);
    const double ljj = std::sqrt(diag);
    l(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      const auto li = l.row(i);
      double s = m(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= li[k] * lj[k];
      l(i, j) = s / ljj;
    }
  }
  return {n, std::move(l)};
}

inline Vector spd_solve(const SpdFactorization& f, std::span<const double> rhs) {
  detail::require_same_size(f.dim, rhs.size(), "spd_solve");
  const std::size_t n = f.dim;
  const DenseMatrix& l = f.lower;
  Vector x(rhs.begin(), rhs.end());
  for (std::size_t i = 0; i < n; ++i) {
    const auto li = l.row(i);
    double s = x[i];
    for (std::size_t k = 0; k < i; ++k) s -= li[k] * x[k];
    x[i] = s / li[i];
  }
  for (std::size_t ii = n; ii-- > 0;) {
    double s = x[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s -= l(k, ii) * x[k];
    x[ii] = s / l(ii, ii);
  }
  return x;
}

// ---------------------------------------------------------------------------
// SVD (one-sided Jacobi)

struct Svd {
  Vector singular_values;  ///< descending, >= 0
  DenseMatrix u;           ///< rows x k, orthonormal columns
  DenseMatrix v;           ///< cols x k, orthonormal columns
};

namespace detail {

// Thin SVD of a matrix with rows >= cols. Works on the rows of A^T so the
// column rotations touch contiguous memory.
inline Svd jacobi_svd_tall(const DenseMatrix& a, std::size_t max_sweeps) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix w = transpose(a);             // n x m, row j = column j of A
  DenseMatrix vt = DenseMatrix::identity(n);  // row j = column j of V
  constexpr double tol = 1e-15;

  bool converged = false;
  for (std::size_t sweep = 0; sweep < max_sweeps && !converged; ++sweep) {
    converged = true;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        auto wp = w.row(p);
        auto wq = w.row(q);
        double alpha = 0.0, beta = 0.0, gamma = 0.0;
        for (std::size_t i = 0; i < m; ++i) {
          alpha += wp[i] * wp[i];
          beta += wq[i] * wq[i];
          gamma += wp[i] * wq[i];
        }
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        converged = false;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double x = wp[i], y = wq[i];
          wp[i] = c * x - s * y;
          wq[i] = s * x + c * y;
        }
        auto vp = vt.row(p);
        auto vq = vt.row(q);
        for (std::size_t i = 0; i < n; ++i) {
          const double x = vp[i], y = vq[i];
          vp[i] = c * x - s * y;
          vq[i] = s * x + c * y;
        }
      }
    }
  }
  if (!converged) {
    throw Error(ErrorCode::NumericalFailure,
                "Jacobi SVD did not converge in " + std::to_string(max_sweeps) + " sweeps");
  }

  Vector sigma(n);
  for (std::size_t j = 0; j < n; ++j) sigma[j] = norm2(w.row(j));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return sigma[i] > sigma[j]; });

  Svd out;
  out.singular_values.resize(n);
  out.u = DenseMatrix(m, n);
  out.v = DenseMatrix(n, n);
  const double cutoff = (sigma.empty() ? 0.0 : sigma[order[0]]) *
                        std::numeric_limits<double>::epsilon() * static_cast<double>(m);
  std::vector<bool> filled(n, false);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t j = order[k];
    out.singular_values[k] = sigma[j];
    for (std::size_t i = 0; i < n; ++i) out.v(i, k) = vt(j, i);
    if (sigma[j] > cutoff && sigma[j] > 0.0) {
      for (std::size_t i = 0; i < m; ++i) out.u(i, k) = w(j, i) / sigma[j];
      filled[k] = true;
    }
  }
  // Complete U for (numerically) zero singular values by Gram-Schmidt on the
  // canonical basis.
  std::size_t candidate = 0;
  for (std::size_t k = 0; k < n; ++k) {
    if (filled[k]) continue;
    while (candidate < m) {
      Vector e(m, 0.0);
      e[candidate++] = 1.0;
      for (int pass = 0; pass < 2; ++pass) {
        for (std::size_t c = 0; c < n; ++c) {
          if (!filled[c]) continue;
          double proj = 0.0;
          for (std::size_t i = 0; i < m; ++i) proj += out.u(i, c) * e[i];
          for (std::size_t i = 0; i < m; ++i) e[i] -= proj * out.u(i, c);
        }
      }
      const double nrm = norm2(e);
      if (nrm > 1e-8) {
        for (std::size_t i = 0; i < m; ++i) out.u(i, k) = e[i] / nrm;
        filled[k] = true;
        break;
      }
    }
  }
  return out;
}

}  // namespace detail

/// Thin singular value decomposition M = U diag(sigma) V^T.
inline Svd svd(const DenseMatrix& a, std::size_t max_sweeps = 60) {
  for (double v : a.entries()) {
    if (!std::isfinite(v)) throw Error(ErrorCode::Domain, "svd requires finite entries");
  }
  if (a.rows() >= a.cols()) return detail::jacobi_svd_tall(a, max_sweeps);
  Svd t = detail::jacobi_svd_tall(transpose(a), max_sweeps);
  std::swap(t.u, t.v);
  return t;
}

}  // namespace hsreg
