#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>

#include "hsreg/linalg.hpp"

namespace hsreg {

/// Discrete first-order operator B = B2^{1/2}, B2 = (m+1)^2/pi^2 tridiag(-1, 2, -1),
/// represented through its closed-form eigensystem. B has eigenvalues
/// mu_k = sqrt(scale * lambda_k) approximating k, so ||x||_r = ||B^r x|| mimics
/// the Sobolev-type scale generated by the sine basis on (0, 1).
class ScaleOperator {
 public:
  explicit ScaleOperator(std::size_t m)
      : m_(m), eig_(laplacian_eigen(m)) {
    const double np1 = static_cast<double>(m + 1);
    scale_ = np1 * np1 / (std::numbers::pi * std::numbers::pi);
    mu_.resize(m);
    for (std::size_t k = 0; k < m; ++k) mu_[k] = std::sqrt(scale_ * eig_.eigenvalues[k]);
  }

  std::size_t dim() const noexcept { return m_; }
  double scale() const noexcept { return scale_; }
  const SymEigen& eigen() const noexcept { return eig_; }
  /// Eigenvalues of B, strictly increasing.
  const Vector& mu() const noexcept { return mu_; }

  /// B^r x for any real r (negative r applies powers of G = B^{-1}).
  Vector apply_power(double r, std::span<const double> x) const {
    detail::require_same_size(m_, x.size(), "apply_power");
    const DenseMatrix& v = eig_.eigenvectors;
    Vector coeff = multiply_transposed(v, x);
    for (std::size_t k = 0; k < m_; ++k) coeff[k] *= std::pow(mu_[k], r);
    return multiply(v, coeff);
  }

  double norm(double r, std::span<const double> x) const {
    // ||B^r x|| = ||diag(mu^r) V^T x|| since V is orthogonal.
    detail::require_same_size(m_, x.size(), "scale_norm");
    Vector coeff = multiply_transposed(eig_.eigenvectors, x);
    for (std::size_t k = 0; k < m_; ++k) coeff[k] *= std::pow(mu_[k], r);
    return norm2(coeff);
  }

  /// Dense V diag(mu^r) V^T. With r = 2s this is the penalty of the step matrix.
  DenseMatrix power_matrix(double r) const {
    const DenseMatrix& v = eig_.eigenvectors;
    Vector w(m_);
    for (std::size_t k = 0; k < m_; ++k) w[k] = std::pow(mu_[k], r);
    DenseMatrix out(m_, m_);
    for (std::size_t i = 0; i < m_; ++i) {
      const auto vi = v.row(i);
      for (std::size_t j = i; j < m_; ++j) {
        const auto vj = v.row(j);
        double s = 0.0;
        for (std::size_t k = 0; k < m_; ++k) s += vi[k] * w[k] * vj[k];
        out(i, j) = s;
        out(j, i) = s;
      }
    }
    return out;
  }

 private:
  std::size_t m_;
  SymEigen eig_;
  double scale_ = 0.0;
  Vector mu_;
};

inline ScaleOperator build_scale_operator(std::size_t m) {
  if (m == 0) throw Error(ErrorCode::InvalidDimension, "scale operator requires m >= 1");
  return ScaleOperator(m);
}

inline Vector apply_power(const ScaleOperator& s, double r, std::span<const double> x) {
  return s.apply_power(r, x);
}

inline double scale_norm(const ScaleOperator& s, double r, std::span<const double> x) {
  return s.norm(r, x);
}

inline DenseMatrix power_matrix(const ScaleOperator& s, double r) { return s.power_matrix(r); }

}  // namespace hsreg
