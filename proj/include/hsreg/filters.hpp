#pragma once

// Spectral filter of the implicit iteration:
//   r_n(l) = prod_k alpha_k / (l + alpha_k),   g_n(l) = (1 - r_n(l)) / l,
// and the closed-form (SVD) realization of x_n = x0 + G^s g_n(T^T T) T^T (y - A x0).

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "hsreg/hilbert_scale.hpp"
#include "hsreg/linalg.hpp"

namespace hsreg {

class AlphaSequence {
 public:
  AlphaSequence() = default;
  explicit AlphaSequence(std::vector<double> alphas) {
    for (double a : alphas) push_back(a);
  }

  void push_back(double alpha) {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::Domain, "alpha must be positive and finite");
    }
    alphas_.push_back(alpha);
    sigma_ += 1.0 / alpha;
  }

  std::size_t size() const noexcept { return alphas_.size(); }
  bool empty() const noexcept { return alphas_.empty(); }
  const std::vector<double>& alphas() const noexcept { return alphas_; }
  double operator[](std::size_t k) const noexcept { return alphas_[k]; }
  /// sigma_n = sum 1/alpha_k, the effective regularization parameter.
  double sigma() const noexcept { return sigma_; }

 private:
  std::vector<double> alphas_;
  double sigma_ = 0.0;
};

namespace detail {
// log r_n(l) = -sum log1p(l / alpha_k), accurate for l << alpha_k.
inline double log_residual(const AlphaSequence& seq, double lambda) {
  double s = 0.0;
  for (double a : seq.alphas()) s += std::log1p(lambda / a);
  return -s;
}
}  // namespace detail

inline double eval_r(const AlphaSequence& seq, double lambda) {
  if (!(lambda >= 0.0)) throw Error(ErrorCode::Domain, "r_n requires lambda >= 0");
  if (lambda == 0.0) return 1.0;
  return std::exp(detail::log_residual(seq, lambda));
}

inline double eval_g(const AlphaSequence& seq, double lambda) {
  if (!(lambda > 0.0)) throw Error(ErrorCode::Domain, "g_n requires lambda > 0");
  // 1 - r_n = -expm1(log r_n) has no cancellation when l * sigma_n is small.
  return -std::expm1(detail::log_residual(seq, lambda)) / lambda;
}

/// Largest relative violation of each filter inequality over a grid. A value
/// of zero means the property holds everywhere (up to rounding slack).
struct FilterPropertyReport {
  double g_bounded_by_sigma = 0.0;          // g_n <= sigma_n
  double lambda_g_bounded = 0.0;            // l g_n <= 1
  double lambda_r_bounded = 0.0;            // l r_n <= 1/sigma_n
  double r_bounded_by_g = 0.0;              // r_n <= g_n / sigma_n
  double identity_residual = 0.0;           // |l g_n + r_n - 1|
  double worst_lambda = 0.0;

  double max_violation() const {
    return std::max({g_bounded_by_sigma, lambda_g_bounded, lambda_r_bounded, r_bounded_by_g,
                     identity_residual});
  }
};

inline FilterPropertyReport check_properties(const AlphaSequence& seq,
                                             std::span<const double> lambda_grid) {
  if (lambda_grid.empty()) throw Error(ErrorCode::Domain, "empty lambda grid");
  if (seq.empty()) throw Error(ErrorCode::Domain, "filter properties need n >= 1");
  FilterPropertyReport rep;
  const double sigma = seq.sigma();
  double worst = -1.0;
  for (double l : lambda_grid) {
    if (!(l > 0.0)) throw Error(ErrorCode::Domain, "lambda grid must be positive");
    const double g = eval_g(seq, l);
    const double r = eval_r(seq, l);
    // Each inequality lhs <= rhs is normalized as max(0, lhs/rhs - 1).
    const double v1 = std::max(0.0, g / sigma - 1.0);
    const double v2 = std::max(0.0, l * g - 1.0);
    const double v3 = std::max(0.0, l * r * sigma - 1.0);
    const double v4 = g > 0.0 ? std::max(0.0, r * sigma / g - 1.0) : 0.0;
    const double v5 = std::abs(l * g + r - 1.0);
    rep.g_bounded_by_sigma = std::max(rep.g_bounded_by_sigma, v1);
    rep.lambda_g_bounded = std::max(rep.lambda_g_bounded, v2);
    rep.lambda_r_bounded = std::max(rep.lambda_r_bounded, v3);
    rep.r_bounded_by_g = std::max(rep.r_bounded_by_g, v4);
    rep.identity_residual = std::max(rep.identity_residual, v5);
    const double w = std::max({v1, v2, v3, v4, v5});
    if (w > worst) {
      worst = w;
      rep.worst_lambda = l;
    }
  }
  return rep;
}

/// x0 + G^s V diag(g_n(sigma_i^2) sigma_i) U^T (y_delta - A x0), T = A G^s.
inline Vector oracle_solution(const DenseMatrix& a, const ScaleOperator& scale, double s,
                              const AlphaSequence& seq, std::span<const double> y_delta,
                              std::span<const double> x0) {
  detail::require_same_size(a.cols(), scale.dim(), "oracle operator/scale");
  detail::require_same_size(a.rows(), y_delta.size(), "oracle data");
  detail::require_same_size(a.cols(), x0.size(), "oracle start");
  Vector out(x0.begin(), x0.end());
  if (seq.empty()) return out;

  const DenseMatrix t = multiply(a, scale.power_matrix(-s));
  const Svd dec = svd(t);
  const Vector residual = subtract(y_delta, multiply(a, x0));
  Vector coeff = multiply_transposed(dec.u, residual);
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    const double sv = dec.singular_values[i];
    coeff[i] = sv > 0.0 ? coeff[i] * sv * eval_g(seq, sv * sv) : 0.0;
  }
  const Vector z = scale.apply_power(-s, multiply(dec.v, coeff));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += z[i];
  return out;
}

/// Residual predicted by the filter: ||r_n(T T^T)(y_delta - A x0)||.
inline double oracle_discrepancy(const DenseMatrix& a, const ScaleOperator& scale, double s,
                                 const AlphaSequence& seq, std::span<const double> y_delta,
                                 std::span<const double> x0) {
  const DenseMatrix t = multiply(a, scale.power_matrix(-s));
  const Svd dec = svd(t);
  const Vector residual = subtract(y_delta, multiply(a, x0));
  Vector coeff = multiply_transposed(dec.u, residual);
  // Component of the residual outside range(U) is untouched by the filter.
  const Vector in_range = multiply(dec.u, coeff);
  const Vector outside = subtract(residual, in_range);
  for (std::size_t i = 0; i < coeff.size(); ++i) {
    const double sv = dec.singular_values[i];
    coeff[i] *= eval_r(seq, sv * sv);
  }
  const double inside = norm2(coeff);
  return std::hypot(inside, norm2(outside));
}

}  // namespace hsreg
