#pragma once

// Parameter choice: the a priori rule, the upper bound for the discrepancy
// parameter of Tikhonov regularization, Newton's method for Tikhonov with the
// discrepancy principle (TI/DP), and the Newton-driven implicit iteration
// (IIM/A1) that spends one Newton step per outer iteration.

#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>

#include "hsreg/iteration.hpp"

namespace hsreg {

// ---------------------------------------------------------------------------
// Index functions and psi_p(t) = t^p rho(t)

class IndexFunction {
 public:
  /// rho(t) = t^a on (0, t_max].
  static IndexFunction power(double a, double t_max = std::numeric_limits<double>::infinity()) {
    if (!(a > 0.0)) throw Error(ErrorCode::Domain, "power index function needs a > 0");
    IndexFunction f([a](double t) { return std::pow(t, a); }, t_max, a);
    return f;
  }

  /// Arbitrary continuous strictly increasing rho with rho(0+) = 0 on (0, t_max].
  static IndexFunction custom(std::function<double(double)> rho, double t_max) {
    if (!(t_max > 0.0) || !std::isfinite(t_max)) {
      throw Error(ErrorCode::Domain, "custom index function needs a finite t_max > 0");
    }
    return IndexFunction(std::move(rho), t_max, std::nullopt);
  }

  double operator()(double t) const { return rho_(t); }
  double t_max() const noexcept { return t_max_; }
  std::optional<double> power_exponent() const noexcept { return exponent_; }

 private:
  IndexFunction(std::function<double(double)> rho, double t_max, std::optional<double> exponent)
      : rho_(std::move(rho)), t_max_(t_max), exponent_(exponent) {
    const double hi = std::isfinite(t_max_) ? t_max_ : 1.0;
    const double lo = hi * 1e-12;
    double prev = rho_(lo);
    if (!(prev >= 0.0) || !(prev < rho_(2.0 * lo))) {
      throw Error(ErrorCode::Domain, "index function must be nonnegative and increasing near 0");
    }
    for (int i = 1; i <= 48; ++i) {
      const double t = lo * std::pow(hi / lo, i / 48.0);
      const double v = rho_(t);
      if (!(v > prev)) throw Error(ErrorCode::Domain, "index function is not strictly increasing");
      prev = v;
    }
  }

  std::function<double(double)> rho_;
  double t_max_;
  std::optional<double> exponent_;
};

inline double psi_p(const IndexFunction& rho, double p, double t) {
  if (!(t > 0.0) || t > rho.t_max()) throw Error(ErrorCode::Domain, "t outside (0, t_max]");
  return std::pow(t, p) * rho(t);
}

/// Unique t with psi_p(t) = v. Closed form for power rho, otherwise bisection
/// in log t to relative width 1e-13.
inline double psi_p_inverse(const IndexFunction& rho, double p, double v) {
  if (!(v > 0.0)) throw Error(ErrorCode::Domain, "psi_p inverse needs v > 0");
  if (auto a = rho.power_exponent()) {
    const double t = std::pow(v, 1.0 / (p + *a));
    if (t > rho.t_max()) throw Error(ErrorCode::Domain, "v beyond psi_p(t_max)");
    return t;
  }
  const double hi_t = rho.t_max();
  if (v > psi_p(rho, p, hi_t)) throw Error(ErrorCode::Domain, "v beyond psi_p(t_max)");
  double hi = hi_t;
  double lo = hi_t;
  // Walk down until psi_p(lo) < v.
  while (psi_p(rho, p, lo) >= v) {
    hi = lo;
    lo *= 0.5;
    if (lo < std::numeric_limits<double>::min()) {
      throw Error(ErrorCode::Domain, "psi_p inverse: value below representable range");
    }
  }
  while (hi - lo > 1e-13 * hi) {
    const double mid = std::sqrt(lo * hi);
    const double pick = (mid > lo && mid < hi) ? mid : 0.5 * (lo + hi);
    if (psi_p(rho, p, pick) < v) lo = pick; else hi = pick;
  }
  return 0.5 * (lo + hi);
}

struct AprioriInputs {
  double p = 1.0;       ///< smoothness of x_true - x0
  double E = 1.0;       ///< source bound ||x_true - x0||_p <= E
  double m_link = 1.0;  ///< lower link constant
  double s = 1.0;
  double delta = 0.0;
  IndexFunction rho = IndexFunction::power(2.0);
  std::optional<double> a;  ///< power shortcut rho = t^a
};

/// sigma_n^{-1} = (delta/E)^2 [psi_p^{-1}(delta/(m E))]^{2(s-p)}; with rho = t^a
/// the closed form m^2 (delta/(m E))^{2(s+a)/(a+p)}.
inline double apriori_sigma_inv(const AprioriInputs& in) {
  if (!(in.p > 0.0) || !(in.E > 0.0) || !(in.m_link > 0.0) || !(in.delta > 0.0)) {
    throw Error(ErrorCode::Domain, "a priori rule needs p, E, m, delta > 0");
  }
  const double v = in.delta / (in.m_link * in.E);
  if (in.a) {
    if (!(*in.a > 0.0)) throw Error(ErrorCode::Domain, "a must be positive");
    return in.m_link * in.m_link * std::pow(v, 2.0 * (in.s + *in.a) / (*in.a + in.p));
  }
  const double t = psi_p_inverse(in.rho, in.p, v);
  return (in.delta * in.delta) / (in.E * in.E) * std::pow(t, 2.0 * (in.s - in.p));
}

// ---------------------------------------------------------------------------
// Upper bound for the discrepancy parameter (n = 1)

namespace detail {
inline double bound_from(double c_delta, double residual_norm, double weighted_grad_sq) {
  return c_delta * weighted_grad_sq /
         ((residual_norm - c_delta) * residual_norm * residual_norm);
}
}  // namespace detail

/// C delta ||G^s A^T (y - A x0)||^2 / ((||y - A x0|| - C delta) ||y - A x0||^2).
inline double alpha_upper_bound(const DenseMatrix& a, const ScaleOperator& scale, double s,
                                std::span<const double> y_delta, std::span<const double> x0,
                                double C, double delta) {
  if (!(C >= 1.0)) throw Error(ErrorCode::Domain, "C must be >= 1");
  const Vector residual = subtract(y_delta, multiply(a, x0));
  const double rn = norm2(residual);
  if (!(rn > C * delta)) {
    throw Error(ErrorCode::InfeasibleStart, "||y_delta - A x0|| <= C delta: bound undefined");
  }
  const double g = scale.norm(-s, multiply_transposed(a, residual));
  return detail::bound_from(C * delta, rn, g * g);
}

// ---------------------------------------------------------------------------
// Newton update on g(r) = ||A x(1/r) - y||^{-1} - delta^{-1}

/// Default update r - (1/d - 1/delta) / (alpha^3 (v, L w) d^{-3}), where `inner`
/// is (v, L w). Methods take the update as a policy so alternative (or
/// deliberately broken) variants can be plugged in by tests.
struct DiscrepancyNewtonUpdate {
  double operator()(double r, double d, double delta, double inner) const {
    const double alpha = 1.0 / r;
    const double derivative = alpha * alpha * alpha * inner / (d * d * d);
    return r - (1.0 / d - 1.0 / delta) / derivative;
  }
};

namespace detail {

/// (v, L w) with w = x - x_base and v = F^{-1} L w, guarded against underflow.
inline double newton_inner(const RegularizationContext& ctx, const SpdFactorization& f,
                           std::span<const double> x, std::span<const double> x_base,
                           const std::vector<TraceRecord>& trace) {
  const Vector lw = ctx.apply_penalty(subtract(x, x_base));
  const Vector v = spd_solve(f, lw);
  const double inner = dot(v, lw);
  if (!(inner > 1e-300)) {
    throw RunError(ErrorCode::NumericalFailure,
                   "Newton denominator underflow: (v, B^{2s}(x - x0)) = " + std::to_string(inner),
                   trace);
  }
  return inner;
}

inline void require_increase(double r_old, double r_new, const std::vector<TraceRecord>& trace) {
  if (!(r_new > r_old) || !std::isfinite(r_new)) {
    throw RunError(ErrorCode::NewtonBreakdown,
                   "Newton step did not increase r: r_old = " + std::to_string(r_old) +
                       ", r_new = " + std::to_string(r_new) + " (alpha would not decrease)",
                   trace);
  }
}

}  // namespace detail

enum class StartRule { Bound, One };

inline std::string_view to_string(StartRule s) {
  return s == StartRule::Bound ? "bound" : "one";
}

/// Starting parameter: the bound with C = 1 (zero start gives the usual
/// delta (G^{2s} A^T y, A^T y) / ((||y|| - delta) ||y||^2)), or alpha_1 = 1.
inline double start_alpha(const RegularizationContext& ctx, const Observation& obs,
                          std::span<const double> x0, StartRule rule) {
  if (rule == StartRule::One) return 1.0;
  return alpha_upper_bound(ctx.A(), ctx.scale(), ctx.s(), obs.y_delta, x0, 1.0, obs.delta);
}

// ---------------------------------------------------------------------------
// TI/DP: Tikhonov x(beta) = x0 - (A^T A + beta L)^{-1} A^T (A x0 - y) with
// beta_k = 1/r_k driven by Newton toward ||A x - y|| = delta, stopped at the
// first k with ||A x - y|| <= C delta.

template <class Update = DiscrepancyNewtonUpdate>
RunReport newton_dp_tikhonov(const RegularizationContext& ctx, const Observation& obs,
                             const IterationConfig& cfg, double alpha1, Update update = {}) {
  if (!(alpha1 > 0.0)) throw Error(ErrorCode::Domain, "alpha_1 must be positive");
  detail::RunRecorder rec(ctx, obs, cfg, Method::TikhonovDp);
  if (auto trivial = rec.trivial_start()) return *trivial;
  rec.report().alpha_bound =
      alpha_upper_bound(ctx.A(), ctx.scale(), ctx.s(), obs.y_delta, rec.x0(), cfg.C, obs.delta);

  const Vector& x0 = rec.x0();
  double r = 1.0 / alpha1;
  Vector x;
  for (;;) {
    rec.check_budget();
    const double beta = 1.0 / r;
    const SpdFactorization f = ctx.factor(beta);
    x = ctx.step(f, x0, rec.aty());
    rec.report().newton_r.push_back(r);
    // Tikhonov is a single step, so its sigma is 1/beta.
    const double d = rec.record(beta, r, x);
    if (d <= rec.threshold()) break;
    const double inner = detail::newton_inner(ctx, f, x, x0, rec.trace());
    const double r_new = update(r, d, obs.delta, inner);
    detail::require_increase(r, r_new, rec.trace());
    r = r_new;
  }
  return rec.finish(std::move(x));
}

template <class Update = DiscrepancyNewtonUpdate>
RunReport newton_dp_tikhonov(const TestProblem& problem, const NoisyData& noisy,
                             const IterationConfig& cfg, double alpha1, Update update = {}) {
  const RegularizationContext ctx(problem.A, build_scale_operator(problem.m), cfg.s);
  return newton_dp_tikhonov(ctx, {noisy.y_delta, noisy.delta, problem.x_true}, cfg, alpha1,
                            update);
}

// ---------------------------------------------------------------------------
// IIM/A1: each outer step takes one Newton step for the parameter of the
// previous implicit step, then performs the implicit step from the current
// iterate with the new parameter.

template <class Update = DiscrepancyNewtonUpdate>
RunReport algorithm1(const RegularizationContext& ctx, const Observation& obs,
                     const IterationConfig& cfg, std::optional<double> alpha1 = std::nullopt,
                     Update update = {}) {
  detail::RunRecorder rec(ctx, obs, cfg, Method::ImplicitA1);
  if (auto trivial = rec.trivial_start()) return *trivial;

  double alpha = alpha1 ? *alpha1 : start_alpha(ctx, obs, rec.x0(), StartRule::Bound);
  if (!(alpha > 0.0)) throw Error(ErrorCode::Domain, "alpha_1 must be positive");
  AlphaSequence seq;
  seq.push_back(alpha);
  Vector base = rec.x0();  // the "x0" of the algorithm, shifted each iteration
  Vector before_base;      // iterate preceding `base`, kept for the exchange check
  SpdFactorization f = ctx.factor(alpha);
  Vector x = ctx.step(f, base, rec.aty());
  double d = rec.record(alpha, seq.sigma(), x);

  while (d > rec.threshold()) {
    rec.check_budget();
    const double inner = detail::newton_inner(ctx, f, x, base, rec.trace());
    const double r_old = 1.0 / alpha;
    const double r = update(r_old, d, obs.delta, inner);
    detail::require_increase(r_old, r, rec.trace());
    before_base = std::move(base);
    base = x;
    alpha = 1.0 / r;
    seq.push_back(alpha);
    f = ctx.factor(alpha);
    x = ctx.step(f, base, rec.aty());
    d = rec.record(alpha, seq.sigma(), x);
  }

  const std::size_t n = seq.size();
  RunReport& rep = rec.report();
  if (n >= 2) {
    const double sigma_prev = seq.sigma() - 1.0 / seq[n - 1];
    rep.exchange_ratio = (1.0 / seq[n - 1]) / sigma_prev;
    // x_{n-1}(alpha_n): the step into x_{n-1} redone with the final parameter.
    const Vector swapped = ctx.step(f, before_base, rec.aty());
    rep.exchange_discrepancy = ctx.discrepancy(swapped, obs.y_delta);
  }
  return rec.finish(std::move(x));
}

template <class Update = DiscrepancyNewtonUpdate>
RunReport algorithm1(const TestProblem& problem, const NoisyData& noisy, const IterationConfig& cfg,
                     std::optional<double> alpha1 = std::nullopt, Update update = {}) {
  const RegularizationContext ctx(problem.A, build_scale_operator(problem.m), cfg.s);
  return algorithm1(ctx, {noisy.y_delta, noisy.delta, problem.x_true}, cfg, alpha1, update);
}

}  // namespace hsreg
