#pragma once

// Implicit iteration in Hilbert scales:
//   x_k = x_{k-1} - (A^T A + alpha_k B^{2s})^{-1} A^T (A x_{k-1} - y_delta),
// the run bookkeeping shared by all parameter-choice methods, and the
// geometric-sequence method with the discrepancy stopping rule.

#include <cmath>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hsreg/filters.hpp"
#include "hsreg/hilbert_scale.hpp"
#include "hsreg/linalg.hpp"
#include "hsreg/problems.hpp"

namespace hsreg {

struct IterationConfig {
  double s = 1.0;
  Vector x0;  ///< empty means the zero vector
  double C = 1.1;
  std::size_t max_iter = 100;

  void validate() const {
    if (!(C >= 1.0)) throw Error(ErrorCode::Domain, "stopping constant C must be >= 1");
    if (max_iter < 1) throw Error(ErrorCode::Domain, "max_iter must be >= 1");
    if (!std::isfinite(s)) throw Error(ErrorCode::Domain, "scale exponent s must be finite");
  }
};

enum class Method { TikhonovDp, ImplicitA1, ImplicitGeometric };

inline std::string_view to_string(Method m) {
  switch (m) {
    case Method::TikhonovDp: return "TI/DP";
    case Method::ImplicitA1: return "IIM/A1";
    case Method::ImplicitGeometric: return "IIM/GS";
  }
  return "?";
}

/// Filename-safe tag ("TI-DP", ...).
inline std::string file_tag(Method m) {
  std::string t(to_string(m));
  for (char& c : t)
    if (c == '/') c = '-';
  return t;
}

inline std::optional<Method> parse_method(std::string_view s) {
  if (s == "TI/DP" || s == "TI-DP" || s == "tidp" || s == "ti-dp") return Method::TikhonovDp;
  if (s == "IIM/A1" || s == "IIM-A1" || s == "a1" || s == "iim-a1") return Method::ImplicitA1;
  if (s == "IIM/GS" || s == "IIM-GS" || s == "gs" || s == "iim-gs") return Method::ImplicitGeometric;
  return std::nullopt;
}

enum class RunStatus { Converged, AlreadyFeasible, ZeroNoise };

inline std::string_view to_string(RunStatus s) {
  switch (s) {
    case RunStatus::Converged: return "converged";
    case RunStatus::AlreadyFeasible: return "already-feasible";
    case RunStatus::ZeroNoise: return "zero-noise";
  }
  return "?";
}

struct TraceRecord {
  std::size_t k = 0;
  double alpha = 0.0;
  double sigma = 0.0;  ///< sum of 1/alpha over the steps taken so far
  double d = 0.0;      ///< ||A x_k - y_delta||
  double e = std::numeric_limits<double>::quiet_NaN();    ///< ||x_k - x_true||
  double e_s = std::numeric_limits<double>::quiet_NaN();  ///< ||x_k - x_true||_s
};

struct RunReport {
  Method method = Method::ImplicitA1;
  RunStatus status = RunStatus::Converged;
  std::size_t n = 0;
  double alpha_n = std::numeric_limits<double>::quiet_NaN();
  double sigma_n = 0.0;
  double d_n = 0.0;
  double e_n = std::numeric_limits<double>::quiet_NaN();
  double delta = 0.0;
  double C = 1.1;
  double s = 1.0;
  double d0 = 0.0;  ///< ||A x0 - y_delta||
  double e0_s = std::numeric_limits<double>::quiet_NaN();
  Vector x;
  std::vector<TraceRecord> trace;

  /// IIM/GS: whether 1/alpha_n <= sigma_{n-1} / q (n >= 2).
  std::optional<bool> condition44;
  /// IIM/A1: (1/alpha_n) / sigma_{n-1} and ||A x_{n-1}(alpha_n) - y_delta||,
  /// i.e. the last step repeated with the final parameter in place of alpha_{n-1}.
  std::optional<double> exchange_ratio;
  std::optional<double> exchange_discrepancy;
  /// TI/DP: upper bound for the discrepancy parameter with the run's C.
  std::optional<double> alpha_bound;
  /// TI/DP: the Newton reciprocals r_k = 1/beta_k.
  std::vector<double> newton_r;

  std::vector<double> alphas() const {
    std::vector<double> a;
    a.reserve(trace.size());
    for (const auto& t : trace) a.push_back(t.alpha);
    return a;
  }
};

/// Failure during a run; keeps whatever trace was recorded so far.
class RunError : public Error {
 public:
  RunError(ErrorCode code, const std::string& what, std::vector<TraceRecord> trace)
      : Error(code, what), trace_(std::move(trace)) {}

  const std::vector<TraceRecord>& trace() const noexcept { return trace_; }

 private:
  std::vector<TraceRecord> trace_;
};

/// Precomputed A, A^T A and the penalty B^{2s} for one operator; shared by all
/// runs on the same problem regardless of data or parameter sequence.
class RegularizationContext {
 public:
  RegularizationContext(DenseMatrix a, ScaleOperator scale, double s)
      : a_(std::move(a)), scale_(std::move(scale)), s_(s) {
    if (a_.rows() != a_.cols() || a_.cols() != scale_.dim()) {
      throw Error(ErrorCode::DimensionMismatch, "operator and scale dimensions differ");
    }
    gram_ = gram(a_);
    penalty_ = scale_.power_matrix(2.0 * s_);
  }

  const DenseMatrix& A() const noexcept { return a_; }
  const ScaleOperator& scale() const noexcept { return scale_; }
  const DenseMatrix& gram_matrix() const noexcept { return gram_; }
  const DenseMatrix& penalty() const noexcept { return penalty_; }
  double s() const noexcept { return s_; }
  std::size_t dim() const noexcept { return a_.cols(); }

  SpdFactorization factor(double alpha) const {
    if (!(alpha > 0.0) || !std::isfinite(alpha)) {
      throw Error(ErrorCode::NumericalFailure,
                  "step parameter alpha must be positive and finite, got " + std::to_string(alpha));
    }
    try {
      return spd_factor(add_scaled(gram_, alpha, penalty_));
    } catch (const NotSpdError& e) {
      throw Error(ErrorCode::NumericalFailure,
                  std::string("step matrix lost definiteness: ") + e.what());
    }
  }

  /// x - F^{-1} (A^T A x - A^T y), with aty = A^T y precomputed.
  Vector step(const SpdFactorization& f, std::span<const double> x,
              std::span<const double> aty) const {
    const Vector grad = subtract(multiply(gram_, x), aty);
    const Vector corr = spd_solve(f, grad);
    return subtract(x, corr);
  }

  double discrepancy(std::span<const double> x, std::span<const double> y) const {
    return norm2(subtract(multiply(a_, x), y));
  }

  Vector apply_penalty(std::span<const double> w) const { return multiply(penalty_, w); }

 private:
  DenseMatrix a_;
  ScaleOperator scale_;
  double s_;
  DenseMatrix gram_;
  DenseMatrix penalty_;
};

/// Data side of a run. `x_true` may be empty when the solution is unknown.
struct Observation {
  std::span<const double> y_delta;
  double delta = 0.0;
  std::span<const double> x_true;
};

// ---------------------------------------------------------------------------
// Single operations

inline Vector implicit_step(const DenseMatrix& a, const DenseMatrix& b2s, double alpha,
                            std::span<const double> x_prev, std::span<const double> y_delta) {
  if (!(alpha > 0.0)) throw Error(ErrorCode::Domain, "alpha must be positive");
  const Vector residual = subtract(multiply(a, x_prev), y_delta);
  const Vector rhs = multiply_transposed(a, residual);
  SpdFactorization f;
  try {
    f = spd_factor(add_scaled(gram(a), alpha, b2s));
  } catch (const NotSpdError& e) {
    throw Error(ErrorCode::NumericalFailure, std::string("step matrix not SPD: ") + e.what());
  }
  return subtract(x_prev, spd_solve(f, rhs));
}

inline double discrepancy(const DenseMatrix& a, std::span<const double> x,
                          std::span<const double> y_delta) {
  return norm2(subtract(multiply(a, x), y_delta));
}

inline double error_norm(const ScaleOperator& scale, double r, std::span<const double> x,
                         std::span<const double> x_true) {
  return scale.norm(r, subtract(x, x_true));
}

// ---------------------------------------------------------------------------
// Run bookkeeping

namespace detail {

class RunRecorder {
 public:
  RunRecorder(const RegularizationContext& ctx, const Observation& obs, const IterationConfig& cfg,
              Method method)
      : ctx_(ctx), obs_(obs) {
    cfg.validate();
    if (cfg.s != ctx.s()) {
      throw Error(ErrorCode::Domain, "config exponent s differs from the context's s");
    }
    detail::require_same_size(ctx.dim(), obs.y_delta.size(), "data length");
    if (!obs.x_true.empty()) detail::require_same_size(ctx.dim(), obs.x_true.size(), "x_true");
    if (!(obs.delta >= 0.0)) throw Error(ErrorCode::Domain, "delta must be nonnegative");
    x0_ = cfg.x0.empty() ? Vector(ctx.dim(), 0.0) : cfg.x0;
    detail::require_same_size(ctx.dim(), x0_.size(), "x0");
    aty_ = multiply_transposed(ctx.A(), obs.y_delta);

    report_.method = method;
    report_.delta = obs.delta;
    report_.C = cfg.C;
    report_.s = cfg.s;
    report_.d0 = ctx.discrepancy(x0_, obs.y_delta);
    if (!obs.x_true.empty()) report_.e0_s = error_norm(ctx.scale(), cfg.s, x0_, obs.x_true);
    max_iter_ = cfg.max_iter;
    threshold_ = cfg.C * obs.delta;
  }

  const Vector& x0() const noexcept { return x0_; }
  const Vector& aty() const noexcept { return aty_; }
  double threshold() const noexcept { return threshold_; }
  std::size_t max_iter() const noexcept { return max_iter_; }
  RunReport& report() noexcept { return report_; }
  const std::vector<TraceRecord>& trace() const noexcept { return report_.trace; }

  /// n = 0 report when the start already satisfies the rule (or delta = 0).
  std::optional<RunReport> trivial_start() {
    if (obs_.delta == 0.0) return finish_without_steps(RunStatus::ZeroNoise);
    if (report_.d0 <= threshold_) return finish_without_steps(RunStatus::AlreadyFeasible);
    return std::nullopt;
  }

  /// Records iterate k; returns its discrepancy.
  double record(double alpha, double sigma, std::span<const double> x) {
    TraceRecord rec;
    rec.k = report_.trace.size() + 1;
    rec.alpha = alpha;
    rec.sigma = sigma;
    rec.d = ctx_.discrepancy(x, obs_.y_delta);
    if (!obs_.x_true.empty()) {
      const Vector diff = subtract(x, obs_.x_true);
      rec.e = norm2(diff);
      rec.e_s = ctx_.scale().norm(ctx_.s(), diff);
    }
    report_.trace.push_back(rec);
    return rec.d;
  }

  void check_budget() const {
    if (report_.trace.size() >= max_iter_) {
      throw RunError(ErrorCode::NonTermination,
                     std::string(to_string(report_.method)) + " did not meet the discrepancy rule in " +
                         std::to_string(max_iter_) + " iterations",
                     report_.trace);
    }
  }

  RunReport finish(Vector x) {
    const TraceRecord& last = report_.trace.back();
    report_.status = RunStatus::Converged;
    report_.n = report_.trace.size();
    report_.alpha_n = last.alpha;
    report_.sigma_n = last.sigma;
    report_.d_n = last.d;
    report_.e_n = last.e;
    report_.x = std::move(x);
    return std::move(report_);
  }

 private:
  RunReport finish_without_steps(RunStatus status) {
    report_.status = status;
    report_.n = 0;
    report_.d_n = report_.d0;
    if (!obs_.x_true.empty()) report_.e_n = norm2(subtract(x0_, obs_.x_true));
    report_.x = x0_;
    return std::move(report_);
  }

  const RegularizationContext& ctx_;
  Observation obs_;
  Vector x0_;
  Vector aty_;
  RunReport report_;
  std::size_t max_iter_ = 0;
  double threshold_ = 0.0;
};

}  // namespace detail

// ---------------------------------------------------------------------------
// Geometric sequence alpha_k = q^{k-1} alpha_1

inline RunReport run_geometric(const RegularizationContext& ctx, const Observation& obs,
                               const IterationConfig& cfg, double alpha1, double q) {
  if (!(alpha1 > 0.0)) throw Error(ErrorCode::Domain, "alpha_1 must be positive");
  if (!(q > 0.0 && q < 1.0)) throw Error(ErrorCode::Domain, "q must lie in (0, 1)");
  detail::RunRecorder rec(ctx, obs, cfg, Method::ImplicitGeometric);
  if (auto trivial = rec.trivial_start()) return *trivial;

  Vector x = rec.x0();
  AlphaSequence seq;
  double alpha = alpha1;
  for (;;) {
    rec.check_budget();
    seq.push_back(alpha);
    const SpdFactorization f = ctx.factor(alpha);
    x = ctx.step(f, x, rec.aty());
    const double d = rec.record(alpha, seq.sigma(), x);
    if (d <= rec.threshold()) break;
    alpha *= q;
    if (!(alpha > std::numeric_limits<double>::min())) {
      throw RunError(ErrorCode::NumericalFailure, "geometric alpha underflowed", rec.trace());
    }
  }
  const std::size_t n = seq.size();
  RunReport& r = rec.report();
  if (n >= 2) {
    const double sigma_prev = seq.sigma() - 1.0 / seq[n - 1];
    r.condition44 = (1.0 / seq[n - 1]) <= sigma_prev / q * (1.0 + 1e-12);
  }
  return rec.finish(std::move(x));
}

inline RunReport run_geometric(const TestProblem& problem, const NoisyData& noisy,
                               const IterationConfig& cfg, double alpha1, double q) {
  const RegularizationContext ctx(problem.A, build_scale_operator(problem.m), cfg.s);
  return run_geometric(ctx, {noisy.y_delta, noisy.delta, problem.x_true}, cfg, alpha1, q);
}

/// n steps with a prescribed parameter sequence and no stopping rule.
inline Vector iterate_sequence(const RegularizationContext& ctx, const AlphaSequence& seq,
                               std::span<const double> y_delta, std::span<const double> x0) {
  const Vector aty = multiply_transposed(ctx.A(), y_delta);
  Vector x(x0.begin(), x0.end());
  for (double alpha : seq.alphas()) x = ctx.step(ctx.factor(alpha), x, aty);
  return x;
}

}  // namespace hsreg
