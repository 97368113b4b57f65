#pragma once

// The deriv2 test problem: the Fredholm operator with the Green's function of
// -d^2/ds^2 (Dirichlet) as kernel, discretized by Galerkin with the orthonormal
// piecewise-constant basis phi_i = h^{-1/2} 1_{cell_i}, plus seeded noise.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <string_view>

#include "hsreg/linalg.hpp"

namespace hsreg {

enum class Variant { Sine, Quartic, Linear };

inline std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::Sine: return "i";
    case Variant::Quartic: return "ii";
    case Variant::Linear: return "iii";
  }
  return "?";
}

inline Variant parse_variant(std::string_view s) {
  if (s == "i" || s == "1") return Variant::Sine;
  if (s == "ii" || s == "2") return Variant::Quartic;
  if (s == "iii" || s == "3") return Variant::Linear;
  throw Error(ErrorCode::InvalidVariant, "unknown variant '" + std::string(s) + "'");
}

/// Maximal smoothness p0 of x_true relative to the scale generated by B.
inline double max_smoothness(Variant v) {
  switch (v) {
    case Variant::Sine: return std::numeric_limits<double>::infinity();
    case Variant::Quartic: return 2.5;
    case Variant::Linear: return 0.5;
  }
  return 0.0;
}

struct TestProblem {
  std::size_t m = 0;
  DenseMatrix A;
  Vector y;
  Vector x_true;
  Variant variant = Variant::Sine;
  double a = 2.0;                                             // rho(t) = t^a
  double m_link = 1.0 / (std::numbers::pi * std::numbers::pi);  // lower link constant
  double M_link = 1.0 / (std::numbers::pi * std::numbers::pi);  // upper link constant
  double p0 = 0.0;
};

struct NoisyData {
  Vector y_delta;
  double delta = 0.0;  ///< absolute level, sigma * ||y||
  double sigma = 0.0;  ///< relative level
  std::uint64_t seed = 0;
};

/// Galerkin matrix A_ij = h^{-1} int_{cell_i} int_{cell_j} K(s,t) dt ds with
/// K(s,t) = min(s,t) (1 - max(s,t)), evaluated in closed form.
inline DenseMatrix galerkin_deriv2(std::size_t m) {
  if (m < 2) throw Error(ErrorCode::InvalidDimension, "deriv2 requires m >= 2");
  const double h = 1.0 / static_cast<double>(m);
  DenseMatrix a(m, m);
  for (std::size_t i = 1; i <= m; ++i) {
    const double ci = static_cast<double>(i) - 0.5;
    // Diagonal cell split along s = t; with a = left edge the integral over the
    // lower triangle doubled and divided by h reduces to the expression below.
    const double left = static_cast<double>(i - 1) * h;
    a(i - 1, i - 1) =
        (1.0 - left) * (left * h + h * h / 3.0) - (2.0 * left * h * h / 3.0 + h * h * h / 4.0);
    for (std::size_t j = i + 1; j <= m; ++j) {
      // s in cell i lies below t in cell j: K = s (1 - t), a separable product.
      const double cj = static_cast<double>(j) - 0.5;
      const double v = h * h * ci * (1.0 - cj * h);
      a(i - 1, j - 1) = v;
      a(j - 1, i - 1) = v;
    }
  }
  return a;
}

namespace detail {

// h^{-1/2} int_{(i-1)h}^{ih} f for the three right-hand sides / solutions.
template <class Antiderivative>
Vector cell_integrals(std::size_t m, Antiderivative&& big_f) {
  const double h = 1.0 / static_cast<double>(m);
  const double inv_sqrt_h = 1.0 / std::sqrt(h);
  Vector out(m);
  for (std::size_t i = 0; i < m; ++i) {
    const double lo = static_cast<double>(i) * h;
    const double hi = static_cast<double>(i + 1) * h;
    out[i] = inv_sqrt_h * big_f(lo, hi);
  }
  return out;
}

}  // namespace detail

/// Exact data y and solution x_true, both projected onto the cell basis.
/// Variant (i) uses y(s) = sin(2 pi s)/(4 pi^2): with the nonnegative Green's
/// kernel this is the image of x(t) = sin(2 pi t).
inline std::pair<Vector, Vector> exact_pair(Variant variant, std::size_t m) {
  if (m < 2) throw Error(ErrorCode::InvalidDimension, "deriv2 requires m >= 2");
  const double pi = std::numbers::pi;
  switch (variant) {
    case Variant::Sine: {
      // int_a^b sin(2 pi t) dt = sin(pi (b-a)) sin(2 pi c) / pi with c the midpoint.
      auto sine_integral = [pi](double lo, double hi) {
        return std::sin(pi * (hi - lo)) * std::sin(pi * (lo + hi)) / pi;
      };
      Vector x = detail::cell_integrals(m, sine_integral);
      Vector y = detail::cell_integrals(
          m, [&](double lo, double hi) { return sine_integral(lo, hi) / (4.0 * pi * pi); });
      return {std::move(y), std::move(x)};
    }
    case Variant::Quartic: {
      auto fy = [](double s) {
        const double s2 = s * s;
        return (s2 / 2.0 - s2 * s2 / 2.0 + s2 * s2 * s / 5.0) / 3.0;
      };
      auto fx = [](double t) { return 2.0 * t * t - 4.0 * t * t * t / 3.0; };
      Vector y = detail::cell_integrals(m, [&](double lo, double hi) { return fy(hi) - fy(lo); });
      Vector x = detail::cell_integrals(m, [&](double lo, double hi) { return fx(hi) - fx(lo); });
      return {std::move(y), std::move(x)};
    }
    case Variant::Linear: {
      auto fy = [](double s) {
        const double s2 = s * s;
        return (s2 / 2.0 - s2 * s2 / 4.0) / 6.0;
      };
      Vector y = detail::cell_integrals(m, [&](double lo, double hi) { return fy(hi) - fy(lo); });
      Vector x = detail::cell_integrals(
          m, [](double lo, double hi) { return 0.5 * (hi - lo) * (hi + lo); });
      return {std::move(y), std::move(x)};
    }
  }
  throw Error(ErrorCode::InvalidVariant, "unknown variant");
}

inline TestProblem make_problem(Variant variant, std::size_t m) {
  TestProblem p;
  p.m = m;
  p.A = galerkin_deriv2(m);
  auto [y, x] = exact_pair(variant, m);
  p.y = std::move(y);
  p.x_true = std::move(x);
  p.variant = variant;
  p.p0 = max_smoothness(variant);
  return p;
}

// ---------------------------------------------------------------------------
// Noise

/// Portable standard-normal stream: std::mt19937_64 (the standard fixes its
/// output sequence), 53-bit uniforms u = (w >> 11) * 2^-53, and the Box-Muller
/// transform using both the cosine and the sine branch.
class GaussianStream {
 public:
  explicit GaussianStream(std::uint64_t seed) : engine_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

 private:
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// y_delta = y + sigma ||y|| e / ||e|| with e ~ N(0, I) from GaussianStream(seed);
/// hence ||y_delta - y|| / ||y|| = sigma and delta = sigma ||y||.
inline NoisyData add_noise(std::span<const double> y, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw Error(ErrorCode::InvalidNoiseLevel, "sigma must be a finite nonnegative number");
  }
  NoisyData out;
  out.sigma = sigma;
  out.seed = seed;
  out.y_delta.assign(y.begin(), y.end());
  if (sigma == 0.0) return out;

  const double ynorm = norm2(y);
  if (ynorm == 0.0) throw Error(ErrorCode::InvalidNoiseLevel, "relative noise on zero data");
  GaussianStream stream(seed);
  Vector e(y.size());
  for (double& v : e) v = stream.next();
  const double factor = sigma * ynorm / norm2(e);
  for (std::size_t i = 0; i < y.size(); ++i) out.y_delta[i] += factor * e[i];
  out.delta = sigma * ynorm;
  return out;
}

}  // namespace hsreg
