#pragma once

// Property suites for the filter, the iteration and the parameter rules.
// Each check records a witness on failure instead of stopping, so one run
// enumerates every violation.

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "hsreg/bench.hpp"
#include "hsreg/filters.hpp"
#include "hsreg/iteration.hpp"
#include "hsreg/param_rules.hpp"

namespace hsreg::verify {

struct Violation {
  std::string module;
  std::string property;
  std::string witness;
};

struct SuiteSummary {
  std::string module;
  std::string property;
  std::size_t checks = 0;
  std::size_t violations = 0;
};

struct VerifyReport {
  std::vector<SuiteSummary> suites;
  std::vector<Violation> violations;
  std::vector<std::string> notes;  ///< logged, never asserted

  bool ok() const { return violations.empty(); }
};

struct VerifyOptions {
  std::size_t filter_sequences = 1000;
  std::size_t oracle_instances = 120;
  std::size_t oracle_max_m = 50;
  std::size_t run_m = 400;
  std::vector<std::uint64_t> run_seeds{1, 2, 3};
  std::uint64_t rng_seed = 20240601;
};

/// Accumulates checks of one (module, property) suite into a report.
class Suite {
 public:
  Suite(VerifyReport& report, std::string module, std::string property)
      : report_(report), summary_{std::move(module), std::move(property)} {}
  Suite(const Suite&) = delete;
  Suite& operator=(const Suite&) = delete;
  ~Suite() { report_.suites.push_back(summary_); }

  void check(bool ok, const std::string& witness) {
    ++summary_.checks;
    if (ok) return;
    ++summary_.violations;
    report_.violations.push_back({summary_.module, summary_.property, witness});
  }

 private:
  VerifyReport& report_;
  SuiteSummary summary_;
};

namespace detail {

inline std::string describe(Variant v, Method m, StartRule s, std::uint64_t seed) {
  std::ostringstream os;
  os << "variant=" << to_string(v) << " method=" << to_string(m) << " start=" << to_string(s)
     << " seed=" << seed;
  return os.str();
}

inline double relative_difference(std::span<const double> a, std::span<const double> b) {
  const double scale = std::max(norm2(b), 1e-300);
  return norm2(subtract(a, b)) / scale;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// filters

inline std::vector<double> log_grid(double lo, double hi, std::size_t count) {
  std::vector<double> g(count);
  for (std::size_t i = 0; i < count; ++i) {
    g[i] = lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1));
  }
  return g;
}

/// Random sequences with n <= 20 and alpha log-uniform in [1e-8, 1e3].
inline AlphaSequence random_sequence(std::mt19937_64& rng, std::size_t max_n, double lo,
                                     double hi) {
  std::uniform_int_distribution<std::size_t> len(1, max_n);
  std::uniform_real_distribution<double> expo(std::log(lo), std::log(hi));
  AlphaSequence seq;
  const std::size_t n = len(rng);
  for (std::size_t k = 0; k < n; ++k) seq.push_back(std::exp(expo(rng)));
  return seq;
}

inline void filter_suites(VerifyReport& report, const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.rng_seed);
  const auto grid = log_grid(1e-10, 1e2, 200);
  {
    Suite suite(report, "filters", "g/r inequalities and l*g + r = 1");
    for (std::size_t i = 0; i < opt.filter_sequences; ++i) {
      const AlphaSequence seq = random_sequence(rng, 20, 1e-8, 1e3);
      const auto rep = check_properties(seq, grid);
      std::ostringstream w;
      w << "n=" << seq.size() << " sigma_n=" << seq.sigma() << " worst lambda=" << rep.worst_lambda
        << " violation=" << rep.max_violation();
      suite.check(rep.max_violation() <= 1e-12, w.str());
    }
  }
  {
    Suite suite(report, "filters", "r_n strictly decreases when a step is appended");
    for (std::size_t i = 0; i < 200; ++i) {
      AlphaSequence seq = random_sequence(rng, 10, 1e-4, 1e1);
      const double lambda = std::exp(std::uniform_real_distribution<double>(-6.0, 1.0)(rng));
      const double before = eval_r(seq, lambda);
      seq.push_back(std::exp(std::uniform_real_distribution<double>(-4.0, 2.0)(rng)));
      const double after = eval_r(seq, lambda);
      std::ostringstream w;
      w << "lambda=" << lambda << " r_{n-1}=" << before << " r_n=" << after;
      suite.check(after < before, w.str());
    }
  }
  {
    Suite suite(report, "filters", "limits of r_n as sigma_n -> infinity and -> 0");
    for (double lambda : {1e-3, 1e-1, 1.0}) {
      const AlphaSequence big(std::vector<double>(10, 1e-12));
      const AlphaSequence small(std::vector<double>(10, 1e12));
      std::ostringstream w;
      w << "lambda=" << lambda << " r(sigma large)=" << eval_r(big, lambda)
        << " r(sigma small)=" << eval_r(small, lambda);
      suite.check(eval_r(big, lambda) < 1e-12 && std::abs(eval_r(small, lambda) - 1.0) < 1e-10,
                  w.str());
    }
  }
}

// ---------------------------------------------------------------------------
// iteration

inline void oracle_suites(VerifyReport& report, const VerifyOptions& opt) {
  std::mt19937_64 rng(opt.rng_seed + 1);
  std::uniform_int_distribution<std::size_t> dim(5, opt.oracle_max_m);
  const double exponents[] = {0.0, 0.5, 1.0, 2.0};
  Suite equivalence(report, "iteration", "implicit iteration equals SVD closed form");
  Suite residual(report, "iteration", "discrepancy equals filtered residual ||r_n(TT^T) r0||");
  for (std::size_t i = 0; i < opt.oracle_instances; ++i) {
    const std::size_t m = dim(rng);
    const double s = exponents[i % 4];
    const TestProblem problem = make_problem(static_cast<Variant>(i % 3), m);
    const ScaleOperator scale(m);
    const RegularizationContext ctx(problem.A, scale, s);
    // Keep alpha within a few decades of ||T||^2 so both routes stay well
    // conditioned for every s.
    const double t_norm_sq = [&] {
      const double mu1 = scale.mu().front();
      const double a_norm = norm2(multiply(problem.A, scale.eigen().eigenvectors.column(0)));
      return a_norm * a_norm / std::pow(mu1, 2.0 * s);
    }();
    AlphaSequence seq;
    std::uniform_int_distribution<std::size_t> len(1, 10);
    std::uniform_real_distribution<double> expo(std::log(1e-4), std::log(1e1));
    const std::size_t n = len(rng);
    for (std::size_t k = 0; k < n; ++k) seq.push_back(t_norm_sq * std::exp(expo(rng)));
    const NoisyData nd = add_noise(problem.y, 0.01, 1000 + i);
    Vector x0(m);
    std::normal_distribution<double> normal(0.0, 0.1);
    for (double& v : x0) v = normal(rng);

    std::ostringstream w;
    w << "m=" << m << " n=" << n << " s=" << s;
    try {
      const Vector iter = iterate_sequence(ctx, seq, nd.y_delta, x0);
      const Vector closed = oracle_solution(problem.A, scale, s, seq, nd.y_delta, x0);
      const double rel = detail::relative_difference(iter, closed);
      equivalence.check(rel <= 1e-8, w.str() + " rel=" + bench::format_double(rel));
      const double d_iter = discrepancy(problem.A, iter, nd.y_delta);
      const double d_oracle = oracle_discrepancy(problem.A, scale, s, seq, nd.y_delta, x0);
      const double rel_d = std::abs(d_iter - d_oracle) / d_oracle;
      residual.check(rel_d <= 1e-8, w.str() + " rel=" + bench::format_double(rel_d));
    } catch (const Error& e) {
      equivalence.check(false, w.str() + " error: " + e.what());
    }
  }
}

/// Monotonicity and parameter-rule structure on deriv2 runs at full size.
template <class Update = DiscrepancyNewtonUpdate>
void run_suites(VerifyReport& report, const VerifyOptions& opt, Update update = {}) {
  Suite disc_mono(report, "iteration", "discrepancy strictly decreasing along runs");
  // Error monotonicity is a property of the implicit iteration; TI/DP
  // restarts Tikhonov from x0 for each parameter and is only logged.
  Suite err_mono(report, "iteration", "IIM ||x_k - x_true||_s decreasing while d_k >= delta");
  Suite bracket(report, "param_rules", "d_n <= C delta < d_{n-1} on termination");
  Suite alpha_dec(report, "param_rules", "IIM/A1 alpha strictly decreasing");
  Suite a1_vs_ti(report, "param_rules", "n(IIM/A1) <= n(TI/DP)");
  Suite bound(report, "param_rules", "TI/DP alpha below the upper bound");
  Suite r_inc(report, "param_rules", "TI/DP Newton reciprocals strictly increasing");
  Suite exchange(report, "param_rules",
                 "IIM/A1 last two alphas swapped: 1/alpha_{n-1} < sigma_{n-2} + 1/alpha_n, "
                 "d(x_{n-1}(alpha_n)) > delta");
  Suite gs44(report, "iteration", "IIM/GS final step obeys 1/alpha_n <= sigma_{n-1}/q");

  IterationConfig icfg;
  for (Variant variant : {Variant::Sine, Variant::Quartic, Variant::Linear}) {
    const TestProblem problem = make_problem(variant, opt.run_m);
    const RegularizationContext ctx(problem.A, build_scale_operator(opt.run_m), icfg.s);
    for (std::uint64_t seed : opt.run_seeds) {
      const NoisyData nd = add_noise(problem.y, 0.01, seed);
      const Observation obs{nd.y_delta, nd.delta, problem.x_true};
      for (StartRule start : {StartRule::Bound, StartRule::One}) {
        const double alpha1 = start_alpha(ctx, obs, Vector(opt.run_m, 0.0), start);
        std::optional<RunReport> ti, a1;
        for (Method method : {Method::TikhonovDp, Method::ImplicitA1, Method::ImplicitGeometric}) {
          const std::string who = detail::describe(variant, method, start, seed);
          RunReport rep;
          try {
            switch (method) {
              case Method::TikhonovDp: rep = newton_dp_tikhonov(ctx, obs, icfg, alpha1, update); break;
              case Method::ImplicitA1: rep = algorithm1(ctx, obs, icfg, alpha1, update); break;
              case Method::ImplicitGeometric: rep = run_geometric(ctx, obs, icfg, alpha1, 0.5); break;
            }
          } catch (const RunError& e) {
            std::ostringstream w;
            w << who << " error: " << e.what() << " alphas:";
            for (const auto& t : e.trace()) w << ' ' << t.alpha;
            if (e.code() == ErrorCode::NewtonBreakdown && method == Method::ImplicitA1) {
              alpha_dec.check(false, w.str());
            } else if (e.code() == ErrorCode::NewtonBreakdown) {
              r_inc.check(false, w.str());
            } else {
              bracket.check(false, w.str());
            }
            continue;
          } catch (const Error& e) {
            bracket.check(false, who + " error: " + e.what());
            continue;
          }

          const auto& tr = rep.trace;
          // For TI/DP the trace holds Tikhonov solutions for decreasing
          // parameters, whose discrepancies must also decrease.
          for (std::size_t k = 0; k < tr.size(); ++k) {
            const double prev_d = k ? tr[k - 1].d : rep.d0;
            const double prev_e = k ? tr[k - 1].e_s : rep.e0_s;
            disc_mono.check(tr[k].d < prev_d, who + " k=" + std::to_string(k + 1) + " d_k=" +
                                                  bench::format_double(tr[k].d) + " d_{k-1}=" +
                                                  bench::format_double(prev_d));
            if (tr[k].d >= rep.delta && method == Method::TikhonovDp) {
              if (!(tr[k].e_s < prev_e)) {
                report.notes.push_back(who + " k=" + std::to_string(k + 1) +
                                       " Tikhonov error grew in the s-norm: " +
                                       bench::format_double(prev_e) + " -> " +
                                       bench::format_double(tr[k].e_s));
              }
            } else if (tr[k].d >= rep.delta) {
              err_mono.check(tr[k].e_s < prev_e,
                             who + " k=" + std::to_string(k + 1) + " e_s=" +
                                 bench::format_double(tr[k].e_s) + " prev=" +
                                 bench::format_double(prev_e));
            }
          }
          const double threshold = rep.C * rep.delta;
          const double prev_d = tr.size() >= 2 ? tr[tr.size() - 2].d : rep.d0;
          bracket.check(rep.d_n <= threshold && prev_d > threshold,
                        who + " d_n=" + bench::format_double(rep.d_n) + " d_{n-1}=" +
                            bench::format_double(prev_d) + " C*delta=" +
                            bench::format_double(threshold));

          if (method == Method::ImplicitA1) {
            bool dec = true;
            for (std::size_t k = 1; k < tr.size(); ++k) dec = dec && tr[k].alpha < tr[k - 1].alpha;
            std::ostringstream w;
            w << who << " alphas:";
            for (const auto& t : tr) w << ' ' << t.alpha;
            alpha_dec.check(dec, w.str());
            if (rep.n >= 2) {
              // After swapping the final pair the sequence ends with alpha_{n-1},
              // and the previous sum becomes sigma_{n-2} + 1/alpha_n.
              const double inv_last = 1.0 / tr.back().alpha;
              const double inv_prev = 1.0 / tr[tr.size() - 2].alpha;
              const double sigma_before = tr[tr.size() - 2].sigma - inv_prev;
              const double c = inv_prev / (sigma_before + inv_last);
              exchange.check(c < 1.0 && *rep.exchange_discrepancy > rep.delta,
                             who + " c=" + bench::format_double(c) + " d_swap=" +
                                 bench::format_double(*rep.exchange_discrepancy) +
                                 " delta=" + bench::format_double(rep.delta));
              report.notes.push_back(who + " unswapped (1/alpha_n)/sigma_{n-1}=" +
                                     bench::format_double(*rep.exchange_ratio) +
                                     " swapped c=" + bench::format_double(c) +
                                     " d_swap/delta=" +
                                     bench::format_double(*rep.exchange_discrepancy / rep.delta));
            }
            a1 = rep;
          } else if (method == Method::TikhonovDp) {
            bound.check(rep.alpha_n < *rep.alpha_bound,
                        who + " alpha_n=" + bench::format_double(rep.alpha_n) + " bound=" +
                            bench::format_double(*rep.alpha_bound));
            bool inc = true;
            for (std::size_t k = 1; k < rep.newton_r.size(); ++k)
              inc = inc && rep.newton_r[k] > rep.newton_r[k - 1];
            r_inc.check(inc, who);
            ti = rep;
          } else if (rep.condition44) {
            gs44.check(*rep.condition44, who);
          }
        }
        if (ti && a1) {
          a1_vs_ti.check(a1->n <= ti->n, detail::describe(variant, Method::ImplicitA1, start, seed) +
                                             " n_A1=" + std::to_string(a1->n) +
                                             " n_TI=" + std::to_string(ti->n));
        }
      }
    }
  }
}

inline void apriori_suite(VerifyReport& report) {
  Suite suite(report, "param_rules", "a priori rule: power and general paths agree");
  for (double a : {1.0, 2.0, 3.0}) {
    for (double p : {0.5, 1.0, 2.5}) {
      for (double s : {0.0, 1.0, 2.0}) {
        for (double delta : {1e-2, 1e-4, 1e-6}) {
          AprioriInputs in;
          in.p = p;
          in.E = 1.5;
          in.m_link = 0.1;
          in.s = s;
          in.delta = delta;
          in.rho = IndexFunction::custom([a](double t) { return std::pow(t, a); }, 10.0);
          const double general = apriori_sigma_inv(in);
          in.a = a;
          const double power = apriori_sigma_inv(in);
          const double rel = std::abs(general - power) / power;
          std::ostringstream w;
          w << "a=" << a << " p=" << p << " s=" << s << " delta=" << delta << " rel=" << rel;
          suite.check(rel <= 1e-10, w.str());
        }
      }
    }
  }
}

template <class Update = DiscrepancyNewtonUpdate>
VerifyReport run_verify(const VerifyOptions& opt = {}, Update update = {}) {
  VerifyReport report;
  filter_suites(report, opt);
  oracle_suites(report, opt);
  run_suites(report, opt, update);
  apriori_suite(report);
  return report;
}

inline std::string format_report(const VerifyReport& r) {
  std::ostringstream os;
  for (const auto& s : r.suites) {
    os << (s.violations ? "FAIL " : "ok   ") << s.module << ": " << s.property << " ("
       << s.checks << " checks, " << s.violations << " violations)\n";
  }
  for (const auto& v : r.violations) {
    os << "violation [" << v.module << "] " << v.property << ": " << v.witness << '\n';
  }
  for (const auto& n : r.notes) os << "note: " << n << '\n';
  return os.str();
}

}  // namespace hsreg::verify
