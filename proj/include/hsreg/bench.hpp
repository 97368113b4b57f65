#pragma once

// Experiment drivers behind the command-line tool: flat key=value configs,
// the method x start x seed table sweep, the noise-ladder rate study and
// CSV / markdown serialization.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "hsreg/param_rules.hpp"
#include "hsreg/problems.hpp"

namespace hsreg::bench {

// ---------------------------------------------------------------------------
// Formatting

/// Shortest decimal that round-trips to the same double.
inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

inline std::string format_sci(double v, int digits = 3) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*e", digits - 1, v);
  return buf;
}

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

// ---------------------------------------------------------------------------
// key=value configuration

struct ConfigEntry {
  std::string key;
  std::string value;
  std::size_t line = 0;  ///< 0 for command-line overrides
};

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

/// Lines are `key = value`; `#` starts a comment; `[name]` section headers are
/// accepted and ignored (the format is flat).
inline std::vector<ConfigEntry> parse_key_values(std::istream& in) {
  std::vector<ConfigEntry> out;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string text = trim(std::string_view(raw).substr(0, hash));
    if (text.empty()) continue;
    if (text.front() == '[' && text.back() == ']') continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(text, line, "expected key = value");
    }
    ConfigEntry e{trim(std::string_view(text).substr(0, eq)),
                  trim(std::string_view(text).substr(eq + 1)), line};
    if (e.key.empty()) throw ConfigError("", line, "missing key");
    out.push_back(std::move(e));
  }
  return out;
}

namespace detail {

inline double parse_real(const ConfigEntry& e) {
  double v = 0.0;
  const char* first = e.value.data();
  const char* last = first + e.value.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last || !std::isfinite(v)) {
    throw ConfigError(e.key, e.line, "expected a real number, got '" + e.value + "'");
  }
  return v;
}

inline std::uint64_t parse_unsigned(const ConfigEntry& e, std::string_view text) {
  std::uint64_t v = 0;
  const char* first = text.data();
  const char* last = first + text.size();
  const auto res = std::from_chars(first, last, v);
  if (res.ec != std::errc() || res.ptr != last) {
    throw ConfigError(e.key, e.line, "expected an unsigned integer, got '" + std::string(text) + "'");
  }
  return v;
}

inline std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> parts;
  std::size_t start = 0;
  while (start <= s.size()) {
    const auto comma = s.find(',', start);
    const auto piece = trim(s.substr(start, comma == std::string_view::npos ? s.npos : comma - start));
    if (!piece.empty()) parts.push_back(piece);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return parts;
}

/// "1..10" ranges and comma lists.
inline std::vector<std::uint64_t> parse_seeds(const ConfigEntry& e) {
  std::vector<std::uint64_t> seeds;
  for (const auto& part : split_list(e.value)) {
    const auto dots = part.find("..");
    if (dots != std::string::npos) {
      const auto lo = parse_unsigned(e, std::string_view(part).substr(0, dots));
      const auto hi = parse_unsigned(e, std::string_view(part).substr(dots + 2));
      if (hi < lo) throw ConfigError(e.key, e.line, "empty seed range '" + part + "'");
      for (auto s = lo; s <= hi; ++s) seeds.push_back(s);
    } else {
      seeds.push_back(parse_unsigned(e, part));
    }
  }
  if (seeds.empty()) throw ConfigError(e.key, e.line, "no seeds given");
  std::sort(seeds.begin(), seeds.end());
  seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
  return seeds;
}

inline std::vector<Method> parse_methods(const ConfigEntry& e) {
  if (e.value == "all") {
    return {Method::TikhonovDp, Method::ImplicitA1, Method::ImplicitGeometric};
  }
  std::vector<Method> out;
  for (const auto& part : split_list(e.value)) {
    auto m = parse_method(part);
    if (!m) throw ConfigError(e.key, e.line, "unknown method '" + part + "'");
    if (std::find(out.begin(), out.end(), *m) == out.end()) out.push_back(*m);
  }
  if (out.empty()) throw ConfigError(e.key, e.line, "no methods given");
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<StartRule> parse_starts(const ConfigEntry& e) {
  if (e.value == "both" || e.value == "all") return {StartRule::Bound, StartRule::One};
  std::vector<StartRule> out;
  for (const auto& part : split_list(e.value)) {
    StartRule r;
    if (part == "bound") r = StartRule::Bound;
    else if (part == "one") r = StartRule::One;
    else throw ConfigError(e.key, e.line, "unknown start '" + part + "' (bound|one|both)");
    if (std::find(out.begin(), out.end(), r) == out.end()) out.push_back(r);
  }
  if (out.empty()) throw ConfigError(e.key, e.line, "no start rule given");
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace detail

struct ExperimentConfig {
  Variant variant = Variant::Sine;
  std::size_t m = 400;
  double sigma = 0.01;
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Method> methods{Method::TikhonovDp, Method::ImplicitA1, Method::ImplicitGeometric};
  std::vector<StartRule> starts{StartRule::Bound, StartRule::One};
  double s = 1.0;
  double C = 1.1;
  double q = 0.5;
  std::size_t max_iter = 100;

  void apply(const ConfigEntry& e) {
    const std::string& k = e.key;
    try {
      if (k == "variant") variant = parse_variant(e.value);
      else if (k == "m") m = detail::parse_unsigned(e, e.value);
      else if (k == "sigma") sigma = detail::parse_real(e);
      else if (k == "seed" || k == "seeds") seeds = detail::parse_seeds(e);
      else if (k == "method" || k == "methods") methods = detail::parse_methods(e);
      else if (k == "start" || k == "starts") starts = detail::parse_starts(e);
      else if (k == "s") s = detail::parse_real(e);
      else if (k == "C") C = detail::parse_real(e);
      else if (k == "q") q = detail::parse_real(e);
      else if (k == "max_iter") max_iter = detail::parse_unsigned(e, e.value);
      else throw ConfigError(k, e.line, "unknown key");
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(k, e.line, err.what());
    }
  }

  void validate() const {
    if (m < 2) throw ConfigError("m", 0, "must be >= 2");
    if (!(sigma >= 0.0)) throw ConfigError("sigma", 0, "must be >= 0");
    if (!(C >= 1.0)) throw ConfigError("C", 0, "must be >= 1");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("q", 0, "must lie in (0, 1)");
    if (max_iter < 1) throw ConfigError("max_iter", 0, "must be >= 1");
    if (seeds.empty()) throw ConfigError("seeds", 0, "no seeds");
  }
};

inline ExperimentConfig experiment_from_entries(const std::vector<ConfigEntry>& entries,
                                                ExperimentConfig base = {}) {
  for (const auto& e : entries) base.apply(e);
  base.validate();
  return base;
}

// ---------------------------------------------------------------------------
// One run of a method

inline RunReport run_method(Method method, StartRule start, const RegularizationContext& ctx,
                            const Observation& obs, const IterationConfig& cfg, double q) {
  const Vector x0 = cfg.x0.empty() ? Vector(ctx.dim(), 0.0) : cfg.x0;
  // The bound needs ||y - A x0|| > delta; otherwise the runners return the
  // n = 0 report and the start value is never used.
  double alpha1 = 1.0;
  if (start == StartRule::Bound && obs.delta > 0.0 &&
      ctx.discrepancy(x0, obs.y_delta) > std::max(cfg.C, 1.0) * obs.delta) {
    alpha1 = start_alpha(ctx, obs, x0, StartRule::Bound);
  }
  switch (method) {
    case Method::TikhonovDp: return newton_dp_tikhonov(ctx, obs, cfg, alpha1);
    case Method::ImplicitA1: return algorithm1(ctx, obs, cfg, alpha1);
    case Method::ImplicitGeometric: return run_geometric(ctx, obs, cfg, alpha1, q);
  }
  throw Error(ErrorCode::Domain, "unknown method");
}

// ---------------------------------------------------------------------------
// Tables

struct TableRow {
  Method method = Method::ImplicitA1;
  StartRule start = StartRule::Bound;
  std::uint64_t seed = 0;
  std::optional<RunReport> report;
  std::optional<ErrorCode> failure;
  std::string failure_message;
};

struct TableResult {
  ExperimentConfig config;
  double y_norm = 0.0;
  double delta = 0.0;
  std::vector<TableRow> rows;  ///< ordered by start, method, seed
};

inline TableResult run_tables(const ExperimentConfig& cfg) {
  cfg.validate();
  const TestProblem problem = make_problem(cfg.variant, cfg.m);
  const RegularizationContext ctx(problem.A, build_scale_operator(cfg.m), cfg.s);
  IterationConfig icfg;
  icfg.s = cfg.s;
  icfg.C = cfg.C;
  icfg.max_iter = cfg.max_iter;

  TableResult result;
  result.config = cfg;
  result.y_norm = norm2(problem.y);
  result.delta = cfg.sigma * result.y_norm;

  std::vector<NoisyData> noisy;
  noisy.reserve(cfg.seeds.size());
  for (auto seed : cfg.seeds) noisy.push_back(add_noise(problem.y, cfg.sigma, seed));

  for (StartRule start : cfg.starts) {
    for (Method method : cfg.methods) {
      for (std::size_t i = 0; i < cfg.seeds.size(); ++i) {
        TableRow row;
        row.method = method;
        row.start = start;
        row.seed = cfg.seeds[i];
        const Observation obs{noisy[i].y_delta, noisy[i].delta, problem.x_true};
        try {
          row.report = run_method(method, start, ctx, obs, icfg, cfg.q);
        } catch (const Error& e) {
          row.failure = e.code();
          row.failure_message = e.what();
        }
        result.rows.push_back(std::move(row));
      }
    }
  }
  return result;
}

struct CellSummary {
  Method method;
  StartRule start;
  std::size_t runs = 0;
  std::size_t failures = 0;
  double n = std::numeric_limits<double>::quiet_NaN();
  double alpha_n = std::numeric_limits<double>::quiet_NaN();
  double sigma_n = std::numeric_limits<double>::quiet_NaN();
  double d_n = std::numeric_limits<double>::quiet_NaN();
  double e_n = std::numeric_limits<double>::quiet_NaN();
  std::vector<RunStatus> statuses;
};

/// Across-seed medians per (start, method), in table order.
inline std::vector<CellSummary> summarize(const TableResult& t) {
  std::vector<CellSummary> out;
  for (StartRule start : t.config.starts) {
    for (Method method : t.config.methods) {
      CellSummary c;
      c.method = method;
      c.start = start;
      std::vector<double> n, a, sg, d, e;
      for (const auto& row : t.rows) {
        if (row.method != method || row.start != start) continue;
        ++c.runs;
        if (!row.report) {
          ++c.failures;
          continue;
        }
        const RunReport& r = *row.report;
        n.push_back(static_cast<double>(r.n));
        if (r.n > 0) a.push_back(r.alpha_n);
        sg.push_back(r.sigma_n);
        d.push_back(r.d_n);
        e.push_back(r.e_n);
        if (std::find(c.statuses.begin(), c.statuses.end(), r.status) == c.statuses.end())
          c.statuses.push_back(r.status);
      }
      c.n = median(n);
      c.alpha_n = median(a);
      c.sigma_n = median(sg);
      c.d_n = median(d);
      c.e_n = median(e);
      out.push_back(std::move(c));
    }
  }
  return out;
}

inline constexpr std::string_view kTableCsvHeader = "method,start,seed,n,alpha_n,sigma_n,d_n,e_n";

inline std::string tables_csv(const TableResult& t) {
  std::ostringstream os;
  os << kTableCsvHeader << '\n';
  for (const auto& row : t.rows) {
    os << to_string(row.method) << ',' << to_string(row.start) << ',' << row.seed << ',';
    if (!row.report) {
      os << "failed:" << to_string(*row.failure) << ",,,,\n";
      continue;
    }
    const RunReport& r = *row.report;
    os << r.n << ',' << format_double(r.alpha_n) << ',' << format_double(r.sigma_n) << ','
       << format_double(r.d_n) << ',' << format_double(r.e_n) << '\n';
  }
  for (const auto& c : summarize(t)) {
    os << to_string(c.method) << ',' << to_string(c.start) << ",median," << format_double(c.n)
       << ',' << format_double(c.alpha_n) << ',' << format_double(c.sigma_n) << ','
       << format_double(c.d_n) << ',' << format_double(c.e_n) << '\n';
  }
  return os.str();
}

inline std::string tables_markdown(const TableResult& t) {
  std::ostringstream os;
  const auto& cfg = t.config;
  os << "# deriv2 (" << to_string(cfg.variant) << "), m = " << cfg.m << ", sigma = "
     << format_double(cfg.sigma) << ", delta = " << format_sci(t.delta) << "\n\n"
     << "Medians over " << cfg.seeds.size() << " noise seeds; s = " << format_double(cfg.s)
     << ", C = " << format_double(cfg.C) << ", q = " << format_double(cfg.q) << ".\n";
  std::vector<std::string> notes;
  const auto cells = summarize(t);
  for (StartRule start : cfg.starts) {
    os << "\n## alpha_1 " << (start == StartRule::Bound ? "from the upper bound (C = 1)" : "= 1")
       << "\n\n| method | n | alpha_n | d_n | e_n |\n|---|---|---|---|---|\n";
    for (const auto& c : cells) {
      if (c.start != start) continue;
      os << "| " << to_string(c.method) << " | " << format_double(c.n) << " | "
         << format_sci(c.alpha_n) << " | " << format_sci(c.d_n) << " | " << format_sci(c.e_n)
         << " |\n";
      if (c.failures) {
        notes.push_back(std::string(to_string(c.method)) + " (" + std::string(to_string(start)) +
                        "): " + std::to_string(c.failures) + " of " + std::to_string(c.runs) +
                        " runs failed");
      }
      for (auto st : c.statuses) {
        if (st == RunStatus::Converged) continue;
        notes.push_back(std::string(to_string(c.method)) + " (" + std::string(to_string(start)) +
                        "): " + std::string(to_string(st)) + " runs present (n = 0)");
      }
    }
  }
  if (!notes.empty()) {
    os << "\nNotes:\n\n";
    for (const auto& n : notes) os << "- " << n << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Rate study

struct RateStudyConfig {
  Variant variant = Variant::Quartic;
  std::size_t m = 400;
  std::vector<double> sigmas{1e-2, 3e-3, 1e-3, 3e-4, 1e-4};
  std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  std::vector<Method> methods{Method::ImplicitA1};
  StartRule start = StartRule::Bound;
  double s = 1.0;
  double C = 1.1;
  double q = 0.5;
  std::size_t max_iter = 200;

  void apply(const ConfigEntry& e) {
    const std::string& k = e.key;
    try {
      if (k == "variant") variant = parse_variant(e.value);
      else if (k == "m") m = detail::parse_unsigned(e, e.value);
      else if (k == "levels" || k == "sigma") {
        sigmas.clear();
        for (const auto& part : detail::split_list(e.value))
          sigmas.push_back(detail::parse_real({e.key, part, e.line}));
      }
      else if (k == "seed" || k == "seeds") seeds = detail::parse_seeds(e);
      else if (k == "method" || k == "methods") methods = detail::parse_methods(e);
      else if (k == "start") {
        const auto starts = detail::parse_starts(e);
        if (starts.size() != 1) throw ConfigError(k, e.line, "rate studies take one start rule");
        start = starts.front();
      }
      else if (k == "s") s = detail::parse_real(e);
      else if (k == "C") C = detail::parse_real(e);
      else if (k == "q") q = detail::parse_real(e);
      else if (k == "max_iter") max_iter = detail::parse_unsigned(e, e.value);
      else throw ConfigError(k, e.line, "unknown key");
    } catch (const ConfigError&) {
      throw;
    } catch (const Error& err) {
      throw ConfigError(k, e.line, err.what());
    }
  }

  void validate() const {
    if (m < 2) throw ConfigError("m", 0, "must be >= 2");
    if (!(C >= 1.0)) throw ConfigError("C", 0, "must be >= 1");
    if (!(q > 0.0 && q < 1.0)) throw ConfigError("q", 0, "must lie in (0, 1)");
    if (sigmas.size() < 4) throw ConfigError("levels", 0, "need at least 4 noise levels");
    for (std::size_t i = 0; i < sigmas.size(); ++i) {
      if (!(sigmas[i] > 0.0)) throw ConfigError("levels", 0, "noise levels must be positive");
      if (i && !(sigmas[i] < sigmas[i - 1])) {
        throw ConfigError("levels", 0, "noise levels must be strictly decreasing");
      }
    }
    if (seeds.empty()) throw ConfigError("seeds", 0, "no seeds");
  }

  /// p0 / (a + p0) with a = 2; none when p0 is unbounded (rate limited by
  /// the method's qualification instead).
  std::optional<double> expected_slope() const {
    const double p0 = max_smoothness(variant);
    if (!std::isfinite(p0)) return std::nullopt;
    return p0 / (2.0 + p0);
  }
};

struct RateRun {
  std::uint64_t seed = 0;
  std::optional<RunReport> report;
  std::optional<ErrorCode> failure;
};

struct RateLevel {
  double sigma = 0.0;
  double delta = 0.0;
  std::vector<RateRun> runs;
  double median_e = std::numeric_limits<double>::quiet_NaN();
  double median_n = std::numeric_limits<double>::quiet_NaN();
};

struct LinearFit {
  double slope = std::numeric_limits<double>::quiet_NaN();
  double intercept = std::numeric_limits<double>::quiet_NaN();
  double rms_residual = std::numeric_limits<double>::quiet_NaN();
};

/// Least squares y = intercept + slope x.
inline LinearFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  LinearFit f;
  const std::size_t n = x.size();
  if (n < 2 || y.size() != n) return f;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  double ss = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double r = y[i] - (f.intercept + f.slope * x[i]);
    ss += r * r;
  }
  f.rms_residual = std::sqrt(ss / static_cast<double>(n));
  return f;
}

struct MethodRates {
  Method method;
  std::vector<RateLevel> levels;
  LinearFit fit;  ///< log median e_n against log delta
};

struct RateStudy {
  RateStudyConfig config;
  std::vector<MethodRates> methods;
  bool aborted = false;
  std::string abort_reason;
};

inline RateStudy run_rates(const RateStudyConfig& cfg) {
  cfg.validate();
  const TestProblem problem = make_problem(cfg.variant, cfg.m);
  const RegularizationContext ctx(problem.A, build_scale_operator(cfg.m), cfg.s);
  IterationConfig icfg;
  icfg.s = cfg.s;
  icfg.C = cfg.C;
  icfg.max_iter = cfg.max_iter;
  const double ynorm = norm2(problem.y);

  RateStudy study;
  study.config = cfg;
  for (Method method : cfg.methods) {
    MethodRates mr{method, {}, {}};
    std::vector<double> log_delta, log_e;
    for (double sigma : cfg.sigmas) {
      RateLevel level;
      level.sigma = sigma;
      level.delta = sigma * ynorm;
      std::vector<double> es, ns;
      for (auto seed : cfg.seeds) {
        const NoisyData nd = add_noise(problem.y, sigma, seed);
        RateRun run;
        run.seed = seed;
        try {
          run.report = run_method(method, cfg.start, ctx, {nd.y_delta, nd.delta, problem.x_true},
                                  icfg, cfg.q);
          es.push_back(run.report->e_n);
          ns.push_back(static_cast<double>(run.report->n));
        } catch (const Error& e) {
          run.failure = e.code();
        }
        level.runs.push_back(std::move(run));
      }
      level.median_e = median(es);
      level.median_n = median(ns);
      const bool all_failed = es.empty();
      mr.levels.push_back(std::move(level));
      if (all_failed) {
        study.aborted = true;
        study.abort_reason = std::string(to_string(method)) + ": every run failed at sigma = " +
                             format_double(sigma);
        study.methods.push_back(std::move(mr));
        return study;
      }
      log_delta.push_back(std::log(mr.levels.back().delta));
      log_e.push_back(std::log(mr.levels.back().median_e));
    }
    mr.fit = fit_line(log_delta, log_e);
    study.methods.push_back(std::move(mr));
  }
  return study;
}

inline constexpr std::string_view kRatesCsvHeader = "method,sigma,delta,seed,n,alpha_n,d_n,e_n";

inline std::string rates_csv(const RateStudy& study) {
  std::ostringstream os;
  os << kRatesCsvHeader << '\n';
  for (const auto& mr : study.methods) {
    for (const auto& level : mr.levels) {
      for (const auto& run : level.runs) {
        os << to_string(mr.method) << ',' << format_double(level.sigma) << ','
           << format_double(level.delta) << ',' << run.seed << ',';
        if (!run.report) {
          os << "failed:" << to_string(*run.failure) << ",,,\n";
          continue;
        }
        const RunReport& r = *run.report;
        os << r.n << ',' << format_double(r.alpha_n) << ',' << format_double(r.d_n) << ','
           << format_double(r.e_n) << '\n';
      }
      os << to_string(mr.method) << ',' << format_double(level.sigma) << ','
         << format_double(level.delta) << ",median," << format_double(level.median_n) << ",,,"
         << format_double(level.median_e) << '\n';
    }
  }
  return os.str();
}

inline std::string rates_markdown(const RateStudy& study) {
  std::ostringstream os;
  const auto& cfg = study.config;
  os << "# Convergence rates, deriv2 (" << to_string(cfg.variant) << "), m = " << cfg.m << "\n\n";
  if (auto e = cfg.expected_slope()) {
    os << "Expected slope p0/(a+p0) = " << format_double(*e) << "\n\n";
  } else {
    os << "Expected slope: unbounded smoothness, limited by qualification\n\n";
  }
  os << "| method | slope | rms residual |\n|---|---|---|\n";
  for (const auto& mr : study.methods) {
    os << "| " << to_string(mr.method) << " | " << format_sci(mr.fit.slope, 4) << " | "
       << format_sci(mr.fit.rms_residual, 3) << " |\n";
  }
  if (study.aborted) os << "\nAborted: " << study.abort_reason << '\n';
  return os.str();
}

}  // namespace hsreg::bench
