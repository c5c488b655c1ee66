#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>

#include "config_access.hpp"
#include "gpconc/bounds.hpp"
#include "gpconc/concentration.hpp"
#include "gpconc/conditioning.hpp"
#include "gpconc/errors.hpp"
#include "gpconc/parallel.hpp"
#include "gpconc/sampling.hpp"

namespace gpconc {

namespace {

using config::cell;
using config::cell_flag;
using nlohmann::json;

enum class FitModel { Polynomial, Exponential };

struct FitConfig {
  FitModel model = FitModel::Polynomial;
  double alpha = 1.0;  // exponential shape exponent
  std::size_t from = 1;
  std::size_t to = 0;
  double min_r2 = 0.9;
};

struct CheckConfig {
  std::optional<double> max_loglog_slope;
  std::optional<double> min_r2;
  bool concave_log_bound = false;
};

struct SamplerConfig {
  bool newton = false;
  double tail_budget = 1e-6;
  double residual_tol = 1e-80;
  std::size_t max_terms = 0;
};

struct TraceConfig {
  KernelSpec kernel = KernelSpec::gaussian(1);
  std::size_t points_per_axis = 0;
  std::size_t steps = 0;
  Precision precision = Precision::Double;
  FitConfig fit;
  CheckConfig checks;
};

struct GpConfig {
  TraceConfig trace;
  std::vector<std::size_t> schedule;
  std::vector<double> taus;
  std::size_t replicates = 0;
  SamplerConfig sampler;
};

Precision parse_precision(const json& obj, const std::string& where) {
  const std::string p = config::text(obj, "precision", where, std::string("double"));
  if (p == "double") return Precision::Double;
  if (p == "high") return Precision::High;
  config::fail(where + ".precision", "must be 'double' or 'high'");
}

FitConfig parse_fit(const json& cfg, std::size_t steps) {
  FitConfig fit;
  fit.to = steps;
  if (!config::has(cfg, "fit")) return fit;
  const json& f = config::object(cfg, "fit", "config");
  config::allow_keys(f, {"model", "alpha", "range", "min_r2"}, "config.fit");
  const std::string model = config::text(f, "model", "config.fit", std::string("polynomial"));
  if (model == "polynomial") {
    fit.model = FitModel::Polynomial;
  } else if (model == "exponential") {
    fit.model = FitModel::Exponential;
  } else {
    config::fail("config.fit.model", "must be 'polynomial' or 'exponential'");
  }
  fit.alpha = config::number(f, "alpha", "config.fit", 1.0);
  if (fit.alpha < 1.0) config::fail("config.fit.alpha", "must be >= 1");
  if (config::has(f, "range")) {
    const auto range = config::counts(f, "range", "config.fit");
    if (range.size() != 2 || range[0] >= range[1] || range[1] > steps) {
      config::fail("config.fit.range", "must be [lo, hi] with lo < hi <= greedy steps");
    }
    fit.from = range[0];
    fit.to = range[1];
  }
  fit.min_r2 = config::number(f, "min_r2", "config.fit", 0.9);
  return fit;
}

CheckConfig parse_checks(const json& cfg) {
  CheckConfig c;
  if (!config::has(cfg, "checks")) return c;
  const json& obj = config::object(cfg, "checks", "config");
  config::allow_keys(obj, {"max_loglog_slope", "min_r2", "concave_log_bound"}, "config.checks");
  if (config::has(obj, "max_loglog_slope")) c.max_loglog_slope = config::number(obj, "max_loglog_slope", "config.checks");
  if (config::has(obj, "min_r2")) c.min_r2 = config::number(obj, "min_r2", "config.checks");
  c.concave_log_bound = config::flag(obj, "concave_log_bound", "config.checks", false);
  return c;
}

TraceConfig parse_trace(const json& cfg, std::optional<std::size_t> default_steps) {
  TraceConfig t;
  t.kernel = config::kernel(config::object(cfg, "kernel", "config"), "config.kernel");
  const json& grid = config::object(cfg, "grid", "config");
  config::allow_keys(grid, {"points_per_axis"}, "config.grid");
  t.points_per_axis = config::count(grid, "points_per_axis", "config.grid");
  if (t.points_per_axis < 2) config::fail("config.grid.points_per_axis", "must be at least 2");
  json greedy = json::object();
  if (config::has(cfg, "greedy")) greedy = config::object(cfg, "greedy", "config");
  config::allow_keys(greedy, {"steps", "precision"}, "config.greedy");
  t.steps = config::count(greedy, "steps", "config.greedy", default_steps);
  if (t.steps < 2) config::fail("config.greedy.steps", "must be at least 2");
  t.precision = parse_precision(greedy, "config.greedy");
  t.fit = parse_fit(cfg, t.steps);
  t.checks = parse_checks(cfg);
  return t;
}

SamplerConfig parse_sampler(const json& cfg, std::size_t steps) {
  SamplerConfig s;
  s.max_terms = 4 * steps;
  if (!config::has(cfg, "sampler")) return s;
  const json& obj = config::object(cfg, "sampler", "config");
  config::allow_keys(obj, {"type", "tail_budget", "residual_tol", "max_terms"}, "config.sampler");
  const std::string type = config::text(obj, "type", "config.sampler", std::string("kl"));
  if (type == "newton") {
    s.newton = true;
  } else if (type != "kl") {
    config::fail("config.sampler.type", "must be 'kl' or 'newton'");
  }
  s.tail_budget = config::number(obj, "tail_budget", "config.sampler", s.tail_budget);
  if (!(s.tail_budget > 0.0 && s.tail_budget <= 0.05)) config::fail("config.sampler.tail_budget", "must lie in (0, 0.05]");
  s.residual_tol = config::number(obj, "residual_tol", "config.sampler", s.residual_tol);
  if (!(s.residual_tol > 0.0)) config::fail("config.sampler.residual_tol", "must be positive");
  s.max_terms = config::count(obj, "max_terms", "config.sampler", s.max_terms);
  if (s.max_terms < steps) config::fail("config.sampler.max_terms", "must be at least the greedy step count");
  return s;
}

std::vector<double> parse_taus(const json& cfg) {
  auto taus = config::numbers(cfg, "taus", "config");
  if (taus.empty()) throw Error(ErrorKind::EmptySchedule, "config.taus: tau list is empty");
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) config::fail("config.taus", "every tau must be positive and finite");
  }
  return taus;
}

std::vector<std::size_t> parse_schedule(const json& cfg, std::size_t min_n) {
  auto schedule = config::counts(cfg, "schedule", "config");
  if (schedule.empty()) throw Error(ErrorKind::EmptySchedule, "config.schedule: n schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < min_n) config::fail("config.schedule", "entries must be >= " + std::to_string(min_n));
    if (i > 0 && schedule[i] <= schedule[i - 1]) config::fail("config.schedule", "must be strictly increasing");
  }
  return schedule;
}

GpConfig parse_gp(const json& cfg) {
  config::allow_keys(cfg,
                     {"experiment", "seed", "kernel", "grid", "greedy", "fit", "checks", "schedule", "taus",
                      "replicates", "sampler"},
                     "config");
  GpConfig g;
  g.schedule = parse_schedule(cfg, 1);
  g.trace = parse_trace(cfg, g.schedule.back());
  if (g.schedule.back() > g.trace.steps) config::fail("config.schedule", "entries must not exceed greedy.steps");
  g.taus = parse_taus(cfg);
  g.replicates = config::count(cfg, "replicates", "config", 0);
  g.sampler = parse_sampler(cfg, g.trace.steps);
  return g;
}

/// Regression of the trace together with the tail continuation it implies.
struct TraceFit {
  FitModel model = FitModel::Polynomial;
  std::optional<PolynomialFit> poly;
  std::optional<ExponentialFit> expo;
  bool accepted = false;
  std::string status;

  [[nodiscard]] double r2() const { return poly ? poly->r2 : expo->r2; }

  /// c(x) for real x >= N, anchored at the last measured value c_N.
  [[nodiscard]] std::function<double(double)> continuation(double cN, std::size_t N) const {
    const double n0 = static_cast<double>(N);
    if (poly) {
      const double alpha = poly->alpha;
      return [=](double x) { return cN * std::pow((x + 1.0) / (n0 + 1.0), -alpha); };
    }
    const double C2 = expo->C2;
    const double inv = 1.0 / expo->alpha;
    return [=](double x) { return cN * std::exp(-C2 * (std::pow(x, inv) - std::pow(n0, inv))); };
  }

  [[nodiscard]] double model_value(double n) const {
    if (poly) return std::exp(poly->log_C) * std::pow(n + 1.0, -poly->alpha);
    return std::exp(expo->log_C1 - expo->C2 * std::pow(n, 1.0 / expo->alpha));
  }
};

TraceFit fit_trace(const std::vector<double>& trace, const FitConfig& fc) {
  TraceFit f;
  f.model = fc.model;
  if (fc.model == FitModel::Polynomial) {
    f.poly = fit_polynomial(trace, fc.from, fc.to);
    if (!(f.poly->alpha > 1.0)) {
      throw Error(ErrorKind::FitFailure, "fitted polynomial exponent " + format_number(f.poly->alpha) +
                                             " does not exceed 1, so the trace has no summable continuation");
    }
  } else {
    f.expo = fit_exponential(trace, fc.alpha, fc.from, fc.to);
    if (!(f.expo->C2 > 0.0)) {
      throw Error(ErrorKind::FitFailure, "fitted exponential rate is not positive");
    }
  }
  f.accepted = f.r2() >= fc.min_r2;
  f.status = f.accepted ? "accepted" : "rejected: r2 " + format_number(f.r2()) + " below " + format_number(fc.min_r2);
  return f;
}

void summarize_fit(const TraceFit& f, ExperimentReport& report) {
  auto& s = report.summary;
  if (f.poly) {
    s.emplace_back("fit_model", "polynomial");
    s.emplace_back("fit_alpha", format_number(f.poly->alpha));
    s.emplace_back("fit_log_C", format_number(f.poly->log_C));
    s.emplace_back("fit_C_envelope", format_number(f.poly->C));
  } else {
    s.emplace_back("fit_model", "exponential");
    s.emplace_back("fit_alpha", format_number(f.expo->alpha));
    s.emplace_back("fit_C2", format_number(f.expo->C2));
    s.emplace_back("fit_log_C1", format_number(f.expo->log_C1));
    s.emplace_back("fit_C1_envelope", format_number(f.expo->C1));
  }
  s.emplace_back("fit_r2", format_number(f.r2()));
  s.emplace_back("fit_status", f.status);
}

void trace_checks(const TraceFit& f, const CheckConfig& checks, ExperimentReport& report) {
  if (checks.max_loglog_slope) {
    if (!f.poly) {
      config::fail("config.checks.max_loglog_slope", "needs the polynomial fit model");
    }
    const double slope = -f.poly->alpha;
    report.checks.push_back({"trace log-log slope", slope <= *checks.max_loglog_slope,
                             "slope " + format_number(slope) + " <= " + format_number(*checks.max_loglog_slope)});
  }
  if (checks.min_r2) {
    report.checks.push_back({"trace fit r2", f.r2() >= *checks.min_r2,
                             "r2 " + format_number(f.r2()) + " >= " + format_number(*checks.min_r2)});
  }
}

NewtonBasis greedy_basis(const TraceConfig& t, const PointSet& grid, std::size_t terms, double stop_tol) {
  NewtonBasis basis = newton_basis(t.kernel, grid, terms, t.precision, stop_tol);
  if (basis.indices.size() < t.steps) {
    throw Error(ErrorKind::ExhaustedCandidates,
                "power function exhausted after " + std::to_string(basis.indices.size()) + " of " +
                    std::to_string(t.steps) + " greedy steps; use greedy.precision = \"high\"");
  }
  return basis;
}

/// Model-free radius: the general bound with d_j = 1 and a_j built from the
/// running maximum of the measured decrements, continued by the fitted shape.
BoundResult model_free_bound(const std::vector<double>& trace, const TraceFit& fit, std::size_t n, double tau) {
  const std::size_t N = trace.size() - 1;
  const auto tail = fit.continuation(trace[N], N);
  std::vector<double> delta(N + 2, 0.0);
  for (std::size_t j = 1; j <= N; ++j) delta[j] = std::max(trace[j - 1] - trace[j], 0.0);
  delta[N + 1] = trace[N] - tail(static_cast<double>(N + 1));
  std::vector<double> a(N + 2, 0.0);
  double running = 0.0;
  for (std::size_t j = N + 1; j >= 1; --j) {
    running = std::max(running, delta[j]);
    if (!(running > 0.0)) throw Error(ErrorKind::NumericalBreakdown, "power trace is flat, no usable decrement");
    a[j] = 1.0 / std::sqrt(running);
  }
  a[0] = a[1];
  const SequenceSpec c_seq = SequenceSpec::with_prefix(trace, tail);
  const SequenceSpec a_seq = SequenceSpec::with_prefix(a, [tail](double x) {
    return 1.0 / std::sqrt(tail(x - 1.0) - tail(x));
  });
  BoundResult r = bound_general(c_seq, SequenceSpec::constant(1.0), a_seq, n, tau);
  r.source = BoundSource::ModelFree;
  return r;
}

std::optional<BoundResult> fitted_bound(const TraceFit& fit, std::size_t n, double tau) {
  if (!fit.accepted) return std::nullopt;
  if (fit.poly) return bound_polynomial(fit.poly->C, fit.poly->alpha, n, tau);
  return bound_exponential(fit.expo->C1, fit.expo->C2, fit.expo->alpha, n, tau);
}

std::vector<double> take_trace(const NewtonBasis& basis, std::size_t steps) {
  return {basis.trace.begin(), basis.trace.begin() + static_cast<std::ptrdiff_t>(steps + 1)};
}

}  // namespace

ExperimentReport run_greedy(const json& cfg, const RunOptions& options) {
  config::expect_experiment(cfg, "greedy");
  config::allow_keys(cfg, {"experiment", "seed", "kernel", "grid", "greedy", "fit", "checks"}, "config");
  const TraceConfig t = parse_trace(cfg, std::nullopt);
  ExperimentReport report = config::start_report("greedy", cfg, config::master_seed(cfg, options));

  const PointSet grid = PointSet::uniform_grid(t.kernel.dim(), t.points_per_axis);
  const NewtonBasis basis = greedy_basis(t, grid, t.steps, exhaustion_tolerance(t.precision));
  const std::vector<double> trace = take_trace(basis, t.steps);
  const TraceFit fit = fit_trace(trace, t.fit);

  report.results.columns = {"n", "c_n", "point", "fit_value"};
  report.plot.columns = {"n", "c_n", "fit"};
  for (std::size_t n = 0; n <= t.steps; ++n) {
    std::string point;
    if (n < t.steps) {
      const auto p = grid[basis.indices[n]];
      for (std::size_t k = 0; k < p.size(); ++k) point += (k ? ";" : "") + format_number(p[k]);
    }
    const std::string model = cell(fit.model_value(static_cast<double>(n)));
    report.results.add_row({cell(n), cell(trace[n]), point, model});
    report.plot.add_row({cell(n), cell(trace[n]), model});
  }
  report.summary.emplace_back("grid_size", std::to_string(grid.size()));
  report.summary.emplace_back("steps", std::to_string(t.steps));
  report.summary.emplace_back("precision", t.precision == Precision::High ? "high" : "double");
  summarize_fit(fit, report);
  trace_checks(fit, t.checks, report);
  return report;
}

ExperimentReport run_gp_concentration(const json& cfg, const RunOptions& options) {
  config::expect_experiment(cfg, "gp-concentration");
  GpConfig g = parse_gp(cfg);
  const std::uint64_t seed = config::master_seed(cfg, options);
  ExperimentReport report = config::start_report("gp-concentration", cfg, seed);
  const TraceConfig& t = g.trace;

  const PointSet grid = PointSet::uniform_grid(t.kernel.dim(), t.points_per_axis);
  NewtonBasis basis;
  std::optional<SpectralModel> kl;
  if (g.sampler.newton) {
    TraceConfig high = t;
    high.precision = Precision::High;
    basis = greedy_basis(high, grid, g.sampler.max_terms, g.sampler.residual_tol);
  } else {
    basis = greedy_basis(t, grid, t.steps, exhaustion_tolerance(t.precision));
    if (g.replicates > 0) kl = build_spectral_model(t.kernel, grid, g.sampler.tail_budget);
  }
  const std::vector<double> trace = take_trace(basis, t.steps);

  std::optional<TraceFit> fit;
  try {
    fit = fit_trace(trace, t.fit);
  } catch (const Error& e) {
    if (e.kind() != ErrorKind::FitFailure) throw;
    report.summary.emplace_back("fit_status", std::string("failed: ") + e.what());
  }
  if (!fit) {
    throw Error(ErrorKind::FitFailure, "no tail continuation for the model-free bound: " + report.summary.back().second);
  }
  summarize_fit(*fit, report);

  // errors[r * S + i] is the sup error of replicate r at schedule entry i
  const std::size_t S = g.schedule.size();
  std::vector<double> errors(g.replicates * S);
  if (g.replicates > 0) {
    parallel_for(g.replicates, options.workers, [&](std::size_t r) {
      RngStream rng(seed, r);
      std::vector<double> e;
      if (kl) {
        const SamplePath path = sample_path(*kl, rng);
        e = conditional_sup_errors(basis, path.values, g.schedule);
      } else {
        e = newton_residual_sups(basis, rng, g.schedule);
      }
      std::copy(e.begin(), e.end(), errors.begin() + static_cast<std::ptrdiff_t>(r * S));
    });
  }

  const bool mc = g.replicates > 0;
  report.results.columns = {"n", "tau", "c_n", "bound", "bound_source", "bound_valid", "secondary_bound",
                            "secondary_source", "secondary_valid"};
  if (mc) {
    for (const char* col : {"quantile_level", "quantile", "quantile_lo", "quantile_hi", "replicates", "violations",
                            "violation_rate", "ci_halfwidth", "threshold", "secondary_violations",
                            "secondary_violation_rate"}) {
      report.results.columns.emplace_back(col);
    }
  }
  report.plot.columns = {"n", "c_n"};
  for (double tau : g.taus) {
    const std::string suffix = "_tau=" + format_number(tau);
    report.plot.columns.push_back("bound" + suffix);
    report.plot.columns.push_back("secondary" + suffix);
    if (mc) report.plot.columns.push_back("quantile" + suffix);
  }

  std::vector<std::vector<double>> primary(S, std::vector<double>(g.taus.size()));
  for (std::size_t i = 0; i < S; ++i) {
    const std::size_t n = g.schedule[i];
    std::vector<std::string> plot_row = {cell(n), cell(trace[n])};
    std::vector<double> samples(g.replicates);
    for (std::size_t r = 0; r < g.replicates; ++r) samples[r] = errors[r * S + i];
    for (std::size_t k = 0; k < g.taus.size(); ++k) {
      const double tau = g.taus[k];
      const BoundResult mf = model_free_bound(trace, *fit, n, tau);
      const std::optional<BoundResult> sec = fitted_bound(*fit, n, tau);
      primary[i][k] = mf.radius;
      std::vector<std::string> row = {cell(n),
                                      cell(tau),
                                      cell(trace[n]),
                                      cell(mf.radius),
                                      std::string(to_string(mf.source)),
                                      cell_flag(mf.valid),
                                      sec ? cell(sec->radius) : "",
                                      sec ? std::string(to_string(sec->source)) : "",
                                      sec ? cell_flag(sec->valid) : ""};
      plot_row.push_back(cell(mf.radius));
      plot_row.push_back(sec ? cell(sec->radius) : "");
      if (mc) {
        const double level = -std::expm1(-tau);
        const QuantileEstimate q = empirical_quantile(samples, level);
        std::size_t hits = 0;
        std::size_t sec_hits = 0;
        for (double e : samples) {
          hits += e >= mf.radius;
          if (sec) sec_hits += e >= sec->radius;
        }
        const double M = static_cast<double>(g.replicates);
        const double rate = static_cast<double>(hits) / M;
        const double sec_rate = static_cast<double>(sec_hits) / M;
        const double threshold = violation_threshold(tau, g.replicates);
        for (const std::string& v :
             {cell(level), cell(q.value), cell(q.lower), cell(q.upper), cell(g.replicates), cell(hits), cell(rate),
              cell(3.0 * std::sqrt(rate * (1.0 - rate) / M)), cell(threshold), sec ? cell(sec_hits) : "",
              sec ? cell(sec_rate) : ""}) {
          row.push_back(v);
        }
        plot_row.push_back(cell(q.value));
        const std::string where = "n=" + std::to_string(n) + " tau=" + format_number(tau);
        report.checks.push_back({"violation rate " + where, rate <= threshold,
                                 format_number(rate) + " <= " + format_number(threshold)});
        if (sec && sec->valid) {
          report.checks.push_back({"secondary violation rate " + where, sec_rate <= threshold,
                                   format_number(sec_rate) + " <= " + format_number(threshold)});
        }
      }
      report.results.add_row(std::move(row));
    }
    report.plot.add_row(std::move(plot_row));
  }

  if (t.checks.concave_log_bound) {
    // faster than any polynomial: log bound against log n has decreasing slopes
    bool concave = S >= 3;
    std::string detail = S >= 3 ? "slopes" : "needs at least three schedule entries";
    double prev = std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i < S && S >= 3; ++i) {
      const double slope = (std::log(primary[i][0]) - std::log(primary[i - 1][0])) /
                           (std::log(static_cast<double>(g.schedule[i])) -
                            std::log(static_cast<double>(g.schedule[i - 1])));
      detail += " " + format_number(slope);
      concave = concave && slope < prev;
      prev = slope;
    }
    report.checks.push_back({"log bound concave in log n", concave, detail});
  }
  trace_checks(*fit, t.checks, report);

  report.summary.emplace_back("grid_size", std::to_string(grid.size()));
  report.summary.emplace_back("greedy_steps", std::to_string(t.steps));
  report.summary.emplace_back("replicates", std::to_string(g.replicates));
  if (g.sampler.newton) {
    report.summary.emplace_back("sampler", "newton");
    report.summary.emplace_back("newton_terms", std::to_string(basis.indices.size()));
    report.summary.emplace_back("newton_final_power", format_number(basis.trace.back()));
  } else {
    report.summary.emplace_back("sampler", "kl");
    if (kl) {
      report.summary.emplace_back("kl_rank", std::to_string(kl->rank()));
      report.summary.emplace_back("kl_discarded_mass", format_number(kl->discarded));
      report.summary.emplace_back("kl_max_tail_sd", format_number(kl->max_tail_sd));
    }
  }
  return report;
}

}  // namespace gpconc
