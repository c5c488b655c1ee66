#include <algorithm>
#include <cmath>
#include <optional>

#include "config_access.hpp"
#include "gpconc/bounds.hpp"
#include "gpconc/concentration.hpp"
#include "gpconc/errors.hpp"
#include "gpconc/parallel.hpp"
#include "gpconc/spheres.hpp"

namespace gpconc {

namespace {

using config::cell;
using config::cell_flag;
using nlohmann::json;

ProductSphereSpec parse_sphere(const json& cfg) {
  const json& s = config::object(cfg, "sphere", "config");
  config::allow_keys(s, {"d1", "d2", "C", "alpha", "jmax", "explicit_degree"}, "config.sphere");
  ProductSphereSpec spec;
  spec.d1 = static_cast<long>(config::count(s, "d1", "config.sphere", 1));
  spec.d2 = static_cast<long>(config::count(s, "d2", "config.sphere", 1));
  spec.C = config::number(s, "C", "config.sphere", 1.0);
  spec.alpha = config::number(s, "alpha", "config.sphere", 1.0);
  spec.jmax = static_cast<long>(config::count(s, "jmax", "config.sphere", 0));
  spec.explicit_degree = static_cast<long>(config::count(s, "explicit_degree", "config.sphere", 64));
  try {
    spec.validate();
  } catch (const Error& e) {
    config::fail("config.sphere", e.what());
  }
  return spec;
}

/// The closed form written directly in the sphere parameters, used to
/// cross-check the route through the polynomial-multi bound.
double direct_sphere_radius(const ProductSphereSpec& spec, std::size_t n, double tau) {
  const double a = 2.0 * spec.alpha + static_cast<double>(spec.d1 + spec.d2);
  const double cd = sphere_dim_constant(spec.d1) * sphere_dim_constant(spec.d2);
  const double inner = 20.0 * a * std::pow(2.0, static_cast<double>(spec.d1 + spec.d2 - 1)) * spec.C * cd *
                       std::max(1.0, tau);
  return std::sqrt(inner) / (2.0 * spec.alpha) * std::pow(static_cast<double>(n), -spec.alpha);
}

double log_log_slope(const std::vector<std::size_t>& n, const std::vector<double>& y) {
  double mx = 0.0;
  double my = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    mx += std::log(static_cast<double>(n[i]));
    my += std::log(y[i]);
  }
  mx /= static_cast<double>(n.size());
  my /= static_cast<double>(n.size());
  double sxx = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < n.size(); ++i) {
    const double dx = std::log(static_cast<double>(n[i])) - mx;
    sxx += dx * dx;
    sxy += dx * (std::log(y[i]) - my);
  }
  return sxy / sxx;
}

}  // namespace

ExperimentReport run_spheres(const json& cfg, const RunOptions& options) {
  config::expect_experiment(cfg, "spheres");
  config::allow_keys(cfg, {"experiment", "seed", "sphere", "schedule", "taus", "replicates", "torus", "checks"},
                     "config");
  const std::uint64_t seed = config::master_seed(cfg, options);
  ProductSphereSpec spec = parse_sphere(cfg);

  const auto schedule = config::counts(cfg, "schedule", "config");
  if (schedule.empty()) throw Error(ErrorKind::EmptySchedule, "config.schedule: n schedule is empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (schedule[i] < 1) config::fail("config.schedule", "entries must be >= 1");
    if (i > 0 && schedule[i] <= schedule[i - 1]) config::fail("config.schedule", "must be strictly increasing");
  }
  const auto taus = config::numbers(cfg, "taus", "config");
  if (taus.empty()) throw Error(ErrorKind::EmptySchedule, "config.taus: tau list is empty");
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) config::fail("config.taus", "every tau must be positive and finite");
  }
  const std::size_t M = config::count(cfg, "replicates", "config");
  if (M < 2) config::fail("config.replicates", "must be at least 2");

  std::optional<std::pair<long, std::size_t>> torus;
  if (config::has(cfg, "torus")) {
    const json& t = config::object(cfg, "torus", "config");
    config::allow_keys(t, {"degree", "points"}, "config.torus");
    torus.emplace(static_cast<long>(config::count(t, "degree", "config.torus", 16)),
                  config::count(t, "points", "config.torus", 64));
  }
  std::optional<double> max_slope;
  if (config::has(cfg, "checks")) {
    const json& c = config::object(cfg, "checks", "config");
    config::allow_keys(c, {"max_median_slope"}, "config.checks");
    if (config::has(c, "max_median_slope")) max_slope = config::number(c, "max_median_slope", "config.checks");
  }

  if (spec.jmax == 0) spec.jmax = spec.minimal_jmax();
  if (static_cast<long>(schedule.back()) > spec.jmax) {
    config::fail("config.schedule", "entries must not exceed the truncation degree " + std::to_string(spec.jmax));
  }
  ExperimentReport report = config::start_report("spheres", cfg, seed);

  const std::vector<long> degrees(schedule.begin(), schedule.end());
  const std::size_t S = schedule.size();
  std::vector<double> errors(M * S);
  parallel_for(M, options.workers, [&](std::size_t r) {
    RngStream rng(seed, r);
    const SphericalField field = build_field(spec, rng);
    const auto e = l2_truncation_errors(field, degrees);
    std::copy(e.begin(), e.end(), errors.begin() + static_cast<std::ptrdiff_t>(r * S));
  });

  report.results.columns = {"row_kind",      "n",         "tau",          "bound",          "bound_source",
                            "bound_valid",   "direct_bound", "median_error", "quantile_level", "quantile",
                            "quantile_lo",   "quantile_hi", "replicates",   "violations",     "violation_rate",
                            "ci_halfwidth",  "threshold",   "norm_expected", "norm_measured", "norm_rel_error"};
  report.plot.columns = {"n", "median_error"};
  for (double tau : taus) {
    report.plot.columns.push_back("bound_tau=" + format_number(tau));
    report.plot.columns.push_back("quantile_tau=" + format_number(tau));
  }

  std::vector<double> medians(S);
  double worst_reduction = 0.0;
  for (std::size_t i = 0; i < S; ++i) {
    const std::size_t n = schedule[i];
    std::vector<double> samples(M);
    for (std::size_t r = 0; r < M; ++r) samples[r] = errors[r * S + i];
    medians[i] = empirical_quantile(samples, 0.5).value;
    std::vector<std::string> plot_row = {cell(n), cell(medians[i])};
    for (double tau : taus) {
      const BoundResult b = sphere_bound(spec, n, tau);
      const double direct = direct_sphere_radius(spec, n, tau);
      worst_reduction = std::max(worst_reduction, std::fabs(b.radius - direct) / direct);
      const double level = -std::expm1(-tau);
      const QuantileEstimate q = empirical_quantile(samples, level);
      std::size_t hits = 0;
      for (double e : samples) hits += e >= b.radius;
      const double rate = static_cast<double>(hits) / static_cast<double>(M);
      const double threshold = violation_threshold(tau, M);
      report.results.add_row({"violation", cell(n), cell(tau), cell(b.radius), std::string(to_string(b.source)),
                              cell_flag(b.valid), cell(direct), cell(medians[i]), cell(level), cell(q.value),
                              cell(q.lower), cell(q.upper), cell(M), cell(hits), cell(rate),
                              cell(3.0 * std::sqrt(rate * (1.0 - rate) / static_cast<double>(M))), cell(threshold), "",
                              "", ""});
      report.checks.push_back({"violation rate n=" + std::to_string(n) + " tau=" + format_number(tau),
                               rate <= threshold, format_number(rate) + " <= " + format_number(threshold)});
      plot_row.push_back(cell(b.radius));
      plot_row.push_back(cell(q.value));
    }
    report.plot.add_row(std::move(plot_row));
  }
  report.checks.push_back({"sphere bound reduction", worst_reduction <= 1e-12,
                           "max relative difference " + format_number(worst_reduction)});

  if (S >= 2) {
    const double slope = log_log_slope(schedule, medians);
    report.summary.emplace_back("median_error_slope", format_number(slope));
    if (max_slope) {
      report.checks.push_back({"median error log-log slope", slope <= *max_slope,
                               format_number(slope) + " <= " + format_number(*max_slope)});
    }
  } else if (max_slope) {
    config::fail("config.checks.max_median_slope", "needs at least two schedule entries");
  }

  if (torus) {
    const auto [degree, points] = *torus;
    if (spec.d1 != 1 || spec.d2 != 1) config::fail("config.torus", "the grid check needs d1 = d2 = 1");
    const auto norms = torus_truncation_norms(spec, degree, points);
    double worst = 0.0;
    for (std::size_t n = 0; n < norms.size(); ++n) {
      const double expected = spec.coefficient(static_cast<long>(n) + 1);
      const double rel = std::fabs(norms[n] - expected) / expected;
      worst = std::max(worst, rel);
      report.results.add_row({"operator-norm", cell(n), "", "", "", "", "", "", "", "", "", "", "", "", "", "", "",
                              cell(expected), cell(norms[n]), cell(rel)});
    }
    report.checks.push_back({"torus operator norm identity", worst <= 1e-8,
                             "max relative error " + format_number(worst) + " over " + std::to_string(norms.size()) +
                                 " truncation degrees"});
  }

  report.summary.emplace_back("jmax", std::to_string(spec.jmax));
  report.summary.emplace_back("c_d1", format_number(sphere_dim_constant(spec.d1)));
  report.summary.emplace_back("c_d2", format_number(sphere_dim_constant(spec.d2)));
  report.summary.emplace_back("replicates", std::to_string(M));
  return report;
}

}  // namespace gpconc
