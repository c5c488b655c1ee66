#include <algorithm>
#include <cmath>

#include "config_access.hpp"
#include "gpconc/bounds.hpp"
#include "gpconc/errors.hpp"

namespace gpconc {

namespace {

using config::cell;
using config::cell_flag;
using nlohmann::json;

constexpr std::size_t kDirectTerms = 10000;
constexpr double kEqualityTol = 1e-10;

DecaySpec parse_decay(const json& cfg) {
  const json& d = config::object(cfg, "decay", "config");
  config::allow_keys(d, {"model", "C", "alpha", "C_d", "beta", "C1", "C2"}, "config.decay");
  const std::string model = config::text(d, "model", "config.decay");
  try {
    if (model == "polynomial") {
      return DecaySpec::polynomial(config::number(d, "C", "config.decay", 1.0), config::number(d, "alpha", "config.decay"));
    }
    if (model == "polynomial-multi") {
      return DecaySpec::polynomial_multi(config::number(d, "C", "config.decay", 1.0),
                                         config::number(d, "alpha", "config.decay"),
                                         config::number(d, "C_d", "config.decay", 1.0),
                                         config::number(d, "beta", "config.decay", 0.0));
    }
    if (model == "exponential") {
      return DecaySpec::exponential(config::number(d, "C1", "config.decay", 1.0), config::number(d, "C2", "config.decay"),
                                    config::number(d, "alpha", "config.decay", 1.0));
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config::fail("config.decay", e.what());
  }
  config::fail("config.decay.model", "must be polynomial, polynomial-multi or exponential");
}

/// The general bound with the weights a_j = j^gamma, gamma = (alpha + beta + 1) / 2.
BoundResult polynomial_oracle(const DecaySpec& decay, std::size_t n, double tau) {
  const double gamma = 0.5 * (decay.alpha() + decay.beta() + 1.0);
  const double C_d = decay.C_d();
  const double beta = decay.beta();
  const SequenceSpec d([C_d, beta](double x) { return C_d * std::pow(x + 1.0, beta); });
  const SequenceSpec a([gamma](double x) { return std::pow(std::max(x, 1e-300), gamma); });
  return bound_general(decay.sequence(), d, a, n, tau);
}

double direct_tail(const DecaySpec& decay, std::size_t n) {
  double sum = 0.0;
  for (std::size_t j = n + kDirectTerms; j > n; --j) {
    sum += std::sqrt(std::max(decay.c(static_cast<double>(j - 1)) - decay.c(static_cast<double>(j)), 0.0));
  }
  return sum;
}

}  // namespace

ExperimentReport run_bound_table(const json& cfg, const RunOptions& options) {
  config::expect_experiment(cfg, "bound-table");
  config::allow_keys(cfg, {"experiment", "seed", "decay", "schedule", "taus", "checks"}, "config");
  const DecaySpec decay = parse_decay(cfg);
  const auto schedule = config::counts(cfg, "schedule", "config");
  if (schedule.empty()) throw Error(ErrorKind::EmptySchedule, "config.schedule: n schedule is empty");
  for (std::size_t n : schedule) {
    if (n < 1) config::fail("config.schedule", "entries must be >= 1");
  }
  const auto taus = config::numbers(cfg, "taus", "config");
  if (taus.empty()) throw Error(ErrorKind::EmptySchedule, "config.taus: tau list is empty");
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) config::fail("config.taus", "every tau must be positive and finite");
  }
  bool dominance = true;
  if (config::has(cfg, "checks")) {
    const json& c = config::object(cfg, "checks", "config");
    config::allow_keys(c, {"dominance"}, "config.checks");
    dominance = config::flag(c, "dominance", "config.checks", true);
  }
  ExperimentReport report = config::start_report("bound-table", cfg, config::master_seed(cfg, options));

  const bool exponential = decay.kind() == DecaySpec::Kind::Exponential;
  report.results.columns = {"n",          "tau",           "closed_form",  "closed_source", "closed_valid",
                            "printed_closed_form", "numeric", "numeric_source", "tail_integral", "tail_integral_closed",
                            "printed_tail_integral", "tail_direct", "dominates"};
  report.plot.columns = {"n"};
  for (double tau : taus) {
    report.plot.columns.push_back("closed_tau=" + format_number(tau));
    report.plot.columns.push_back("numeric_tau=" + format_number(tau));
  }

  std::size_t failures = 0;
  std::size_t compared = 0;
  for (std::size_t n : schedule) {
    std::vector<std::string> plot_row = {cell(n)};
    std::string tail_integral;
    std::string tail_closed;
    std::string tail_printed;
    std::string tail_direct;
    bool tail_ok = true;
    if (exponential) {
      const TailIntegral ti = tail_integral_bound(decay, n);
      const double direct = direct_tail(decay, n);
      tail_integral = cell(ti.value);
      tail_closed = cell_flag(ti.closed_form);
      if (ti.closed_form) tail_printed = cell(ti.printed_value);
      tail_direct = cell(direct);
      tail_ok = ti.value >= direct;
    }
    for (double tau : taus) {
      BoundResult closed;
      BoundResult numeric;
      switch (decay.kind()) {
        case DecaySpec::Kind::Polynomial:
          closed = bound_polynomial(decay.C(), decay.alpha(), n, tau);
          numeric = polynomial_oracle(decay, n, tau);
          break;
        case DecaySpec::Kind::PolynomialMulti:
          closed = bound_polynomial_multi(decay.C(), decay.C_d(), decay.alpha(), decay.beta(), n, tau);
          numeric = polynomial_oracle(decay, n, tau);
          break;
        case DecaySpec::Kind::Exponential:
          closed = bound_exponential(decay.C1(), decay.C2(), decay.alpha(), n, tau);
          numeric = bound_simple(decay.sequence(), n, tau);
          break;
      }
      // alpha = 1 exponential is an identity, so allow round-off in that comparison
      const double slack = exponential ? kEqualityTol : 0.0;
      const bool dominates = closed.radius >= numeric.radius * (1.0 - slack) && tail_ok;
      if (closed.valid) {
        ++compared;
        failures += dominates ? 0 : 1;
      }
      const double printed = closed.diagnostic("printed_radius");
      report.results.add_row({cell(n), cell(tau), cell(closed.radius), std::string(to_string(closed.source)),
                              cell_flag(closed.valid), std::isnan(printed) ? "" : cell(printed), cell(numeric.radius),
                              std::string(to_string(numeric.source)), tail_integral, tail_closed, tail_printed, tail_direct,
                              closed.valid ? cell_flag(dominates) : ""});
      plot_row.push_back(cell(closed.radius));
      plot_row.push_back(cell(numeric.radius));
    }
    report.plot.add_row(std::move(plot_row));
  }
  if (dominance) {
    report.checks.push_back({"closed form dominates numeric bound", failures == 0,
                             std::to_string(compared - failures) + " of " + std::to_string(compared) +
                                 " valid rows dominate"});
  }
  report.summary.emplace_back("decay_kind", exponential ? "exponential"
                                            : decay.kind() == DecaySpec::Kind::Polynomial ? "polynomial"
                                                                                          : "polynomial-multi");
  return report;
}

ExperimentReport run_experiment(const std::string& experiment, const json& cfg, const RunOptions& options) {
  if (experiment == "greedy") return run_greedy(cfg, options);
  if (experiment == "gp-concentration") return run_gp_concentration(cfg, options);
  if (experiment == "chi2") return run_chi2(cfg, options);
  if (experiment == "spheres") return run_spheres(cfg, options);
  if (experiment == "bound-table") return run_bound_table(cfg, options);
  throw Error(ErrorKind::Config, "unknown experiment '" + experiment + "'");
}

}  // namespace gpconc
