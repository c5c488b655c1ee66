#include <cmath>

#include "config_access.hpp"
#include "gpconc/concentration.hpp"
#include "gpconc/errors.hpp"

namespace gpconc {

namespace {

using config::cell;
using nlohmann::json;

struct Family {
  std::string name;
  WeightSeq weights;
};

Family parse_family(const json& obj, std::size_t index, std::uint64_t master) {
  const std::string where = "config.weights[" + std::to_string(index) + "]";
  if (!obj.is_object()) config::fail(where, "must be an object");
  const std::string family = config::text(obj, "family", where);
  try {
    if (family == "unit") {
      config::allow_keys(obj, {"family"}, where);
      return {"unit", WeightSeq::finite({1.0})};
    }
    if (family == "geometric") {
      config::allow_keys(obj, {"family", "ratio", "scale"}, where);
      return {family, WeightSeq::geometric(config::number(obj, "ratio", where), config::number(obj, "scale", where, 1.0))};
    }
    if (family == "polynomial") {
      config::allow_keys(obj, {"family", "power", "scale"}, where);
      return {family, WeightSeq::polynomial(config::number(obj, "power", where), config::number(obj, "scale", where, 1.0))};
    }
    if (family == "finite") {
      config::allow_keys(obj, {"family", "values"}, where);
      return {family, WeightSeq::finite(config::numbers(obj, "values", where))};
    }
    if (family == "finite-random") {
      config::allow_keys(obj, {"family", "count"}, where);
      return {family, WeightSeq::finite_random(config::count(obj, "count", where), derive_seed(master, 1000 + index))};
    }
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Config) throw;
    config::fail(where, e.what());
  }
  config::fail(where + ".family", "must be unit, geometric, polynomial, finite or finite-random");
}

/// P(b (r^2 - 1) >= t) for a single weight b > 0 and a standard normal r.
double single_weight_tail(double b, double t) { return std::erfc(std::sqrt((1.0 + t / b) / 2.0)); }

}  // namespace

ExperimentReport run_chi2(const json& cfg, const RunOptions& options) {
  config::expect_experiment(cfg, "chi2");
  config::allow_keys(cfg, {"experiment", "seed", "weights", "taus", "replicates", "trunc_tol"}, "config");
  const std::uint64_t seed = config::master_seed(cfg, options);
  const auto taus = config::numbers(cfg, "taus", "config");
  if (taus.empty()) throw Error(ErrorKind::EmptySchedule, "config.taus: tau list is empty");
  for (double t : taus) {
    if (!(t > 0.0) || !std::isfinite(t)) config::fail("config.taus", "every tau must be positive and finite");
  }
  const std::size_t M = config::count(cfg, "replicates", "config");
  if (M < 1000) config::fail("config.replicates", "must be at least 1000");
  const double trunc_tol = config::number(cfg, "trunc_tol", "config", 1e-3);
  if (!(trunc_tol > 0.0)) config::fail("config.trunc_tol", "must be positive");
  if (!config::has(cfg, "weights") || !cfg.at("weights").is_array() || cfg.at("weights").empty()) {
    config::fail("config.weights", "must be a nonempty list of weight families");
  }
  std::vector<Family> families;
  for (std::size_t i = 0; i < cfg.at("weights").size(); ++i) {
    families.push_back(parse_family(cfg.at("weights")[i], i, seed));
  }

  ExperimentReport report = config::start_report("chi2", cfg, seed);
  report.results.columns = {"family",     "weights",     "tau",       "l2",        "linf",
                            "bound",      "exp_neg_tau", "oracle",    "replicates", "violations",
                            "violation_rate", "ci_halfwidth", "threshold"};
  report.plot.columns = {"tau", "exp_neg_tau"};
  for (std::size_t f = 0; f < families.size(); ++f) report.plot.columns.push_back("rate_" + std::to_string(f));
  std::vector<std::vector<std::string>> plot(taus.size());
  for (std::size_t k = 0; k < taus.size(); ++k) plot[k] = {cell(taus[k]), cell(std::exp(-taus[k]))};

  for (std::size_t f = 0; f < families.size(); ++f) {
    const WeightSeq& b = families[f].weights;
    const std::uint64_t fseed = derive_seed(seed, f);
    const bool single = b.family() == WeightSeq::Family::Finite && b.l1() == b.linf() && b.linf() > 0.0;
    report.summary.emplace_back("family_" + std::to_string(f), families[f].name + " " + b.label());
    for (std::size_t k = 0; k < taus.size(); ++k) {
      const double tau = taus[k];
      const ViolationRate v = mc_violation_rate(b, tau, M, fseed, trunc_tol, options.workers);
      const double threshold = violation_threshold(tau, M);
      std::string oracle;
      const std::string where = families[f].name + " #" + std::to_string(f) + " tau=" + format_number(tau);
      if (single) {
        const double p = single_weight_tail(b.linf(), v.bound);
        oracle = cell(p);
        const double sigma3 = 3.0 * std::sqrt(p * (1.0 - p) / static_cast<double>(M));
        report.checks.push_back({"oracle agreement " + where, std::fabs(v.rate - p) <= sigma3,
                                 "|" + format_number(v.rate) + " - " + format_number(p) + "| <= " +
                                     format_number(sigma3)});
      }
      report.results.add_row({families[f].name, b.label(), cell(tau), cell(b.l2()), cell(b.linf()), cell(v.bound),
                              cell(std::exp(-tau)), oracle, cell(M), cell(v.violations), cell(v.rate),
                              cell(v.ci_halfwidth), cell(threshold)});
      report.checks.push_back({"violation rate " + where, v.rate <= threshold,
                               format_number(v.rate) + " <= " + format_number(threshold)});
      plot[k].push_back(cell(v.rate));
    }
  }
  for (auto& row : plot) report.plot.add_row(std::move(row));
  report.summary.emplace_back("replicates", std::to_string(M));
  report.summary.emplace_back("trunc_tol", format_number(trunc_tol));
  return report;
}

}  // namespace gpconc
