#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "gpconc/errors.hpp"
#include "gpconc/harness.hpp"
#include "gpconc/simd.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitAssertion = 4;

struct RunArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  unsigned workers = 1;
  bool svg = false;
};

void add_run_flags(CLI::App* sub, RunArgs& args) {
  sub->add_option("--config", args.config, "JSON experiment config")->required()->check(CLI::ExistingFile);
  sub->add_option("--seed", args.seed, "master seed (overrides the config)");
  sub->add_option("--out", args.out, "output directory")->required();
  sub->add_option("--workers", args.workers, "worker threads for Monte Carlo replicates")->check(CLI::Range(1u, 1024u));
  sub->add_flag("--svg", args.svg, "also render plot.svg");
}

int print_checks(const std::vector<gpconc::Check>& checks) {
  std::size_t failed = 0;
  for (const auto& c : checks) {
    std::printf("%s  %s: %s\n", c.passed ? "PASS" : "FAIL", c.name.c_str(), c.detail.c_str());
    failed += c.passed ? 0 : 1;
  }
  std::printf("%zu checks, %zu failed\n", checks.size(), failed);
  return failed == 0 ? kExitOk : kExitAssertion;
}

int run(const std::string& experiment, const RunArgs& args) {
  const nlohmann::json cfg = gpconc::load_config(args.config);
  gpconc::RunOptions options;
  options.seed = args.seed;
  options.workers = args.workers;
  const gpconc::ExperimentReport report = gpconc::run_experiment(experiment, cfg, options);
  gpconc::emit_report(report, args.out, args.svg);
  std::printf("%s  config %s  seed %llu  simd %s\n", experiment.c_str(), report.config_hash.c_str(),
              static_cast<unsigned long long>(report.seed),
              std::string(gpconc::simd::name(gpconc::simd::active_backend())).c_str());
  for (const auto& [k, v] : report.summary) std::printf("  %s = %s\n", k.c_str(), v.c_str());
  std::printf("wrote %zu result rows to %s\n", report.results.rows.size(), args.out.c_str());
  return print_checks(report.checks);
}

int report_command(const std::string& dir, bool svg) {
  const std::filesystem::path root(dir);
  std::ifstream in(root / "manifest.json");
  if (!in) throw gpconc::Error(gpconc::ErrorKind::Io, "cannot open " + (root / "manifest.json").string());
  const nlohmann::json manifest = nlohmann::json::parse(in);
  std::printf("%s  config %s  seed %s  version %s\n", manifest.at("experiment").get<std::string>().c_str(),
              manifest.at("config_hash").get<std::string>().c_str(), manifest.at("seed").dump().c_str(),
              manifest.at("version").get<std::string>().c_str());
  for (const auto& [k, v] : manifest.at("summary").items()) {
    std::printf("  %s = %s\n", k.c_str(), v.get<std::string>().c_str());
  }

  const gpconc::Table results = gpconc::read_csv(root / "results.csv");
  const gpconc::ReportVerification verification = gpconc::verify_results(results);
  std::printf("results.csv: %zu rows, %zu violation rates recomputed, %zu mismatches\n", verification.rows,
              verification.checked_rates, verification.mismatches.size());
  for (const auto& m : verification.mismatches) std::printf("  %s\n", m.c_str());
  if (svg) {
    const gpconc::Table plot = gpconc::read_csv(root / "plotdata.csv");
    std::ofstream out(root / "plot.svg", std::ios::binary | std::ios::trunc);
    out << gpconc::render_svg(plot, manifest.at("experiment").get<std::string>());
    if (!out) throw gpconc::Error(gpconc::ErrorKind::Io, "cannot write " + (root / "plot.svg").string());
  }

  std::vector<gpconc::Check> checks;
  for (const auto& c : manifest.at("checks")) {
    checks.push_back({c.at("name").get<std::string>(), c.at("passed").get<bool>(), c.at("detail").get<std::string>()});
  }
  const int code = print_checks(checks);
  return verification.mismatches.empty() ? code : kExitAssertion;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Concentration experiments for conditioned Gaussian processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", gpconc::kToolVersion);

  RunArgs args;
  const char* experiments[][2] = {
      {"greedy", "P-greedy power-function trace and decay fit"},
      {"gp-concentration", "Monte Carlo check of conditional sup errors against bounds"},
      {"chi2", "weighted chi-square tail check"},
      {"spheres", "truncation errors of random fields on products of spheres"},
      {"bound-table", "closed-form bounds against numeric tail sums"},
  };
  for (const auto& [name, help] : experiments) add_run_flags(app.add_subcommand(name, help), args);

  std::string report_dir;
  bool report_svg = false;
  CLI::App* report = app.add_subcommand("report", "re-verify and summarize an emitted results directory");
  report->add_option("--out", report_dir, "results directory")->required();
  report->add_flag("--svg", report_svg, "re-render plot.svg from plotdata.csv");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    if (report->parsed()) return report_command(report_dir, report_svg);
    for (const auto& [name, help] : experiments) {
      if (app.got_subcommand(name)) return run(name, args);
    }
  } catch (const gpconc::Error& e) {
    std::fprintf(stderr, "error (%s): %s\n", std::string(gpconc::to_string(e.kind())).c_str(), e.what());
    const bool config = gpconc::is_config_error(e.kind()) || e.kind() == gpconc::ErrorKind::Io;
    return config ? kExitConfig : kExitNumerical;
  } catch (const nlohmann::json::exception& e) {
    std::fprintf(stderr, "error (json): %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitConfig;
}
