#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace gpconc {

inline constexpr const char* kToolVersion = "0.3.0";

struct RunOptions {
  std::optional<std::uint64_t> seed;  // overrides the config seed
  unsigned workers = 1;
};

struct Check {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_row(std::vector<std::string> row);
  [[nodiscard]] std::size_t column(const std::string& name) const;  // columns.size() if absent
};

struct ExperimentReport {
  std::string experiment;
  std::string config_hash;
  std::uint64_t seed = 0;
  nlohmann::json config;
  Table results;
  Table plot;
  std::vector<std::pair<std::string, std::string>> summary;
  std::vector<Check> checks;

  [[nodiscard]] bool all_passed() const noexcept;
};

/// Fixed-format rendering used for every numeric CSV cell ("%.17g", so
/// values round-trip exactly).
std::string format_number(double value);

/// FNV-1a 64 of the canonical (key-sorted, compact) JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& config);

/// splitmix64 of the master seed combined with a tag; used to give each
/// sub-experiment its own Philox key.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept;

/// Parses a JSON config file; syntax and IO problems raise Error(Config/Io).
nlohmann::json load_config(const std::filesystem::path& path);

struct PolynomialFit {
  double alpha = 0.0;     // negative regression slope of log c_n on log(n+1)
  double log_C = 0.0;     // regression intercept
  double C = 0.0;         // envelope max_n c_n (n+1)^alpha over the whole trace
  double r2 = 0.0;
};

struct ExponentialFit {
  double alpha = 1.0;     // fixed shape exponent
  double C2 = 0.0;        // negative regression slope of log c_n on n^{1/alpha}
  double log_C1 = 0.0;
  double C1 = 0.0;        // envelope max_n c_n exp(C2 n^{1/alpha})
  double r2 = 0.0;
};

/// Least squares over n in [from, to] (indices into trace); zero entries are skipped.
PolynomialFit fit_polynomial(const std::vector<double>& trace, std::size_t from, std::size_t to);
ExponentialFit fit_exponential(const std::vector<double>& trace, double alpha, std::size_t from, std::size_t to);

struct QuantileEstimate {
  double value = 0.0;
  double lower = 0.0;  // order-statistic 95% interval
  double upper = 0.0;
};

/// Empirical quantile x_(ceil(level M)) with a binomial order-statistic interval.
QuantileEstimate empirical_quantile(std::vector<double> samples, double level);

ExperimentReport run_greedy(const nlohmann::json& config, const RunOptions& options);
ExperimentReport run_gp_concentration(const nlohmann::json& config, const RunOptions& options);
ExperimentReport run_chi2(const nlohmann::json& config, const RunOptions& options);
ExperimentReport run_spheres(const nlohmann::json& config, const RunOptions& options);
ExperimentReport run_bound_table(const nlohmann::json& config, const RunOptions& options);

/// Dispatches on the experiment name (greedy, gp-concentration, chi2, spheres, bound-table).
ExperimentReport run_experiment(const std::string& experiment, const nlohmann::json& config,
                                const RunOptions& options);

/// Writes manifest.json, results.csv, plotdata.csv and, when svg is set, plot.svg.
void emit_report(const ExperimentReport& report, const std::filesystem::path& out_dir, bool svg);

/// CSV reader for the files emit_report writes (no quoting).
Table read_csv(const std::filesystem::path& path);
void write_csv(const Table& table, const std::filesystem::path& path);

/// Log-scale line plot of every numeric plot column against the first column.
std::string render_svg(const Table& plot, const std::string& title);

struct ReportVerification {
  std::size_t rows = 0;
  std::size_t checked_rates = 0;
  std::vector<std::string> mismatches;
};

/// Recomputes violation_rate = violations / replicates for every row that has them.
ReportVerification verify_results(const Table& results);

}  // namespace gpconc
