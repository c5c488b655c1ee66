#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <doctest.h>
#include <json.hpp>

#include "gpconc/errors.hpp"
#include "gpconc/harness.hpp"

using namespace gpconc;
using nlohmann::json;

namespace {

std::filesystem::path scratch_dir(const std::string& name) {
  const auto dir = std::filesystem::temp_directory_path() / ("gpconc_test_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  return ErrorKind::Io;
}

json small_chi2() {
  return json::parse(R"({
    "experiment": "chi2", "seed": 3,
    "weights": [{"family": "unit"}, {"family": "geometric", "ratio": 0.5}, {"family": "finite-random", "count": 5}],
    "taus": [1, 2], "replicates": 4000
  })");
}

json small_gp(std::size_t replicates) {
  json cfg = json::parse(R"({
    "experiment": "gp-concentration", "seed": 5,
    "kernel": {"type": "matern", "smoothness": 2, "dim": 1},
    "grid": {"points_per_axis": 129},
    "greedy": {"steps": 16},
    "fit": {"model": "polynomial", "range": [4, 16]},
    "schedule": [2, 4, 8, 16], "taus": [1, 2],
    "sampler": {"type": "kl", "tail_budget": 1e-6}
  })");
  cfg["replicates"] = replicates;
  return cfg;
}

double num(const Table& t, std::size_t row, const std::string& col) {
  return std::stod(t.rows.at(row).at(t.column(col)));
}

}  // namespace

TEST_CASE("number formatting round-trips") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 12345678.9, -2.5}) CHECK(std::stod(format_number(v)) == v);
  CHECK(format_number(2.0) == "2");
}

TEST_CASE("config hash is canonical") {
  const json a = json::parse(R"({"b": 1, "a": [1, 2]})");
  const json b = json::parse(R"({"a":[1,2],   "b":1})");
  CHECK(config_hash(a) == config_hash(b));
  CHECK(config_hash(a).size() == 16);
  CHECK(config_hash(a) != config_hash(json::parse(R"({"a": [1, 2], "b": 2})")));
}

TEST_CASE("derived seeds are distinct") {
  CHECK(derive_seed(1, 0) != derive_seed(1, 1));
  CHECK(derive_seed(1, 0) != derive_seed(2, 0));
  CHECK(derive_seed(9, 4) == derive_seed(9, 4));
}

TEST_CASE("trace fits recover exact models") {
  std::vector<double> poly(41);
  std::vector<double> expo(41);
  for (std::size_t n = 0; n <= 40; ++n) {
    poly[n] = 3.0 * std::pow(n + 1.0, -2.5);
    expo[n] = 2.0 * std::exp(-0.7 * std::sqrt(static_cast<double>(n)));
  }
  const PolynomialFit p = fit_polynomial(poly, 5, 40);
  CHECK(p.alpha == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(std::exp(p.log_C) == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(p.C == doctest::Approx(3.0).epsilon(1e-10));
  CHECK(p.r2 == doctest::Approx(1.0).epsilon(1e-12));
  const ExponentialFit e = fit_exponential(expo, 2.0, 1, 40);
  CHECK(e.C2 == doctest::Approx(0.7).epsilon(1e-12));
  CHECK(e.C1 == doctest::Approx(2.0).epsilon(1e-10));

  poly[2] *= 10.0;
  CHECK(fit_polynomial(poly, 5, 40).C == doctest::Approx(30.0).epsilon(1e-10));
}

TEST_CASE("empirical quantile and its interval") {
  std::vector<double> xs(1000);
  for (std::size_t i = 0; i < xs.size(); ++i) xs[i] = static_cast<double>(xs.size() - i);
  const QuantileEstimate q = empirical_quantile(xs, 0.9);
  CHECK(q.value == 900.0);
  CHECK(q.lower < q.value);
  CHECK(q.upper > q.value);
  CHECK(q.lower >= 870.0);
  CHECK(q.upper <= 930.0);
  CHECK_THROWS_AS(empirical_quantile({}, 0.5), Error);
  CHECK_THROWS_AS(empirical_quantile(xs, 1.0), Error);
}

TEST_CASE("csv round-trip and rate verification") {
  Table t;
  t.columns = {"n", "replicates", "violations", "violation_rate", "note"};
  t.add_row({"1", "2000", "7", format_number(7.0 / 2000.0), ""});
  t.add_row({"2", "2000", "0", "0", "x"});
  const auto dir = scratch_dir("csv");
  std::filesystem::create_directories(dir);
  write_csv(t, dir / "t.csv");
  const Table back = read_csv(dir / "t.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  const ReportVerification ok = verify_results(back);
  CHECK(ok.checked_rates == 2);
  CHECK(ok.mismatches.empty());

  Table bad = back;
  bad.rows[0][3] = "0.5";
  CHECK(verify_results(bad).mismatches.size() == 1);
  CHECK_THROWS_AS(read_csv(dir / "missing.csv"), Error);
  CHECK_THROWS_AS(t.add_row({"too", "short"}), Error);
}

TEST_CASE("empty report emits headers and a manifest") {
  ExperimentReport report;
  report.experiment = "bound-table";
  report.config = json::object();
  report.config_hash = config_hash(report.config);
  report.results.columns = {"n", "bound"};
  report.plot.columns = {"n"};
  const auto dir = scratch_dir("empty");
  emit_report(report, dir, false);
  CHECK(slurp(dir / "results.csv") == "n,bound\n");
  CHECK(slurp(dir / "plotdata.csv") == "n\n");
  CHECK_FALSE(std::filesystem::exists(dir / "plot.svg"));
  const json manifest = json::parse(slurp(dir / "manifest.json"));
  CHECK(manifest.at("version") == kToolVersion);
  CHECK(manifest.at("config_hash") == report.config_hash);

  emit_report(report, dir, true);
  CHECK(std::filesystem::exists(dir / "plot.svg"));
}

TEST_CASE("svg rendering is deterministic") {
  Table plot;
  plot.columns = {"n", "a", "b"};
  plot.add_row({"1", "1", "0.5"});
  plot.add_row({"2", "0.25", ""});
  plot.add_row({"4", "0.0625", "0.01"});
  const std::string s = render_svg(plot, "demo");
  CHECK(s.rfind("<svg", 0) == 0);
  CHECK(s.find("demo") != std::string::npos);
  CHECK(s == render_svg(plot, "demo"));
}

TEST_CASE("config errors") {
  json cfg = small_chi2();
  cfg["taus"] = json::array();
  CHECK(kind_of([&] { (void)run_chi2(cfg, {}); }) == ErrorKind::EmptySchedule);

  cfg = small_chi2();
  cfg["replicates"] = 10;
  CHECK(kind_of([&] { (void)run_chi2(cfg, {}); }) == ErrorKind::Config);

  cfg = small_chi2();
  cfg["unexpected"] = 1;
  CHECK(kind_of([&] { (void)run_chi2(cfg, {}); }) == ErrorKind::Config);

  cfg = small_chi2();
  cfg["weights"][1]["ratio"] = 1.5;
  CHECK(kind_of([&] { (void)run_chi2(cfg, {}); }) == ErrorKind::Config);

  CHECK(kind_of([&] { (void)run_experiment("chi2", small_gp(0), {}); }) == ErrorKind::Config);
  CHECK(kind_of([&] { (void)run_experiment("nope", small_chi2(), {}); }) == ErrorKind::Config);

  json gp = small_gp(0);
  gp["schedule"] = json::array();
  CHECK(kind_of([&] { (void)run_gp_concentration(gp, {}); }) == ErrorKind::EmptySchedule);
  gp = small_gp(0);
  gp["kernel"]["smoothness"] = 1;
  CHECK(kind_of([&] { (void)run_gp_concentration(gp, {}); }) == ErrorKind::Config);

  const auto dir = scratch_dir("badjson");
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "c.json") << "{ not json";
  CHECK(kind_of([&] { (void)load_config(dir / "c.json"); }) == ErrorKind::Config);
  CHECK(kind_of([&] { (void)load_config(dir / "absent.json"); }) == ErrorKind::Io);
}

TEST_CASE("chi2 report is reproducible and worker independent") {
  RunOptions one;
  RunOptions four;
  four.workers = 4;
  const ExperimentReport a = run_chi2(small_chi2(), one);
  const ExperimentReport b = run_chi2(small_chi2(), four);
  CHECK(a.results.rows == b.results.rows);
  CHECK(a.all_passed());
  const std::size_t oracle = a.results.column("oracle");
  REQUIRE(oracle < a.results.columns.size());
  CHECK(std::stod(a.results.rows[0][oracle]) == doctest::Approx(0.02535).epsilon(1e-3));
  RunOptions reseeded;
  reseeded.seed = 4;
  CHECK(run_chi2(small_chi2(), reseeded).results.rows != a.results.rows);
}

TEST_CASE("bound-only gp report without replicates") {
  const ExperimentReport r = run_gp_concentration(small_gp(0), {});
  CHECK(r.results.column("violation_rate") == r.results.columns.size());
  CHECK(r.results.column("bound") < r.results.columns.size());
  CHECK(r.results.rows.size() == 8);
  CHECK(verify_results(r.results).checked_rates == 0);
}

TEST_CASE("gp concentration report") {
  const ExperimentReport r = run_gp_concentration(small_gp(300), {});
  CHECK(r.all_passed());
  const ReportVerification v = verify_results(r.results);
  CHECK(v.checked_rates == r.results.rows.size());
  CHECK(v.mismatches.empty());
  for (std::size_t i = 0; i < r.results.rows.size(); ++i) {
    CHECK(r.results.rows[i][r.results.column("bound_source")] == "model-free");
    if (r.results.rows[i][r.results.column("secondary_valid")] == "true") {
      CHECK(num(r.results, i, "bound") <= num(r.results, i, "secondary_bound"));
    }
    CHECK(num(r.results, i, "quantile") <= num(r.results, i, "bound"));
  }
  RunOptions four;
  four.workers = 4;
  CHECK(run_gp_concentration(small_gp(300), four).results.rows == r.results.rows);
}

TEST_CASE("greedy and bound-table reports") {
  const json greedy = json::parse(R"({
    "experiment": "greedy", "kernel": {"type": "gaussian", "dim": 1},
    "grid": {"points_per_axis": 65}, "greedy": {"steps": 8},
    "fit": {"model": "exponential", "alpha": 1, "range": [2, 8]}
  })");
  const ExperimentReport g = run_greedy(greedy, {});
  CHECK(g.results.rows.size() == 9);
  for (std::size_t i = 1; i < g.results.rows.size(); ++i) CHECK(num(g.results, i, "c_n") < num(g.results, i - 1, "c_n"));

  const json table = json::parse(R"({
    "experiment": "bound-table",
    "decay": {"model": "exponential", "C1": 1, "C2": 1, "alpha": 2},
    "schedule": [20, 130, 200], "taus": [1]
  })");
  const ExperimentReport t = run_bound_table(table, {});
  CHECK(t.all_passed());
  CHECK(t.results.rows[0][t.results.column("closed_valid")] == "false");
  CHECK(t.results.rows[2][t.results.column("tail_integral_closed")] == "true");
  CHECK(num(t.results, 2, "tail_integral") >= num(t.results, 2, "tail_direct"));
}
