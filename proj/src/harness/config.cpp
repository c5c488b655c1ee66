#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "config_access.hpp"
#include "gpconc/errors.hpp"

namespace gpconc {

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string config_hash(const nlohmann::json& config) {
  const std::string canonical = config.dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : canonical) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, h);
  return buf;
}

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t tag) noexcept {
  std::uint64_t z = master + 0x9e3779b97f4a7c15ULL * (tag + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

nlohmann::json load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open config " + path.string());
  try {
    nlohmann::json cfg = nlohmann::json::parse(in);
    if (!cfg.is_object()) throw Error(ErrorKind::Config, path.string() + ": top level must be an object");
    return cfg;
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorKind::Config, path.string() + ": " + e.what());
  }
}

bool ExperimentReport::all_passed() const noexcept {
  for (const auto& c : checks) {
    if (!c.passed) return false;
  }
  return true;
}

void Table::add_row(std::vector<std::string> row) {
  if (row.size() != columns.size()) {
    throw Error(ErrorKind::DimensionMismatch, "table row has " + std::to_string(row.size()) + " cells for " +
                                                  std::to_string(columns.size()) + " columns");
  }
  rows.push_back(std::move(row));
}

std::size_t Table::column(const std::string& name) const {
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (columns[i] == name) return i;
  }
  return columns.size();
}

namespace config {

void fail(const std::string& where, const std::string& message) {
  throw Error(ErrorKind::Config, where + ": " + message);
}

bool has(const json& obj, const std::string& key) { return obj.is_object() && obj.contains(key); }

const json& object(const json& parent, const std::string& key, const std::string& where) {
  if (!has(parent, key)) fail(where, "missing object '" + key + "'");
  const json& v = parent.at(key);
  if (!v.is_object()) fail(where + "." + key, "must be an object");
  return v;
}

void allow_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || item.key() == a;
    if (!ok) fail(where, "unknown key '" + item.key() + "'");
  }
}

double number(const json& obj, const std::string& key, const std::string& where, std::optional<double> fallback) {
  if (!has(obj, key)) {
    if (fallback) return *fallback;
    fail(where, "missing number '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_number()) fail(where + "." + key, "must be a number");
  const double x = v.get<double>();
  if (!std::isfinite(x)) fail(where + "." + key, "must be finite");
  return x;
}

std::size_t count(const json& obj, const std::string& key, const std::string& where,
                  std::optional<std::size_t> fallback) {
  if (!has(obj, key)) {
    if (fallback) return *fallback;
    fail(where, "missing count '" + key + "'");
  }
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::size_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::size_t>(v.get<long long>());
  if (v.is_number_float()) {
    const double x = v.get<double>();
    if (x >= 0.0 && x == std::floor(x) && x < 1e15) return static_cast<std::size_t>(x);
  }
  fail(where + "." + key, "must be a nonnegative integer");
}

std::uint64_t u64(const json& obj, const std::string& key, const std::string& where,
                  std::optional<std::uint64_t> fallback) {
  if (!has(obj, key)) {
    if (fallback) return *fallback;
    fail(where, "missing integer '" + key + "'");
  }
  const json& v = obj.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer() && v.get<long long>() >= 0) return static_cast<std::uint64_t>(v.get<long long>());
  fail(where + "." + key, "must be an unsigned 64-bit integer");
}

std::string text(const json& obj, const std::string& key, const std::string& where,
                 std::optional<std::string> fallback) {
  if (!has(obj, key)) {
    if (fallback) return *fallback;
    fail(where, "missing string '" + key + "'");
  }
  const json& v = obj.at(key);
  if (!v.is_string()) fail(where + "." + key, "must be a string");
  return v.get<std::string>();
}

bool flag(const json& obj, const std::string& key, const std::string& where, bool fallback) {
  if (!has(obj, key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail(where + "." + key, "must be true or false");
  return v.get<bool>();
}

std::vector<double> numbers(const json& obj, const std::string& key, const std::string& where) {
  if (!has(obj, key)) fail(where, "missing list '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array()) fail(where + "." + key, "must be a list of numbers");
  std::vector<double> out;
  for (const auto& x : v) {
    if (!x.is_number()) fail(where + "." + key, "must be a list of numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

std::vector<std::size_t> counts(const json& obj, const std::string& key, const std::string& where) {
  if (!has(obj, key)) fail(where, "missing list '" + key + "'");
  const json& v = obj.at(key);
  if (!v.is_array()) fail(where + "." + key, "must be a list of integers");
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const json wrapper = {{"v", v[i]}};
    out.push_back(count(wrapper, "v", where + "." + key + "[" + std::to_string(i) + "]"));
  }
  return out;
}

KernelSpec kernel(const json& obj, const std::string& where) {
  allow_keys(obj, {"type", "smoothness", "dim"}, where);
  const std::string type = text(obj, "type", where);
  const std::size_t dim = count(obj, "dim", where, 1);
  try {
    if (type == "matern") return KernelSpec::matern(number(obj, "smoothness", where), dim);
    if (type == "gaussian") return KernelSpec::gaussian(dim);
  } catch (const Error& e) {
    fail(where, e.what());
  }
  fail(where + ".type", "must be 'matern' or 'gaussian'");
}

std::uint64_t master_seed(const json& cfg, const RunOptions& options) {
  if (options.seed) return *options.seed;
  return u64(cfg, "seed", "config", 1);
}

void expect_experiment(const json& cfg, const std::string& name) {
  if (!cfg.is_object()) fail("config", "top level must be an object");
  if (has(cfg, "experiment") && text(cfg, "experiment", "config") != name) {
    fail("config.experiment", "expected '" + name + "'");
  }
}

ExperimentReport start_report(const std::string& name, const json& cfg, std::uint64_t seed) {
  ExperimentReport report;
  report.experiment = name;
  report.config = cfg;
  report.config_hash = config_hash(cfg);
  report.seed = seed;
  return report;
}

}  // namespace config

}  // namespace gpconc
