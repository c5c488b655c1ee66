#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "gpconc/harness.hpp"
#include "gpconc/kernels.hpp"

namespace gpconc::config {

using nlohmann::json;

[[noreturn]] void fail(const std::string& where, const std::string& message);

const json& object(const json& parent, const std::string& key, const std::string& where);
bool has(const json& obj, const std::string& key);

/// Rejects keys outside the allowed set so typos surface before any compute.
void allow_keys(const json& obj, std::initializer_list<const char*> allowed, const std::string& where);

double number(const json& obj, const std::string& key, const std::string& where, std::optional<double> fallback = {});
std::size_t count(const json& obj, const std::string& key, const std::string& where,
                  std::optional<std::size_t> fallback = {});
std::uint64_t u64(const json& obj, const std::string& key, const std::string& where,
                  std::optional<std::uint64_t> fallback = {});
std::string text(const json& obj, const std::string& key, const std::string& where,
                 std::optional<std::string> fallback = {});
bool flag(const json& obj, const std::string& key, const std::string& where, bool fallback);
std::vector<double> numbers(const json& obj, const std::string& key, const std::string& where);
std::vector<std::size_t> counts(const json& obj, const std::string& key, const std::string& where);

KernelSpec kernel(const json& obj, const std::string& where);

/// Seed from the options when given, otherwise from the config (default 1).
std::uint64_t master_seed(const json& cfg, const RunOptions& options);

/// Checks the optional "experiment" field against the runner.
void expect_experiment(const json& cfg, const std::string& name);

ExperimentReport start_report(const std::string& name, const json& cfg, std::uint64_t seed);

inline std::string cell(double v) { return format_number(v); }
inline std::string cell(std::size_t v) { return std::to_string(v); }
inline std::string cell_flag(bool v) { return v ? "true" : "false"; }

}  // namespace gpconc::config
