#pragma once

#include <map>
#include <ostream>
#include <string>
#include <string_view>

#include "json.hpp"
#include "splitknock/evaluation.hpp"
#include "splitknock/filter.hpp"
#include "splitknock/knockoff_copy.hpp"

namespace splitknock::serialize {

using Json = nlohmann::ordered_json;

inline constexpr std::string_view kSchema = "splitknock/1";

std::string_view library_version() noexcept;

// %.17g, with non-finite values spelled Infinity / -Infinity / NaN.
std::string format_double(double v);

// Compact JSON text in which every floating-point number is written with
// 17 significant digits and non-finite numbers become the strings
// "Infinity", "-Infinity", "NaN".
std::string dump(const Json& j, int indent = 2);

// Reads a number written by dump(), accepting the non-finite spellings.
double number_from_json(const Json& j);

// Selection result keys: schema, W, Z, Z_tilde, r, T, selected, signs,
// coordinates, config, diagnostics. Indices in JSON are 1-based.
Json to_json(const SelectionResult& result);
SelectionResult selection_from_json(const Json& j);

Json to_json(const SplitConfig& config);
SplitConfig config_from_json(const Json& j);

Json to_json(const CopyResiduals& residuals);

struct RunManifest {
  std::string command;
  Json config = Json::object();
  std::map<std::string, std::string> input_digests;  // path -> sha256 hex
  std::string version{library_version()};
  std::uint64_t seed = 0;
  std::string wall_clock;  // ISO 8601 UTC; excluded from determinism checks
};

Json to_json(const RunManifest& manifest);

// Lower-case hex SHA-256 of a file's bytes / of a string.
std::string sha256_file(const std::string& path);
std::string sha256_hex(std::string_view bytes);

// Current UTC time as YYYY-MM-DDTHH:MM:SSZ.
std::string utc_timestamp();

// Experiment tables. Tidy: one row per (nu, replicate, variant) with columns
// scenario, mode, variant, log10_nu, replicate, fdp_dir, mfdp, power,
// n_selected, threshold. Aggregate: one row per (nu, variant).
void write_tidy_csv(const ExperimentReport& report, std::ostream& out);
void write_aggregate_csv(const ExperimentReport& report, std::ostream& out);

}  // namespace splitknock::serialize
