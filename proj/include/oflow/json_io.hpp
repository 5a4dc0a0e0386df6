#pragma once

// JSON serialization of model objects and the file formats exchanged between
// command-line runs: fitted-model arrays (fits.json), impact calibration maps
// (impact.json), backtest reports (report.json), and the run manifest written
// next to every output artifact.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "oflow/backtest.hpp"
#include "oflow/fit.hpp"
#include "oflow/hawkes.hpp"

namespace oflow {

inline constexpr const char* kToolVersion = "0.1.0";

// 64-bit FNV-1a over the bytes of `data`; platform-independent.
std::uint64_t fnv1a64(const std::string& data);

// Provenance stamp carried by every output artifact: a hash of the effective
// run configuration, the root seed, and the tool version. JSON payload files
// keep their documented schema, so the manifest is written as a sibling file
// `<output>.manifest.json` for every artifact alike.
struct Manifest {
  std::uint64_t config_hash = 0;
  std::uint64_t seed = 0;
  std::string version = kToolVersion;
};

nlohmann::json manifest_to_json(const Manifest& m);
Manifest manifest_from_json(const nlohmann::json& j);
void write_manifest(const std::string& output_path, const Manifest& m);

// Generic file helpers. Parsing failures raise DataError with the path.
nlohmann::json load_json_file(const std::string& path);
void write_json_file(const std::string& path, const nlohmann::json& j);

// Throws ConfigError naming the first key of `obj` not in `allowed`.
void reject_unknown_keys(const nlohmann::json& obj,
                         const std::vector<std::string>& allowed,
                         const std::string& context);

// Model round trips. The spec object is written as
//   {P, alpha: [[..]], beta: [[..]], baseline: [{kind, ...}, ...], m1};
// `baseline` may be read back from a single object, which is replicated
// across all P components.
nlohmann::json baseline_to_json(const Baseline& b);
Baseline baseline_from_json(const nlohmann::json& j);
nlohmann::json spec_to_json(const HawkesSpec& spec);
HawkesSpec spec_from_json(const nlohmann::json& j);

nlohmann::json fit_to_json(const FitResult& fit);
FitResult fit_from_json(const nlohmann::json& j);

// fits.json is a literal array of fit objects.
void write_fits_file(const std::string& path, const std::vector<FitResult>& fits,
                     const Manifest& manifest);
std::vector<FitResult> read_fits_file(const std::string& path);

// One (product, hours-to-gate-closure bin) cell of the impact calibration.
// Bin label h covers times with hours-to-closure in (h-1, h].
struct ImpactBin {
  std::string product_id;
  int hours_to_close = 0;
  double eta = 0.0;
  double sigma = 0.0;
  // Time-weighted mean bid-ask spread over the bin; absent without quote data.
  std::optional<double> mean_bas;
};

// impact.json is a nested object {product: {bin: {eta, sigma, mean_bas}}}.
void write_impact_file(const std::string& path, const std::vector<ImpactBin>& bins,
                       const Manifest& manifest);
std::vector<ImpactBin> read_impact_file(const std::string& path);

// report.json mirrors BacktestReport field-for-field. Non-finite entries
// (undefined relative improvements) are serialized as null and read back as
// NaN.
nlohmann::json report_to_json(const BacktestReport& report);
BacktestReport report_from_json(const nlohmann::json& j);
void write_report_file(const std::string& path, const BacktestReport& report,
                       const Manifest& manifest);
BacktestReport read_report_file(const std::string& path);

}  // namespace oflow
