#pragma once

// Run configuration for the command-line runner: flat key = value text with [sections],
// flag overrides, range checks and a round-trippable serialization.

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "wiener/girsanov.hpp"
#include "wiener/smoothing.hpp"

namespace wiener::cli {

class ConfigError : public std::invalid_argument {
 public:
  enum class Kind { kUnknownKey, kRange, kMalformed };

  ConfigError(Kind kind, std::string field, const std::string& message);

  Kind kind() const { return kind_; }
  /// Dotted key the error refers to ("grid.n"); empty for file-level errors.
  const std::string& field() const { return field_; }

 private:
  Kind kind_;
  std::string field_;
};

struct RunConfig {
  // [run]
  std::string command = "verify";
  std::string suite = "all";
  std::string preset = "full";
  std::uint64_t seed = 7;
  std::string output;  // empty: $WIENER_OUTPUT_DIR, then ./wiener_out
  int threads = 0;     // 0: available parallelism
  double time_limit = 300.0;
  // [grid]
  double T = 1.0;
  int n = 16;
  // [noise]
  std::string correlation = "scalar";
  double rho = 0.5;
  double lambda = 1.0;
  // [drift]
  std::string a1 = "zero";
  double eps1 = 0.1;
  std::string a2 = "zero";
  double eps2 = 0.1;
  // [chaos]
  int K = 4;
  // [mc]
  std::uint64_t m = 100000;
  // [smoothing]
  std::string f = "gaussian";
  double width = 1.0;
  double r_min = -8.0;
  double r_max = 8.0;
  int r_points = 65;
  int t_index = -1;  // -1: final grid time
  int substeps = 4;
  std::string third = "shortcut";
  std::string increment = "wick";
  // [fbm]
  double hurst = 0.75;
  // [tolerance]
  std::map<std::string, double> tolerance;

  bool operator==(const RunConfig&) const = default;
};

struct KeyInfo {
  std::string section;
  std::string key;
  std::string description;
};

/// Every accepted key, in serialization order. The [tolerance] section is open-ended and
/// accepts the ids listed by tolerance_ids().
const std::vector<KeyInfo>& schema();
const std::vector<std::string>& tolerance_ids();

/// Sets one key. `key` is either "section.key" or the bare key name.
void set_value(RunConfig& config, const std::string& key, const std::string& value);
std::string get_value(const RunConfig& config, const std::string& key);

/// Parses config text. Keys must appear inside a section.
RunConfig parse_config_text(const std::string& text, RunConfig base = {});
RunConfig parse_config_file(const std::string& path, RunConfig base = {});
/// Applies flag overrides in order, then validates.
RunConfig apply_overrides(RunConfig config, const std::vector<std::pair<std::string, std::string>>& overrides);
/// Cross-field checks (r_min < r_max, t_index <= n, model smallness, ...).
void validate(const RunConfig& config);

/// Serializes every key. `include_host` adds the output directory and thread count.
std::string to_text(const RunConfig& config, bool include_host = true);

// ---- model construction ----------------------------------------------------------------

TimeGrid make_grid(const RunConfig& c);
CovModel make_covariance(const RunConfig& c);
DriftSpec make_drift(const RunConfig& c);
SmoothingModel make_model(const RunConfig& c);
SpdeOptions make_spde_options(const RunConfig& c);
int effective_t_index(const RunConfig& c);

}  // namespace wiener::cli
