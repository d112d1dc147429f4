#pragma once

// Verification checks shared by the acceptance suite and the `verify` command. Each check
// compares a library computation against an independent reference and returns a record.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace wiener::checks {

enum class Scale { kFull, kMinimal };

struct CheckConfig {
  Scale scale = Scale::kFull;
  std::uint64_t seed = 7;
  /// Per-check tolerance overrides, keyed by check id.
  std::map<std::string, double> tolerance;
};

/// Plot or diagnostic data attached to a record; written as CSV by the CLI.
struct Table {
  std::string name;
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

struct CheckRecord {
  int number = 0;
  std::string id;      // short identifier, e.g. "chaos_norm"
  std::string anchor;  // entry of the README's anchor map
  std::string title;
  double measured = 0.0;
  double tolerance = 0.0;
  bool passed = false;
  std::string detail;
  std::vector<Table> tables;
  double runtime_seconds = 0.0;
};

struct CheckInfo {
  int number;
  std::string id;
  std::string anchor;
  std::string suite;
  std::string title;
};

const std::vector<CheckInfo>& catalog();
std::vector<std::string> suite_names();

/// Runs check `number` (1-based catalog position).
CheckRecord run_check(int number, const CheckConfig& config);
/// Runs every check of a suite ("all" selects the whole catalog).
std::vector<CheckRecord> run_suite(const std::string& suite, const CheckConfig& config);

}  // namespace wiener::checks
