// Acceptance suite: runs every verification check at full size and prints one line per
// check. Optional arguments select check numbers; --minimal uses the reduced sizes and
// --tables prints the attached data tables.

#include "checks.hpp"

#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <vector>

int main(int argc, char** argv) {
  using namespace wiener::checks;
  CheckConfig config;
  std::vector<int> selected;
  bool tables = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--minimal") == 0) {
      config.scale = Scale::kMinimal;
    } else if (std::strcmp(argv[i], "--tables") == 0) {
      tables = true;
    } else {
      selected.push_back(std::atoi(argv[i]));
    }
  }
  if (selected.empty())
    for (const auto& info : catalog()) selected.push_back(info.number);

  int failures = 0;
  for (int number : selected) {
    const CheckRecord r = run_check(number, config);
    std::printf("%s  %2d %-28s measured %-12.6g tolerance %-12.6g %7.1fs  %s\n", r.passed ? "PASS" : "FAIL", r.number,
                r.id.c_str(), r.measured, r.tolerance, r.runtime_seconds, r.detail.c_str());
    if (tables)
      for (const auto& t : r.tables) {
        std::printf("  [%s]", t.name.c_str());
        for (const auto& h : t.header) std::printf(" %s", h.c_str());
        std::printf("\n");
        for (const auto& row : t.rows) {
          std::printf("   ");
          for (double v : row) std::printf(" %.6g", v);
          std::printf("\n");
        }
      }
    std::fflush(stdout);
    failures += r.passed ? 0 : 1;
  }
  std::printf("%d of %zu checks passed\n", static_cast<int>(selected.size()) - failures, selected.size());
  return failures == 0 ? 0 : 1;
}
