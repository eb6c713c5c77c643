#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace vfc {

/// One acceptance-property evaluation, with the measured margins spelled
/// out so a failure is diagnosable from the one-line summary.
struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  bool skipped = false;
  std::string detail;
  double seconds = 0.0;
};

struct CriteriaOptions {
  bool quick = false;      // halved horizons, absolute tolerances x5
  std::uint64_t seed = 0;  // 0 = preset defaults
  std::string out_dir;     // when set, scenario artifacts are written there
};

/// Criteria that run in the default suite (everything except the slow
/// proof-constant end-to-end check, id 12).
const std::vector<int>& fast_criteria();

CriterionResult run_criterion(int id, const CriteriaOptions& opts);

/// Runs the figure presets with artifacts plus the criteria set, prints a
/// summary table, and returns a process exit status (0 = all PASS).
int repro_all(const CriteriaOptions& opts, bool include_slow);

}  // namespace vfc
