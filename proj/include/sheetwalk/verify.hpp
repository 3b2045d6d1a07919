#ifndef SHEETWALK_VERIFY_HPP
#define SHEETWALK_VERIFY_HPP

#include <functional>
#include <string>
#include <vector>

#include "sheetwalk/grid_io.hpp"
#include "sheetwalk/random.hpp"

namespace sheetwalk {

struct VerifyOptions {
  Seed seed = 1;
  unsigned workers = 1;
  /// Test hook: doubles one clock before reconstruction so the knot identity breaks.
  bool inject_clock_fault = false;
};

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  Json detail;
};

struct CriterionInfo {
  int id;
  const char* name;
  const char* summary;
  double time_limit_seconds; // 0: no limit stated
};

/// Called after each criterion with its wall-clock time.
using CriterionObserver = std::function<void(const CriterionResult&, double seconds)>;

/// The ten checks in execution order.
const std::vector<CriterionInfo>& criteria();

/// Runs every criterion, or only those whose name appears in `only`.
/// Throws ConfigError for an unknown name.
std::vector<CriterionResult> run_verification(const VerifyOptions& options,
                                              const std::vector<std::string>& only = {},
                                              const CriterionObserver& observer = {});

Json verification_report(const std::vector<CriterionResult>& results);

} // namespace sheetwalk

#endif
