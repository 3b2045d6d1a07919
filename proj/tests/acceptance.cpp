// Acceptance gate: one line per criterion, exit status 0 only if all pass.
#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "sheetwalk/verify.hpp"

using namespace sheetwalk;

int main() {
  VerifyOptions options;
  if (const char* seed = std::getenv("SHEETWALK_SEED"))
    options.seed = std::strtoull(seed, nullptr, 10);
  options.workers = std::max(1u, std::thread::hardware_concurrency());

  int failures = 0;
  const auto& list = criteria();
  run_verification(options, {}, [&](const CriterionResult& r, double seconds) {
    const double limit = list[static_cast<std::size_t>(r.id - 1)].time_limit_seconds;
    const bool in_time = limit == 0.0 || seconds <= limit;
    const bool pass = r.pass && in_time;
    failures += pass ? 0 : 1;
    std::printf("[%s] %2d %-20s %8.1f s%s\n", pass ? "PASS" : "FAIL", r.id, r.name.c_str(), seconds,
                in_time ? "" : "  (over time limit)");
    if (!pass)
      std::printf("       %s\n", r.detail.dump().c_str());
    std::fflush(stdout);
  });
  std::printf("%d of %zu criteria passed\n", static_cast<int>(list.size()) - failures, list.size());
  return failures == 0 ? EXIT_SUCCESS : EXIT_FAILURE;
}
