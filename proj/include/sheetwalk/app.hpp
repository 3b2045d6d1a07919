#ifndef SHEETWALK_APP_HPP
#define SHEETWALK_APP_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sheetwalk/grid_io.hpp"
#include "sheetwalk/random.hpp"
#include "sheetwalk/sheet.hpp"

namespace sheetwalk {

inline constexpr const char* kArtifactVersion = "sheetwalk/1.0.0";

enum ExitCode : int {
  exit_ok = 0,
  exit_verification_failed = 1,
  exit_config = 2,
  exit_io = 3,
  exit_numeric = 4,
};

struct RunConfig {
  std::string command;
  std::int64_t n = 100;
  double lambda = 0.19;
  int d = 2;
  Seed seed = 1;
  std::size_t replications = 50;
  std::vector<int> grid;           // points per axis; empty means 101 on every axis
  std::string out;                 // empty: write to the returned output only
  std::string format;              // "csv" | "json"; empty: from the out extension
  LambdaMode mode = LambdaMode::theorem;
  int refinement = 4;
  std::vector<std::int64_t> ns;    // convergence schedule
  unsigned workers = 1;
  std::vector<std::string> only;   // verify: criterion names
  bool inject_fault = false;       // verify: corrupt one clock
};

/// Provenance block. Omits the worker count and output path, which must not
/// change the bytes of an artifact.
Json to_json(const RunConfig& config);

struct CommandResult {
  int exit_code = exit_ok;
  std::string output;                 // artifact text
  std::vector<std::string> warnings;
  std::string failure;                // verify: names of the failed criteria
};

/// Each runner validates the config, then writes the artifact to config.out
/// when set. Errors propagate as ConfigError, IoError, HorizonExhausted.
CommandResult run_simulate(const RunConfig& config);
CommandResult run_couple(const RunConfig& config);
CommandResult run_convergence(const RunConfig& config);
CommandResult run_verify(const RunConfig& config);

/// Parses argv, dispatches, and maps failures to exit codes. The artifact
/// goes to `out` unless --out is given; diagnostics go to `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace sheetwalk

#endif
