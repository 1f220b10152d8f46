#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "tbp/config.hpp"

namespace tbp {

struct RunRequest {
  std::string command;     // manifold | surface | simulate | pair | ensemble
  std::string subcommand;  // solve | sample, for manifold
  bool complete = false;   // manifold: also process the two companion triples
};

struct RunOutcome {
  int exit_code = 0;
  std::vector<std::filesystem::path> files;  // outputs, sidecar last
  std::string message;
};

inline constexpr int kExitOk = 0;
inline constexpr int kExitModuleError = 1;
inline constexpr int kExitUsage = 2;

/// Runs one command on a validated config and writes its files plus a JSON
/// sidecar `<command>.json` into cfg.resolved_output_dir(). Module errors
/// become exit code 1 with the diagnostic in `message` and on `log`.
RunOutcome run(const RunRequest& request, const RunConfig& cfg, std::ostream& log);

}  // namespace tbp
