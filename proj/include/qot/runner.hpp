#pragma once

// Task execution for the command-line front end. Every task becomes a job
// producing one JSON report; jobs may run on several threads but reports are
// returned in task order.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "qot/optimize.hpp"
#include "qot/scenario.hpp"

namespace qot {

enum ExitCode : int {
  kExitOk = 0,
  kExitSchema = 2,
  kExitConstruction = 3,
  kExitNotConverged = 4,
  kExitAssertion = 5,
};

struct RunFlags {
  SolveOptions solve;
  /// Default class for tasks that do not name one.
  std::optional<PlanClass> cls;
  /// Cross-check distances against brute_oracle where sizes permit.
  bool oracle = false;
  std::uint64_t seed = 0;
  int parallel = 1;
};

struct Outcome {
  Json report;
  int code = kExitOk;
  std::string summary;  // one human-readable line
};

using Job = std::function<Outcome()>;

/// Runs the jobs on up to `parallel` threads and stamps report["task"] with
/// the job index.
std::vector<Outcome> run_jobs(const std::vector<Job>& jobs, int parallel);
/// First non-zero code in task order, 0 when every job succeeded.
int exit_code(const std::vector<Outcome>& outcomes);

std::vector<Job> scenario_jobs(const Scenario& sc, const RunFlags& flags);

/// Built-in families: "classical_4x2" (zero instance, then `grid` random
/// chains with the deviation bound), "classical_4x2_eps" (`grid` values of
/// eps in [0, 0.2]) and "spin_half" (`grid`^3 points of (lambda, eta, phi)).
/// One job per row.
std::vector<Job> paper_example_jobs(const std::string& name, int grid, const RunFlags& flags);
int default_grid(const std::string& name);
/// Trailing report for a finished spin-half table: the smallest W on rows
/// where the condition vanishes.
Outcome spin_half_summary(const std::vector<Outcome>& rows);

}  // namespace qot
