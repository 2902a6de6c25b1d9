#pragma once

#include <optional>
#include <string>
#include <vector>

#include "perfhom/config.hpp"
#include "perfhom/error.hpp"

namespace perfhom {

enum class Command { GeometryCheck, Corrector, Study, Poincare, All };

std::optional<Command> parse_command(const std::string& name);
const char* to_string(Command c);

struct Verdict {
  std::string name;
  bool pass = false;
  std::string measured;  // no spaces, goes into summary lines
  std::string expected;
  std::string what;      // human description for logs
};

struct RunOptions {
  std::string out_dir;  // empty: config run.output
  int jobs = 0;         // 0: config run.jobs
  bool self_test = false;
};

struct RunReport {
  std::vector<Verdict> verdicts;
  std::vector<std::string> artifacts;
  std::string log;

  bool all_pass() const;
  int exit_code() const { return all_pass() ? 0 : 1; }
  /// "PASS|FAIL name measured expected" per verdict.
  std::string summary() const;
};

/// Runs a command and writes its artifacts. Configuration and geometry
/// problems throw Config/Argument/Geometry errors, solver trouble throws
/// NoConvergence/Breakdown/Singular; verdict failures only show in the report.
RunReport run(Command command, const ExperimentConfig& config, const RunOptions& options = {});

/// 2 for configuration, argument, geometry and I/O errors, 3 for solver failures.
int exit_code_for(ErrorKind kind);

}  // namespace perfhom
