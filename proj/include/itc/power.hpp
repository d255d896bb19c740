#pragma once

#include <string>
#include <vector>

#include "itc/machine.hpp"

namespace itc {

struct PowerModel {
  enum class Kind { Continuous, Budget, Schedule, SingleFailure };
  Kind kind = Kind::Continuous;
  long capacity = 0;             // budget: fail when cost since boot exceeds it
  std::vector<long> schedule;    // global step counts, strictly increasing
  long failAfterStep = -1;       // single failure: inject after this many steps

  static PowerModel continuous();
  static PowerModel budget(long capacity);
  static PowerModel scheduleAt(std::vector<long> steps);
  static PowerModel singleFailure(long step);

  // "continuous" | "budget=N" | "schedule=<path>" ; "exhaustive" is a
  // campaign, not a single model, and is rejected here.
  static PowerModel parse(const std::string& spec);
};

// Parses a schedule file: one step index per line, '#' comments.
std::vector<long> parseScheduleFile(const std::string& text);

enum class RunVerdict { Halted, ProgramError, ForwardProgress, StepLimit };
const char* verdictName(RunVerdict v);

struct RunResult {
  RunVerdict verdict = RunVerdict::Halted;
  std::string error;
  Observation obs;
  RunStats stats;
  std::vector<Word> nvImage;
  int violationTask = -1;        // forward-progress violations
  long rollbackExpected = -1;    // single-failure: live backups at injection
};

// Executes one full run under the model. Forward progress is violated after
// `fpLimit` consecutive identical failed attempts of the same task.
RunResult runProgram(const CompiledProgram& cp, const RunConfig& cfg,
                     const PowerModel& model, int fpLimit = 3);

// Budget capacity that always allows progress: dearest attempt plus worst
// boot (version rollover, recovery replay, init) from observed continuous
// stats plus static recovery bounds.
long safeCapacity(const CompiledProgram& cp, const RunStats& continuousStats,
                  const CostTable& cost);

std::string runStatsJson(const RunStats& s);
std::string runResultJson(const RunResult& r, const CompiledProgram& cp);

// Ordered name -> value dump of the NV image, by symbol address.
std::string nvDumpJson(const CompiledProgram& cp, const std::vector<Word>& nv);

std::string traceEventJson(const TraceEvent& e);

}  // namespace itc
