#pragma once

#include <functional>
#include <string>
#include <vector>

#include "itc/power.hpp"

namespace itc {

struct EquivalenceResult {
  bool ok = true;
  std::string detail;
};

// Equivalence of an intermittent run against the continuous oracle that
// replayed its committed sample log: equal final TS values, equal committed
// output sequence, equal committed TS snapshot per transition. Raw outputs
// (including those from failed attempts) are compared only in strict mode.
EquivalenceResult checkEquivalence(const Observation& run,
                                   const Observation& oracle,
                                   bool strictOutputs = false);

// Failure-free reference run of `oracleCp` (normally the none-mode compile of
// the same source) consuming the given committed sample log.
RunResult runOracleReplay(const CompiledProgram& oracleCp,
                          const RunConfig& cfg,
                          const std::vector<SampleRecord>& samples);

struct VerifyOptions {
  RunConfig cfg;
  bool strictOutputs = false;
  int parallelism = 0;  // 0 = hardware concurrency
  // called once per injection point with its full result (serialized)
  std::function<void(long k, const RunResult&)> perRunHook;
};

struct KStat {
  long k = 0;
  long copies = 0;  // redo: priv+init+preCommit+commit; undo: backup+rollback
  long transitions = 0;
  long reboots = 0;
  long rollbackCopies = 0;
  long rollbackExpected = 0;
  long restoreCopies = 0;
  long occupancy = 0;
};

struct ExhaustiveReport {
  long continuousSteps = 0;
  long injections = 0;
  long divergences = 0;
  std::vector<long> divergentSteps;  // first few
  std::string firstDetail;
  long vbmMismatches = 0;
  long maxCommitOccupancy = 0;
  bool recoveryFreeOfRestores = true;  // redo: no rollback/restore copies
  bool rollbackExact = true;  // undo: rollback copies == live backups
  std::vector<KStat> perK;
  bool ok() const { return divergences == 0; }
};

// For every k in [1, S] (S = continuous step count of `cp` under `cfg`):
// one run with a single failure after step k, checked against the oracle
// replaying that run's committed samples.
ExhaustiveReport runExhaustive(const CompiledProgram& cp,
                               const CompiledProgram& oracleCp,
                               const VerifyOptions& opt);

struct FuzzReport {
  long runs = 0;
  long failures = 0;
  std::string firstDetail;
  std::vector<std::uint64_t> failingSeeds;  // first few
  bool ok() const { return failures == 0; }
};

// Randomized budget-mode campaign: run i uses seed baseSeed+i and a capacity
// drawn uniformly from [capacityFloor, capacityCeil].
FuzzReport runFuzz(const CompiledProgram& cp, const CompiledProgram& oracleCp,
                   const VerifyOptions& opt, long nRuns,
                   std::uint64_t baseSeed, long capacityFloor,
                   long capacityCeil);

// Single run under an arbitrary model plus its oracle comparison.
struct VerifyRun {
  RunResult run;
  RunResult oracle;
  EquivalenceResult eq;
};
VerifyRun verifyOne(const CompiledProgram& cp, const CompiledProgram& oracleCp,
                    const RunConfig& cfg, const PowerModel& model,
                    bool strictOutputs = false);

std::string exhaustiveReportJson(const ExhaustiveReport& r);
std::string fuzzReportJson(const FuzzReport& r);

}  // namespace itc
