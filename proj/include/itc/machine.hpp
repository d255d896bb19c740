#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "itc/compile.hpp"

namespace itc {

// Access costs in abstract energy units. Copies are priced as their
// constituent accesses (an NV-to-NV copy costs two NV accesses).
struct CostTable {
  long compute = 1;
  long volAccess = 1;
  long nvAccess = 3;
};

// Parses "key=value" lines (compute / volAccess / nvAccess), '#' comments.
CostTable parseCostTable(const std::string& text);

struct SampleRecord {
  std::string channel;
  Word value;
  bool operator==(const SampleRecord&) const = default;
};

struct ChannelConfig {
  // Explicit per-channel streams, cycled when exhausted. Channels without a
  // stream draw 16-bit pseudorandom values from (seed, channel name, draw#).
  std::map<std::string, std::vector<Word>> streams;
  std::uint64_t seed = 1;
};

// Externally visible behaviour of one run: committed effects only, except
// rawOutputs which also keeps outputs from attempts that later failed.
struct Observation {
  std::map<std::string, std::vector<Word>> finalTs;
  std::vector<Word> outputs;
  std::vector<SampleRecord> samples;
  std::vector<std::vector<Word>> tsSnapshots;  // TS region per transition
  std::vector<Word> rawOutputs;
};

struct RunStats {
  long steps = 0;
  long reboots = 0;
  long transitions = 0;
  long privCopies = 0;
  long preCommitEntries = 0;
  long commitCopies = 0;
  long backupEntries = 0;
  long rollbackCopies = 0;
  long ckptCopies = 0;
  long restoreCopies = 0;
  long vbmTests = 0;
  long vbmSets = 0;
  long vbmMismatches = 0;  // shadow-model disagreements
  long arrInitCopies = 0;
  long userSteps = 0;        // committed user statements
  long wastedUserSteps = 0;  // user statements from failed attempts
  long maxCommitOccupancy = 0;
  long maxBackupOccupancy = 0;
  long maxAttemptCost = 0;  // dearest completed attempt incl. its transition
  long maxBootCost = 0;

  long costLogging = 0;
  long costTransition = 0;
  long costReboot = 0;
  long costUseful = 0;
  long costWasted = 0;
  long totalCost() const {
    return costLogging + costTransition + costReboot + costUseful + costWasted;
  }
};

enum class Outcome { Running, Halted, ProgramError, StepLimit };

struct TraceEvent {
  long step;
  const char* kind;
  int task;
  long addr = -1;    // -1 when the event has no single address
  Word old = 0;
  Word value = 0;
  Word version = 0;  // cur_version at the time of the event
  int line = 0;
};
using TraceSink = std::function<void(const TraceEvent&)>;

struct RunConfig {
  CostTable cost;
  ChannelConfig channels;
  long maxSteps = 20'000'000;
  Word initialVersion = 0;  // pre-set cur_version in the fresh image
  bool shadowVbm = true;
  TraceSink sink;  // optional; adds read/write level events
  const std::vector<SampleRecord>* replay = nullptr;  // oracle sample feed
};

// Step-accurate simulator for one compiled program on one NV image. Every
// step is a single atomic action (a statement, an instrumentation call, or
// one word of a commit/rollback/snapshot copy); power failures may be
// injected between any two steps via reboot().
class Machine {
 public:
  Machine(const CompiledProgram& cp, RunConfig cfg);

  void step();              // one atomic action
  void reboot();            // power failure now; next step starts the boot
  bool done() const { return outcome_ != Outcome::Running; }
  Outcome outcome() const { return outcome_; }
  const std::string& error() const { return error_; }

  long lastStepCost() const { return lastStepCost_; }
  Word nvWord(std::uint32_t addr) const { return nv_[addr]; }
  const std::vector<Word>& nvImage() const { return nv_; }
  int currentTask() const;  // haltSentinel() once halted

  // Undo rollback work the next boot would have to do if power failed now.
  long pendingRollbackCopies() const;

  const RunStats& stats() const { return stats_; }
  const Observation& observation() const { return obs_; }
  Observation takeObservation();  // fills finalTs from the NV image

  // Identity of the attempt that was running when reboot() was last called:
  // (task, steps executed, cost). Used for forward-progress detection.
  struct AttemptSig {
    int task = -1;
    long steps = 0;
    long cost = 0;
    bool operator==(const AttemptSig&) const = default;
  };
  AttemptSig lastFailedAttempt() const { return lastFailed_; }

 private:
  struct Micro {
    enum class K : std::uint8_t { CopyWord, WriteWord, Trace };
    K k;
    std::uint32_t dst = 0;
    std::uint32_t src = 0;  // CopyWord
    Word value = 0;         // WriteWord
    std::uint8_t tag = 0;
  };
  enum class Cont : std::uint8_t {
    BootVersion,   // enqueue version bump, then init
    RunInit,
    Recover,       // mode-specific boot recovery
    ResumeTask,    // restart nv[cur_task] (failed attempt retry)
    BeginTask,     // fresh start of nv[cur_task] after a transition
    Exec,
    Done,
  };

  void enqueueVersionBump(bool boot);
  void enqueueTransition(int targetTask);
  void enqueuePreCommit(std::uint32_t orig, std::uint32_t buf, int line);
  void enqueueBackup(std::uint32_t orig, Word value, int line);
  void dispatch();           // advance cont_ until an atomic action is pending
  void execMicro(const Micro& m);
  bool execInstr(const Instr& i);  // false when it only queued micro-steps

  Word evalExpr(std::int32_t id);
  Word loadRef(const MemRef& r);
  long resolveIndex(const MemRef& r);  // bounds-checked subscript
  void storeRef(const MemRef& r, Word v);
  Word drawSample(std::int32_t chan);

  void setBucket(bool user, Instr::Op op);
  void chargeCurrent(long units);  // into the bucket selected by setBucket
  void chargeOverhead(long units, std::uint8_t tag);
  void fail(const std::string& msg, int line);
  void linearize();          // commit point: flush pending observations
  void beginAttempt(bool retry);
  void trace(const char* kind, long addr, Word value, int line, Word old = 0);

  const CompiledProgram& cp_;
  RunConfig cfg_;
  std::vector<Word> nv_, vol_;
  std::deque<Micro> q_;
  Cont cont_ = Cont::BootVersion;
  int pc_ = 0;
  bool inInit_ = false;
  bool firstBoot_ = true;
  bool booting_ = true;       // current overhead belongs to a boot sequence
  Outcome outcome_ = Outcome::Running;
  std::string error_;

  RunStats stats_;
  Observation obs_;
  long* bucket_ = nullptr;
  long lastStepCost_ = 0;
  long pendingCost_ = 0;      // user cost of the attempt in flight
  long pendingUserSteps_ = 0;
  std::vector<Word> pendingOutputs_;
  std::vector<SampleRecord> pendingSamples_;
  long attemptCost_ = 0;      // all costs since the attempt began
  long attemptSteps_ = 0;
  long bootCost_ = 0;
  AttemptSig lastFailed_;
  int pendingTransTarget_ = 0;

  std::vector<std::uint8_t> shadowVbm_;  // mirrors every vbm word
  std::map<std::int32_t, std::uint64_t> channelPos_;
  size_t replayPos_ = 0;
};

}  // namespace itc
