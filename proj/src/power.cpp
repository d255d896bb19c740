#include "itc/power.hpp"

#include <algorithm>
#include <sstream>

#include "json.hpp"

namespace itc {

PowerModel PowerModel::continuous() { return PowerModel{}; }

PowerModel PowerModel::budget(long capacity) {
  PowerModel m;
  m.kind = Kind::Budget;
  m.capacity = capacity;
  return m;
}

PowerModel PowerModel::scheduleAt(std::vector<long> steps) {
  PowerModel m;
  m.kind = Kind::Schedule;
  m.schedule = std::move(steps);
  return m;
}

PowerModel PowerModel::singleFailure(long step) {
  PowerModel m;
  m.kind = Kind::SingleFailure;
  m.failAfterStep = step;
  return m;
}

PowerModel PowerModel::parse(const std::string& spec) {
  if (spec == "continuous") return continuous();
  if (spec.rfind("budget=", 0) == 0) {
    long cap;
    try {
      cap = std::stol(spec.substr(7));
    } catch (...) {
      throw Diag("bad budget capacity in '" + spec + "'");
    }
    if (cap <= 0) throw Diag("budget capacity must be positive");
    return budget(cap);
  }
  if (spec.rfind("schedule=", 0) == 0)
    throw Diag("schedule files are resolved by the caller");
  throw Diag("unknown power model '" + spec + "'");
}

std::vector<long> parseScheduleFile(const std::string& text) {
  std::vector<long> steps;
  std::istringstream in(text);
  std::string line;
  int lineNo = 0;
  while (std::getline(in, line)) {
    ++lineNo;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    long v;
    if (ls >> v) {
      if (v < 0) throw Diag("schedule: negative step index", lineNo);
      if (!steps.empty() && v <= steps.back())
        throw Diag("schedule: step indices must be strictly increasing",
                   lineNo);
      steps.push_back(v);
    }
  }
  return steps;
}

const char* verdictName(RunVerdict v) {
  switch (v) {
    case RunVerdict::Halted: return "halted";
    case RunVerdict::ProgramError: return "program_error";
    case RunVerdict::ForwardProgress: return "forward_progress_violation";
    case RunVerdict::StepLimit: return "step_limit";
  }
  return "?";
}

RunResult runProgram(const CompiledProgram& cp, const RunConfig& cfg,
                     const PowerModel& model, int fpLimit) {
  Machine m(cp, cfg);
  RunResult r;
  long costSinceBoot = 0;
  size_t schedIdx = 0;
  int consecutive = 0;
  bool haveLast = false;
  Machine::AttemptSig lastSig;
  long transitionsAtLastFail = 0;
  bool injected = false;

  while (!m.done()) {
    m.step();
    costSinceBoot += m.lastStepCost();
    if (m.done()) break;

    bool failNow = false;
    switch (model.kind) {
      case PowerModel::Kind::Continuous:
        break;
      case PowerModel::Kind::Budget:
        failNow = costSinceBoot > model.capacity;
        break;
      case PowerModel::Kind::Schedule:
        if (schedIdx < model.schedule.size() &&
            m.stats().steps >= model.schedule[schedIdx]) {
          failNow = true;
          schedIdx++;
        }
        break;
      case PowerModel::Kind::SingleFailure:
        if (!injected && m.stats().steps >= model.failAfterStep) failNow = true;
        break;
    }
    if (!failNow) continue;

    if (model.kind == PowerModel::Kind::SingleFailure && !injected)
      r.rollbackExpected = m.pendingRollbackCopies();
    injected = true;
    m.reboot();
    costSinceBoot = 0;
    Machine::AttemptSig sig = m.lastFailedAttempt();
    // A commit between two failures is real progress, whatever the attempt
    // signatures look like. Without one, consecutive failures accumulate; a
    // repeated signature then confirms the machine is in a periodic orbit.
    bool committedSince = m.stats().transitions != transitionsAtLastFail;
    transitionsAtLastFail = m.stats().transitions;
    bool repeated = haveLast && !committedSince && sig == lastSig;
    consecutive = committedSince ? 1 : consecutive + 1;
    haveLast = true;
    lastSig = sig;
    if (consecutive >= fpLimit && repeated) {
      r.verdict = RunVerdict::ForwardProgress;
      r.violationTask = sig.task;
      r.obs = m.takeObservation();
      r.stats = m.stats();
      r.nvImage = m.nvImage();
      return r;
    }
  }

  switch (m.outcome()) {
    case Outcome::Halted: r.verdict = RunVerdict::Halted; break;
    case Outcome::ProgramError: r.verdict = RunVerdict::ProgramError; break;
    case Outcome::StepLimit: r.verdict = RunVerdict::StepLimit; break;
    case Outcome::Running: r.verdict = RunVerdict::StepLimit; break;
  }
  r.error = m.error();
  r.obs = m.takeObservation();
  r.stats = m.stats();
  r.nvImage = m.nvImage();
  return r;
}

long safeCapacity(const CompiledProgram& cp, const RunStats& continuousStats,
                  const CostTable& cost) {
  long vbmWords = 0;
  for (const auto& [base, len] : cp.vbmRegions) vbmWords += len;
  long recovery = 0;
  switch (cp.mode) {
    case Mode::Redo:
      recovery = cp.commitCapacity * 2 * cost.nvAccess + 4 * cost.nvAccess;
      break;
    case Mode::Undo:
      recovery = cp.commitCapacity * cost.nvAccess + 4 * cost.nvAccess;
      break;
    case Mode::Ckpt:
      recovery = static_cast<long>(cp.snapshotWords) * 2 * cost.nvAccess +
                 cost.nvAccess;
      break;
    case Mode::None:
      break;
  }
  long rolloverClear = vbmWords * cost.nvAccess;
  return continuousStats.maxAttemptCost + continuousStats.maxBootCost +
         recovery + rolloverClear + 8 * cost.nvAccess;
}

namespace {

nlohmann::json statsToJson(const RunStats& s) {
  nlohmann::json j;
  j["steps"] = s.steps;
  j["reboots"] = s.reboots;
  j["transitions"] = s.transitions;
  j["privCopies"] = s.privCopies;
  j["preCommitEntries"] = s.preCommitEntries;
  j["commitCopies"] = s.commitCopies;
  j["backupEntries"] = s.backupEntries;
  j["rollbackCopies"] = s.rollbackCopies;
  j["ckptCopies"] = s.ckptCopies;
  j["restoreCopies"] = s.restoreCopies;
  j["vbmTests"] = s.vbmTests;
  j["vbmSets"] = s.vbmSets;
  j["vbmMismatches"] = s.vbmMismatches;
  j["arrInitCopies"] = s.arrInitCopies;
  j["userSteps"] = s.userSteps;
  j["wastedUserSteps"] = s.wastedUserSteps;
  j["maxCommitOccupancy"] = s.maxCommitOccupancy;
  j["maxBackupOccupancy"] = s.maxBackupOccupancy;
  j["maxAttemptCost"] = s.maxAttemptCost;
  j["maxBootCost"] = s.maxBootCost;
  j["cost"] = {{"logging", s.costLogging},
               {"transition", s.costTransition},
               {"reboot", s.costReboot},
               {"useful", s.costUseful},
               {"wasted", s.costWasted},
               {"total", s.totalCost()}};
  return j;
}

}  // namespace

std::string runStatsJson(const RunStats& s) { return statsToJson(s).dump(2); }

std::string runResultJson(const RunResult& r, const CompiledProgram& cp) {
  nlohmann::json j;
  j["verdict"] = verdictName(r.verdict);
  if (!r.error.empty()) j["error"] = r.error;
  if (r.violationTask >= 0 &&
      r.violationTask < static_cast<int>(cp.tasks.size()))
    j["violationTask"] = cp.tasks[static_cast<size_t>(r.violationTask)].name;
  j["stats"] = statsToJson(r.stats);
  nlohmann::json ts = nlohmann::json::object();
  for (const auto& [name, vals] : r.obs.finalTs) {
    if (vals.size() == 1) ts[name] = vals[0];
    else ts[name] = vals;
  }
  j["finalTs"] = ts;
  j["outputs"] = r.obs.outputs;
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : r.obs.samples)
    samples.push_back({{"channel", s.channel}, {"value", s.value}});
  j["samples"] = samples;
  return j.dump(2);
}

std::string nvDumpJson(const CompiledProgram& cp, const std::vector<Word>& nv) {
  std::vector<NvSymbol> syms = cp.symbols;
  std::stable_sort(syms.begin(), syms.end(),
                   [](const NvSymbol& a, const NvSymbol& b) {
                     return a.addr < b.addr;
                   });
  nlohmann::ordered_json j = nlohmann::ordered_json::object();
  for (const auto& s : syms) {
    if (s.len == 1) {
      j[s.name] = nv[s.addr];
    } else {
      nlohmann::ordered_json arr = nlohmann::ordered_json::array();
      for (std::uint32_t i = 0; i < s.len; ++i) arr.push_back(nv[s.addr + i]);
      j[s.name] = arr;
    }
  }
  return j.dump(2);
}

std::string traceEventJson(const TraceEvent& e) {
  nlohmann::json j;
  j["step"] = e.step;
  j["kind"] = e.kind;
  j["addr"] = e.addr;
  j["old"] = e.old;
  j["new"] = e.value;
  j["task"] = e.task;
  j["version"] = e.version;
  if (e.line > 0) j["line"] = e.line;
  return j.dump();
}

}  // namespace itc
