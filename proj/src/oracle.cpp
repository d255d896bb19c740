#include "itc/oracle.hpp"

#include <atomic>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace itc {

namespace {

std::string wordsToText(const std::vector<Word>& v) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < v.size(); ++i) os << (i ? ", " : "") << v[i];
  os << "]";
  return os.str();
}

}  // namespace

EquivalenceResult checkEquivalence(const Observation& run,
                                   const Observation& oracle,
                                   bool strictOutputs) {
  EquivalenceResult r;
  auto failWith = [&](std::string detail) {
    r.ok = false;
    r.detail = std::move(detail);
    return r;
  };

  for (const auto& [name, vals] : oracle.finalTs) {
    auto it = run.finalTs.find(name);
    if (it == run.finalTs.end())
      return failWith("final TS variable missing: " + name);
    if (it->second != vals)
      return failWith("final TS mismatch for " + name + ": run " +
                      wordsToText(it->second) + " vs oracle " +
                      wordsToText(vals));
  }

  if (run.outputs != oracle.outputs)
    return failWith("committed output mismatch: run " +
                    wordsToText(run.outputs) + " vs oracle " +
                    wordsToText(oracle.outputs));

  if (run.tsSnapshots.size() != oracle.tsSnapshots.size())
    return failWith(
        "transition count mismatch: run " +
        std::to_string(run.tsSnapshots.size()) + " vs oracle " +
        std::to_string(oracle.tsSnapshots.size()));
  for (size_t t = 0; t < run.tsSnapshots.size(); ++t) {
    if (run.tsSnapshots[t] != oracle.tsSnapshots[t])
      return failWith("committed TS snapshot mismatch at transition " +
                      std::to_string(t) + ": run " +
                      wordsToText(run.tsSnapshots[t]) + " vs oracle " +
                      wordsToText(oracle.tsSnapshots[t]));
  }

  if (strictOutputs && run.rawOutputs != oracle.outputs)
    return failWith("raw output mismatch (duplicates from failed attempts): " +
                    wordsToText(run.rawOutputs) + " vs " +
                    wordsToText(oracle.outputs));
  return r;
}

RunResult runOracleReplay(const CompiledProgram& oracleCp,
                          const RunConfig& cfg,
                          const std::vector<SampleRecord>& samples) {
  RunConfig ocfg = cfg;
  ocfg.replay = &samples;
  ocfg.sink = nullptr;
  return runProgram(oracleCp, ocfg, PowerModel::continuous());
}

namespace {

long copyCount(Mode mode, const RunStats& s) {
  switch (mode) {
    case Mode::Redo:
      // recording a (original, buffer) pair is the first of the two copies
      // per variable; committing the buffer back is the second
      return s.privCopies + s.arrInitCopies + s.preCommitEntries +
             s.commitCopies;
    case Mode::Undo:
      return s.backupEntries + s.rollbackCopies;
    case Mode::Ckpt:
      return s.ckptCopies + s.restoreCopies;
    case Mode::None:
      return 0;
  }
  return 0;
}

struct Agg {
  std::mutex mu;
  ExhaustiveReport rep;
  const VerifyOptions* opt = nullptr;
};

void recordRun(Agg& agg, const CompiledProgram& cp, long k,
               const RunResult& rr, const EquivalenceResult& eq) {
  std::lock_guard<std::mutex> lock(agg.mu);
  ExhaustiveReport& rep = agg.rep;
  KStat ks;
  ks.k = k;
  ks.copies = copyCount(cp.mode, rr.stats);
  ks.transitions = rr.stats.transitions;
  ks.reboots = rr.stats.reboots;
  ks.rollbackCopies = rr.stats.rollbackCopies;
  ks.rollbackExpected = rr.rollbackExpected < 0 ? 0 : rr.rollbackExpected;
  ks.restoreCopies = rr.stats.restoreCopies;
  ks.occupancy = rr.stats.maxCommitOccupancy;
  rep.perK.push_back(ks);

  rep.vbmMismatches += rr.stats.vbmMismatches;
  rep.maxCommitOccupancy =
      std::max(rep.maxCommitOccupancy, rr.stats.maxCommitOccupancy);
  if (cp.mode == Mode::Redo &&
      (rr.stats.rollbackCopies != 0 || rr.stats.restoreCopies != 0))
    rep.recoveryFreeOfRestores = false;
  if (cp.mode == Mode::Undo && rr.rollbackExpected >= 0 &&
      rr.stats.rollbackCopies != rr.rollbackExpected)
    rep.rollbackExact = false;

  if (!eq.ok) {
    rep.divergences++;
    if (rep.divergentSteps.size() < 32) rep.divergentSteps.push_back(k);
    if (rep.firstDetail.empty())
      rep.firstDetail = "after step " + std::to_string(k) + ": " + eq.detail;
  }
  if (agg.opt->perRunHook) agg.opt->perRunHook(k, rr);
}

int workerCount(const VerifyOptions& opt) {
  int n = opt.parallelism > 0
              ? opt.parallelism
              : static_cast<int>(std::thread::hardware_concurrency());
  return n > 0 ? n : 4;
}

}  // namespace

ExhaustiveReport runExhaustive(const CompiledProgram& cp,
                               const CompiledProgram& oracleCp,
                               const VerifyOptions& opt) {
  Agg agg;
  agg.opt = &opt;
  RunResult cont = runProgram(cp, opt.cfg, PowerModel::continuous());
  agg.rep.continuousSteps = cont.stats.steps;
  if (cont.verdict != RunVerdict::Halted) {
    agg.rep.divergences++;
    agg.rep.firstDetail =
        "continuous run did not halt: " + std::string(verdictName(cont.verdict)) +
        (cont.error.empty() ? "" : " (" + cont.error + ")");
    return agg.rep;
  }
  {
    // transform soundness: the instrumented continuous run must already
    // match the oracle
    RunResult base = runOracleReplay(oracleCp, opt.cfg, cont.obs.samples);
    EquivalenceResult eq =
        checkEquivalence(cont.obs, base.obs, opt.strictOutputs);
    recordRun(agg, cp, 0, cont, eq);
    if (!eq.ok) return agg.rep;
  }

  long S = cont.stats.steps;
  agg.rep.injections = S;
  std::atomic<long> next{1};
  auto worker = [&]() {
    for (;;) {
      long k = next.fetch_add(1);
      if (k > S) return;
      RunResult rr = runProgram(cp, opt.cfg, PowerModel::singleFailure(k));
      EquivalenceResult eq;
      if (rr.verdict != RunVerdict::Halted) {
        eq.ok = false;
        eq.detail = "run did not halt: " + std::string(verdictName(rr.verdict)) +
                    (rr.error.empty() ? "" : " (" + rr.error + ")");
      } else {
        RunResult orr = runOracleReplay(oracleCp, opt.cfg, rr.obs.samples);
        eq = checkEquivalence(rr.obs, orr.obs, opt.strictOutputs);
      }
      recordRun(agg, cp, k, rr, eq);
    }
  };
  int n = workerCount(opt);
  std::vector<std::thread> threads;
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  std::sort(agg.rep.perK.begin(), agg.rep.perK.end(),
            [](const KStat& a, const KStat& b) { return a.k < b.k; });
  std::sort(agg.rep.divergentSteps.begin(), agg.rep.divergentSteps.end());
  return agg.rep;
}

FuzzReport runFuzz(const CompiledProgram& cp, const CompiledProgram& oracleCp,
                   const VerifyOptions& opt, long nRuns,
                   std::uint64_t baseSeed, long capacityFloor,
                   long capacityCeil) {
  FuzzReport rep;
  rep.runs = nRuns;
  std::mutex mu;
  std::atomic<long> next{0};
  auto mix = [](std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
  };
  auto worker = [&]() {
    for (;;) {
      long i = next.fetch_add(1);
      if (i >= nRuns) return;
      std::uint64_t seed = baseSeed + static_cast<std::uint64_t>(i);
      long span = capacityCeil - capacityFloor + 1;
      long cap = capacityFloor +
                 static_cast<long>(mix(seed ^ 0xC0FFEE) % static_cast<std::uint64_t>(span));
      RunConfig cfg = opt.cfg;
      cfg.channels.seed = seed;
      cfg.sink = nullptr;
      RunResult rr = runProgram(cp, cfg, PowerModel::budget(cap));
      std::string detail;
      if (rr.verdict != RunVerdict::Halted) {
        detail = "run did not halt: " + std::string(verdictName(rr.verdict)) +
                 (rr.error.empty() ? "" : " (" + rr.error + ")");
      } else {
        RunResult orr = runOracleReplay(oracleCp, cfg, rr.obs.samples);
        EquivalenceResult eq =
            checkEquivalence(rr.obs, orr.obs, opt.strictOutputs);
        if (!eq.ok) detail = eq.detail;
      }
      if (!detail.empty()) {
        std::lock_guard<std::mutex> lock(mu);
        rep.failures++;
        if (rep.firstDetail.empty())
          rep.firstDetail = "seed " + std::to_string(seed) + " capacity " +
                            std::to_string(cap) + ": " + detail;
        if (rep.failingSeeds.size() < 32) rep.failingSeeds.push_back(seed);
      }
    }
  };
  int n = workerCount(opt);
  std::vector<std::thread> threads;
  for (int i = 0; i < n; ++i) threads.emplace_back(worker);
  for (auto& t : threads) t.join();
  return rep;
}

VerifyRun verifyOne(const CompiledProgram& cp, const CompiledProgram& oracleCp,
                    const RunConfig& cfg, const PowerModel& model,
                    bool strictOutputs) {
  VerifyRun v;
  v.run = runProgram(cp, cfg, model);
  if (v.run.verdict != RunVerdict::Halted) {
    v.eq.ok = false;
    v.eq.detail =
        "run did not halt: " + std::string(verdictName(v.run.verdict)) +
        (v.run.error.empty() ? "" : " (" + v.run.error + ")");
    return v;
  }
  v.oracle = runOracleReplay(oracleCp, cfg, v.run.obs.samples);
  v.eq = checkEquivalence(v.run.obs, v.oracle.obs, strictOutputs);
  return v;
}

std::string exhaustiveReportJson(const ExhaustiveReport& r) {
  nlohmann::json j;
  j["continuousSteps"] = r.continuousSteps;
  j["injections"] = r.injections;
  j["divergences"] = r.divergences;
  j["divergentSteps"] = r.divergentSteps;
  if (!r.firstDetail.empty()) j["firstDivergence"] = r.firstDetail;
  j["vbmMismatches"] = r.vbmMismatches;
  j["maxCommitOccupancy"] = r.maxCommitOccupancy;
  j["recoveryFreeOfRestores"] = r.recoveryFreeOfRestores;
  j["rollbackExact"] = r.rollbackExact;
  j["pass"] = r.ok();
  return j.dump(2);
}

std::string fuzzReportJson(const FuzzReport& r) {
  nlohmann::json j;
  j["runs"] = r.runs;
  j["failures"] = r.failures;
  if (!r.firstDetail.empty()) j["firstFailure"] = r.firstDetail;
  j["failingSeeds"] = r.failingSeeds;
  j["pass"] = r.ok();
  return j.dump(2);
}

}  // namespace itc
