// Acceptance checks: one pass/fail line per criterion. Exit code 0 only when
// every criterion holds.
#include <chrono>
#include <cstdio>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "itc/analysis.hpp"
#include "itc/bench.hpp"
#include "itc/parser.hpp"
#include "path_oracle.hpp"

using namespace itc;

namespace {

int failures = 0;
std::string detail;

void note(const std::string& s) {
  if (detail.empty()) detail = s;
}

bool check(bool ok, const std::string& what) {
  if (!ok) note(what);
  return ok;
}

double seconds(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

Program corpus(const std::string& stem) {
  return loadProgramFile(std::string(CORPUS_DIR) + "/" + stem + ".at");
}

const std::vector<std::string> kSafePrograms = {
    "bc",  "cem", "cf", "fig4", "fig6", "full_array_write",
    "heater_safe_balanced", "heater_safe_task", "rsa"};

RunConfig cfgFor(const std::string& stem) {
  RunConfig cfg;
  cfg.channels = defaultChannels(stem);
  return cfg;
}

ExhaustiveReport sweep(const std::string& stem, Mode mode,
                       Word initialVersion = 0) {
  Program p = corpus(stem);
  CompiledProgram cp = compile(p, mode);
  CompiledProgram oracle = compile(p, Mode::None);
  VerifyOptions opt;
  opt.cfg = cfgFor(stem);
  opt.cfg.initialVersion = initialVersion;
  return runExhaustive(cp, oracle, opt);
}

// 1. Hazard analysis: the known fixture plus 1000 random tasks against the
// independent path-enumeration oracle, inside a minute.
bool c1() {
  Program fig4 = corpus("fig4");
  WarReport r = analyzeProgram(fig4);
  bool ok = check(r.perTask.at("main") == std::set<std::string>{"c"},
                  "fig4 hazard set is not exactly {c}");
  auto t0 = std::chrono::steady_clock::now();
  int tested = 0;
  for (unsigned seed = 1; tested < 1000; ++seed) {
    testutil::TaskGen g(seed);
    std::string src = g.program();
    Program p = parseProgram(src);
    auto got = findWarVars(p.tasks[0], p, summarizeFunctions(p), false);
    auto want = testutil::oracleWar(p.tasks[0], p);
    if (got != want) {
      note("analysis disagrees with the path oracle at seed " +
           std::to_string(seed));
      ok = false;
    }
    ++tested;
  }
  ok &= check(seconds(t0) < 60.0, "random-task comparison exceeded 60s");
  return ok;
}

// 2. Exhaustive single-failure sweeps: clean for every protected program in
// both logging modes, each within five minutes; the unprotected fixture
// diverges.
bool c2() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    for (Mode mode : {Mode::Redo, Mode::Undo}) {
      auto t0 = std::chrono::steady_clock::now();
      ExhaustiveReport rep = sweep(stem, mode);
      ok &= check(rep.ok(), stem + " " + modeName(mode) + ": " +
                                std::to_string(rep.divergences) +
                                " divergences");
      ok &= check(seconds(t0) < 300.0, stem + " sweep exceeded 5 minutes");
    }
  }
  {
    Program p = corpus("rsa_unprotected");
    CompiledProgram cp = compile(p, Mode::None);
    ExhaustiveReport rep = runExhaustive(cp, cp, VerifyOptions{});
    ok &= check(rep.divergences >= 1,
                "the unprotected fixture produced no divergence");
  }
  return ok;
}

// 3. 10,000 randomized budget runs per program per mode, all equivalent.
bool c3() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    Program p = corpus(stem);
    CompiledProgram oracle = compile(p, Mode::None);
    for (Mode mode : {Mode::Redo, Mode::Undo, Mode::Ckpt}) {
      CompiledProgram cp = compile(p, mode);
      VerifyOptions opt;
      opt.cfg = cfgFor(stem);
      RunResult c = runProgram(cp, opt.cfg, PowerModel::continuous());
      long floor = safeCapacity(cp, c.stats, opt.cfg.cost);
      FuzzReport rep =
          runFuzz(cp, oracle, opt, 10000, 42, floor, floor * 4);
      ok &= check(rep.runs == 10000 && rep.ok(),
                  stem + " " + modeName(mode) + ": " +
                      std::to_string(rep.failures) + " fuzz failures");
    }
  }
  return ok;
}

// 4. Copy discipline: across the whole single-failure sweep the in-place
// logging mode copies no more than the buffered mode, strictly less when the
// program privatizes at least one variable.
bool c4() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    Program p = corpus(stem);
    bool privatized = false;
    for (const auto& [task, vars] : analyzeProgram(p).perTask)
      if (!vars.empty()) privatized = true;
    ExhaustiveReport redo = sweep(stem, Mode::Redo);
    ExhaustiveReport undo = sweep(stem, Mode::Undo);
    // the sweeps have different run counts, so compare per-run statistics
    long redoMax = 0, undoMax = 0, redoSum = 0, undoSum = 0;
    long failuresRun = 0, completions = 0;
    for (const auto& k : redo.perK) {
      redoSum += k.copies;
      redoMax = std::max(redoMax, k.copies);
    }
    for (const auto& k : undo.perK) {
      undoSum += k.copies;
      undoMax = std::max(undoMax, k.copies);
      failuresRun += k.reboots;
      completions += k.transitions;
    }
    double redoAvg = double(redoSum) / double(redo.perK.size());
    double undoAvg = double(undoSum) / double(undo.perK.size());
    ok &= check(undoMax <= redoMax && undoAvg <= redoAvg,
                stem + ": in-place logging copied more than buffering");
    if (privatized && failuresRun < completions)
      ok &= check(undoAvg < redoAvg,
                  stem + ": expected strictly fewer in-place copies");
  }
  return ok;
}

// 5. Recovery shape: buffered recovery never restores anything; in-place
// recovery rolls back exactly the live log entries.
bool c5() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    ExhaustiveReport redo = sweep(stem, Mode::Redo);
    ok &= check(redo.recoveryFreeOfRestores,
                stem + ": buffered recovery performed restore copies");
    ExhaustiveReport undo = sweep(stem, Mode::Undo);
    ok &= check(undo.rollbackExact,
                stem + ": rollback copies differ from live log entries");
  }
  return ok;
}

// 6. Commit occupancy never exceeds the static bound, and the saturating
// fixture reaches it exactly.
bool c6() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    Program p = corpus(stem);
    WarReport r = analyzeProgram(p);
    ExhaustiveReport rep = sweep(stem, Mode::Redo);
    ok &= check(rep.maxCommitOccupancy <= r.maxCommitListSize,
                stem + ": commit occupancy exceeded its bound");
    if (stem == "full_array_write")
      ok &= check(rep.maxCommitOccupancy == r.maxCommitListSize,
                  "saturating fixture did not reach its bound");
  }
  return ok;
}

// 7. Version bitmasks agree with the shadow model everywhere, including when
// the version counter starts one below its overflow point.
bool c7() {
  bool ok = true;
  for (const auto& stem : {"full_array_write", "cf", "cem"}) {
    for (Mode mode : {Mode::Redo, Mode::Undo}) {
      ExhaustiveReport fresh = sweep(stem, mode);
      ExhaustiveReport wrap = sweep(stem, mode, kVersionMax - 1);
      ok &= check(fresh.vbmMismatches == 0 && fresh.ok(),
                  std::string(stem) + " " + modeName(mode) +
                      ": bitmask mismatch from a fresh image");
      ok &= check(wrap.vbmMismatches == 0 && wrap.ok(),
                  std::string(stem) + " " + modeName(mode) +
                      ": bitmask mismatch across the version wrap");
    }
  }
  return ok;
}

// 8. Amortization: per-op instrumentation overhead is non-increasing in task
// size and has saturated by the largest sizes.
bool c8() {
  auto points = rmwTrend(Mode::Redo, {1, 2, 5, 10, 50, 100, 200}, 1000,
                         RunConfig{});
  bool ok = check(points.size() == 7, "trend is missing sizes");
  if (!ok) return false;
  for (size_t i = 1; i < points.size(); ++i)
    ok &= check(points[i].perOpOverhead <= points[i - 1].perOpOverhead,
                "per-op overhead increased between sizes " +
                    std::to_string(points[i - 1].size) + " and " +
                    std::to_string(points[i].size));
  double head = points[0].perOpOverhead - points[1].perOpOverhead;
  double tail = points[5].perOpOverhead - points[6].perOpOverhead;
  ok &= check(tail < 0.1 * head, "overhead has not saturated by size 200");
  return ok;
}

// 9. Whole-benchmark cost ordering: in-place logging <= buffered logging <
// checkpointing, per program.
bool c9() {
  BenchOptions opt;
  auto rows = runBench(CORPUS_DIR, kSafePrograms, opt);
  bool ok = check(rows.size() == kSafePrograms.size() * 3,
                  "missing benchmark rows");
  std::map<std::string, std::map<std::string, long>> cost;
  for (const auto& r : rows) {
    if (!r.note.empty() || r.verdict != RunVerdict::Halted) {
      ok &= check(false, r.program + " " + r.mode + ": " +
                             (r.note.empty() ? "did not halt" : r.note));
      continue;
    }
    cost[r.program][r.mode] = r.stats.totalCost();
  }
  for (const auto& [prog, byMode] : cost) {
    if (byMode.size() != 3) continue;
    ok &= check(byMode.at("undo") <= byMode.at("redo"),
                prog + ": in-place logging dearer than buffering");
    ok &= check(byMode.at("redo") < byMode.at("ckpt"),
                prog + ": buffering not cheaper than checkpointing");
  }
  return ok;
}

// 10. Controller safety: the naive controller violates its invariant under an
// adversarial input stream at some failure point; both hardened variants
// survive the full sweep.
bool c10() {
  VerifyOptions opt;
  opt.cfg.channels.streams["temp"] = {5, 35};
  Program naive = corpus("heater_naive");
  CompiledProgram cp = compile(naive, Mode::Redo);
  CompiledProgram oracle = compile(naive, Mode::None);
  ExhaustiveReport rep = runExhaustive(cp, oracle, opt);
  bool ok = check(rep.divergences >= 1,
                  "naive controller survived every failure point");
  for (const char* stem : {"heater_safe_balanced", "heater_safe_task"}) {
    Program p = corpus(stem);
    CompiledProgram cps = compile(p, Mode::Redo);
    CompiledProgram oracles = compile(p, Mode::None);
    ExhaustiveReport safe = runExhaustive(cps, oracles, opt);
    ok &= check(safe.ok(), std::string(stem) + " diverged under the sweep");
  }
  return ok;
}

// 11. Capacity boundaries: a budget below any task's needs is reported as a
// forward-progress violation within three attempts; a safe budget always
// completes.
bool c11() {
  bool ok = true;
  for (const auto& stem : kSafePrograms) {
    Program p = corpus(stem);
    for (Mode mode : {Mode::Redo, Mode::Undo, Mode::Ckpt}) {
      CompiledProgram cp = compile(p, mode);
      RunConfig cfg = cfgFor(stem);
      RunResult starved = runProgram(cp, cfg, PowerModel::budget(4));
      ok &= check(starved.verdict == RunVerdict::ForwardProgress,
                  stem + " " + modeName(mode) +
                      ": starvation was not detected");
      ok &= check(starved.stats.reboots <= 3,
                  stem + " " + modeName(mode) +
                      ": detection took more than three attempts");
      RunResult c = runProgram(cp, cfg, PowerModel::continuous());
      long cap = safeCapacity(cp, c.stats, cfg.cost);
      RunResult fed = runProgram(cp, cfg, PowerModel::budget(cap));
      ok &= check(fed.verdict == RunVerdict::Halted,
                  stem + " " + modeName(mode) +
                      ": safe capacity did not complete");
    }
  }
  return ok;
}

void run(int n, const char* title, const std::function<bool()>& f) {
  detail.clear();
  auto t0 = std::chrono::steady_clock::now();
  bool ok = f();
  std::printf("criterion %2d: %-4s %s (%.1fs)%s%s\n", n, ok ? "pass" : "FAIL",
              title, seconds(t0), detail.empty() ? "" : " :: ",
              detail.c_str());
  std::fflush(stdout);
  if (!ok) failures++;
}

}  // namespace

int main() {
  run(1, "hazard analysis matches the path-enumeration oracle", c1);
  run(2, "exhaustive single-failure sweeps are clean", c2);
  run(3, "randomized budget campaigns stay equivalent", c3);
  run(4, "in-place logging never copies more than buffering", c4);
  run(5, "recovery restores nothing / rolls back exactly the log", c5);
  run(6, "commit occupancy respects its static bound", c6);
  run(7, "version bitmasks survive counter overflow", c7);
  run(8, "instrumentation overhead amortizes with task size", c8);
  run(9, "benchmark cost ordering holds per program", c9);
  run(10, "adversarial inputs expose only the naive controller", c10);
  run(11, "capacity starvation is detected, safe capacity completes", c11);
  if (failures) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
