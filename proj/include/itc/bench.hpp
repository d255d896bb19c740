#pragma once

#include <string>
#include <vector>

#include "itc/oracle.hpp"

namespace itc {

Program loadProgramFile(const std::string& path);
std::string readFileText(const std::string& path);

// Sorted stems of the .at programs under `dir`.
std::vector<std::string> corpusPrograms(const std::string& dir);

// Deterministic default input streams for the corpus programs that sample.
ChannelConfig defaultChannels(const std::string& stem);

// Hazard-demonstration fixtures carry expected failures and stay out of the
// benchmark tables.
bool isBenchmarkProgram(const std::string& stem);

struct BenchRow {
  std::string program;
  std::string mode;
  std::string power;
  RunVerdict verdict = RunVerdict::Halted;
  std::string note;  // verification diagnostic when the row was aborted
  RunStats stats;
  long nvWords = 0;
};

std::string benchCsv(const std::vector<BenchRow>& rows);

struct BenchOptions {
  RunConfig cfg;
  std::vector<Mode> modes{Mode::Undo, Mode::Redo, Mode::Ckpt};
  PowerModel model = PowerModel::continuous();
  bool verifyFirst = true;  // exhaustive redo+undo gate before emitting rows
  int parallelism = 0;
};

// One row per (program, mode) under the given power model. A program that
// fails its verification gate contributes rows with a diagnostic note only.
std::vector<BenchRow> runBench(const std::string& corpusDir,
                               const std::vector<std::string>& stems,
                               const BenchOptions& opt);

// Capacity sweep: budget runs at multiples of the safe capacity floor.
std::vector<BenchRow> runCapacitySweep(const std::string& corpusDir,
                                       const std::vector<std::string>& stems,
                                       const BenchOptions& opt);

// ---- RMW task-size microbenchmark ----

// `totalOps` read-modify-writes of one TS scalar split across totalOps/size
// tasks of `size` ops each.
std::string rmwSource(long taskSize, long totalOps);

struct RmwPoint {
  long size = 0;
  long totalCost = 0;
  long baselineCost = 0;  // none-mode cost of the same program
  double perOpOverhead = 0.0;
};

std::vector<RmwPoint> rmwTrend(Mode mode, const std::vector<long>& sizes,
                               long totalOps, const RunConfig& cfg);

std::string rmwCsv(const std::vector<RmwPoint>& points);

// Minimal line chart of per-op overhead against task size.
std::string rmwSvg(const std::vector<RmwPoint>& points);

}  // namespace itc
