#pragma once

#include <map>
#include <set>
#include <string>

#include "itc/ast.hpp"

namespace itc {

// Transitive access summary for one function, with callees folded in.
struct FunctionSummary {
  std::set<std::string> reads;      // TS variables read on some path
  std::set<std::string> writes;     // TS variables written on some path
  std::set<std::string> used;       // reads ∪ writes
  std::set<std::string> warInside;  // read-then-write paths entirely inside
};

// Per-task privatization decision plus commit-list sizing.
struct WarReport {
  bool strictCalls = false;
  std::map<std::string, std::set<std::string>> perTask;  // post-contagion
  std::set<std::string> contagious;  // variables added by contagion
  std::map<std::string, long> perTaskCommitBound;
  long maxCommitListSize = 0;
};

std::map<std::string, FunctionSummary> summarizeFunctions(const Program& p);

// Detects the TS variables involved in a W-A-R dependence within one task:
// a read on some CFG path followed by a write to the same variable later on
// that path (loop back-edges included). In strict mode every call adds the
// callee's whole used set; otherwise calls contribute their access summaries
// plus internal read-then-write variables only.
std::set<std::string> findWarVars(
    const Task& task, const Program& p,
    const std::map<std::string, FunctionSummary>& summaries,
    bool strictCalls = false);

// Propagates privatization through shared functions to a fixpoint: a TS
// variable accessed inside a function and privatized for one (transitive)
// caller becomes privatized for every task that reaches that function.
WarReport markContagious(
    const Program& p,
    const std::map<std::string, std::set<std::string>>& perTaskWar,
    const std::map<std::string, FunctionSummary>& summaries);

long sizeCommitList(const WarReport& report, const Program& p);

// findWarVars + markContagious + sizeCommitList over the whole program.
WarReport analyzeProgram(const Program& p, bool strictCalls = false);

std::string warReportJson(const WarReport& report);

}  // namespace itc
