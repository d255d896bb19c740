#include "itc/analysis.hpp"

#include <functional>

#include "itc/cfg.hpp"
#include "json.hpp"

namespace itc {
namespace {

void collectExprTs(const Expr& e, const Program& p, std::set<std::string>& out) {
  switch (e.kind) {
    case Expr::Kind::Const:
      return;
    case Expr::Kind::Var:
    case Expr::Kind::Index:
      if (p.findTs(e.name)) out.insert(e.name);
      if (e.kind == Expr::Kind::Index) collectExprTs(*e.a, p, out);
      return;
    case Expr::Kind::Unary:
      collectExprTs(*e.a, p, out);
      return;
    case Expr::Kind::Binary:
      collectExprTs(*e.a, p, out);
      collectExprTs(*e.b, p, out);
      return;
  }
}

struct NodeAccess {
  std::set<std::string> reads, writes;
};

// Reads happen before writes within a node (an assignment evaluates its
// right-hand side and subscript before storing).
NodeAccess accessOf(const CfgNode& node, const Program& p,
                    const std::map<std::string, FunctionSummary>& summaries) {
  NodeAccess a;
  const Stmt& s = *node.stmt;
  if (node.isCond) {
    collectExprTs(*s.expr, p, a.reads);
    return a;
  }
  switch (s.kind) {
    case Stmt::Kind::LocalDecl:
      if (s.expr) collectExprTs(*s.expr, p, a.reads);
      break;
    case Stmt::Kind::Assign:
      collectExprTs(*s.expr, p, a.reads);
      if (s.lhs.index) collectExprTs(*s.lhs.index, p, a.reads);
      if (p.findTs(s.lhs.name)) a.writes.insert(s.lhs.name);
      break;
    case Stmt::Kind::Sample:
      if (s.lhs.index) collectExprTs(*s.lhs.index, p, a.reads);
      if (p.findTs(s.lhs.name)) a.writes.insert(s.lhs.name);
      break;
    case Stmt::Kind::Output:
      collectExprTs(*s.expr, p, a.reads);
      break;
    case Stmt::Kind::Call: {
      auto it = summaries.find(s.name);
      if (it != summaries.end()) {
        a.reads = it->second.reads;
        a.writes = it->second.writes;
      }
      break;
    }
    default:
      break;
  }
  return a;
}

// Shared read-then-write path detection over a CFG.
std::set<std::string> warOverCfg(
    const Cfg& cfg, const Program& p,
    const std::map<std::string, FunctionSummary>& summaries, bool strictCalls) {
  std::set<std::string> war;
  std::vector<NodeAccess> acc(cfg.nodes.size());
  for (size_t i = 0; i < cfg.nodes.size(); ++i)
    acc[i] = accessOf(cfg.nodes[i], p, summaries);

  for (size_t r = 0; r < cfg.nodes.size(); ++r) {
    if (acc[r].reads.empty()) continue;
    std::vector<bool> reach = cfg.reachableFrom(static_cast<int>(r));
    for (const auto& v : acc[r].reads) {
      if (war.count(v)) continue;
      if (acc[r].writes.count(v)) {
        war.insert(v);
        continue;
      }
      for (size_t w = 0; w < cfg.nodes.size(); ++w) {
        if (reach[w] && acc[w].writes.count(v)) {
          war.insert(v);
          break;
        }
      }
    }
  }

  // Function calls: the callee's internal read-then-write paths always count;
  // strict mode adds every TS variable the callee touches.
  for (const auto& node : cfg.nodes) {
    if (node.isCond || node.stmt->kind != Stmt::Kind::Call) continue;
    auto it = summaries.find(node.stmt->name);
    if (it == summaries.end()) continue;
    const auto& add = strictCalls ? it->second.used : it->second.warInside;
    war.insert(add.begin(), add.end());
  }
  return war;
}

}  // namespace

std::map<std::string, FunctionSummary> summarizeFunctions(const Program& p) {
  std::map<std::string, FunctionSummary> out;
  std::function<const FunctionSummary&(const Function&)> summarize =
      [&](const Function& f) -> const FunctionSummary& {
    auto found = out.find(f.name);
    if (found != out.end()) return found->second;
    // Validation rejects recursion, so callee summaries always terminate.
    FunctionSummary s;
    Cfg cfg = buildCfg(f.body);
    for (const auto& node : cfg.nodes) {
      if (!node.isCond && node.stmt->kind == Stmt::Kind::Call) {
        const Function* callee = p.findFunction(node.stmt->name);
        if (callee) summarize(*callee);
      }
    }
    for (const auto& node : cfg.nodes) {
      NodeAccess a = accessOf(node, p, out);
      s.reads.insert(a.reads.begin(), a.reads.end());
      s.writes.insert(a.writes.begin(), a.writes.end());
    }
    auto war = warOverCfg(cfg, p, out, false);
    s.warInside.insert(war.begin(), war.end());
    s.used = s.reads;
    s.used.insert(s.writes.begin(), s.writes.end());
    return out.emplace(f.name, std::move(s)).first->second;
  };
  for (const auto& f : p.functions) summarize(f);
  return out;
}

std::set<std::string> findWarVars(
    const Task& task, const Program& p,
    const std::map<std::string, FunctionSummary>& summaries, bool strictCalls) {
  Cfg cfg = buildCfg(task.body);
  return warOverCfg(cfg, p, summaries, strictCalls);
}

WarReport markContagious(
    const Program& p,
    const std::map<std::string, std::set<std::string>>& perTaskWar,
    const std::map<std::string, FunctionSummary>& summaries) {
  WarReport report;
  report.perTask = perTaskWar;

  // Tasks that (transitively) reach each function.
  std::map<std::string, std::set<std::string>> callersOf;
  std::function<void(const StmtList&, const std::string&,
                     std::set<std::string>&)>
      reachFns = [&](const StmtList& body, const std::string& taskName,
                     std::set<std::string>& visited) {
        for (const auto& s : body) {
          if (s->kind == Stmt::Kind::Call && visited.insert(s->name).second) {
            callersOf[s->name].insert(taskName);
            const Function* f = p.findFunction(s->name);
            if (f) reachFns(f->body, taskName, visited);
          }
          reachFns(s->body, taskName, visited);
          reachFns(s->elseBody, taskName, visited);
        }
      };
  for (const auto& t : p.tasks) {
    std::set<std::string> visited;
    reachFns(t.body, t.name, visited);
  }

  bool changed = true;
  while (changed) {
    changed = false;
    for (const auto& [fname, callers] : callersOf) {
      auto sit = summaries.find(fname);
      if (sit == summaries.end()) continue;
      std::set<std::string> priv;
      for (const auto& t : callers)
        for (const auto& v : report.perTask[t])
          if (sit->second.used.count(v)) priv.insert(v);
      for (const auto& t : callers) {
        for (const auto& v : priv) {
          if (report.perTask[t].insert(v).second) {
            report.contagious.insert(v);
            changed = true;
          }
        }
      }
    }
  }
  return report;
}

long sizeCommitList(const WarReport& report, const Program& p) {
  long maxBound = 0;
  for (const auto& [task, warSet] : report.perTask) {
    long bound = 0;
    for (const auto& v : warSet) {
      const TsVarDecl* d = p.findTs(v);
      bound += d ? d->wordCount() : 1;
    }
    maxBound = std::max(maxBound, bound);
  }
  return maxBound;
}

WarReport analyzeProgram(const Program& p, bool strictCalls) {
  auto summaries = summarizeFunctions(p);
  std::map<std::string, std::set<std::string>> perTask;
  for (const auto& t : p.tasks)
    perTask[t.name] = findWarVars(t, p, summaries, strictCalls);
  WarReport report = markContagious(p, perTask, summaries);
  report.strictCalls = strictCalls;
  for (const auto& [task, warSet] : report.perTask) {
    long bound = 0;
    for (const auto& v : warSet) {
      const TsVarDecl* d = p.findTs(v);
      bound += d ? d->wordCount() : 1;
    }
    report.perTaskCommitBound[task] = bound;
  }
  report.maxCommitListSize = sizeCommitList(report, p);
  return report;
}

std::string warReportJson(const WarReport& report) {
  nlohmann::json j;
  j["strictCalls"] = report.strictCalls;
  nlohmann::json tasks = nlohmann::json::object();
  for (const auto& [task, warSet] : report.perTask) {
    nlohmann::json t;
    t["warSet"] = warSet;
    auto bit = report.perTaskCommitBound.find(task);
    t["commitBound"] = bit != report.perTaskCommitBound.end() ? bit->second : 0;
    tasks[task] = t;
  }
  j["tasks"] = tasks;
  j["contagious"] = report.contagious;
  j["maxCommitListSize"] = report.maxCommitListSize;
  return j.dump(2);
}

}  // namespace itc
