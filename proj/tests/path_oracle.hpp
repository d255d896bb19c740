// Shared by the analysis tests and the acceptance checks: an independent
// path-enumeration oracle for read-before-write hazards, plus a random task
// generator to exercise it.
#pragma once

#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "itc/ast.hpp"

namespace testutil {

using itc::Expr;
using itc::Program;
using itc::Stmt;
using itc::StmtList;
using itc::Task;

// Enumerates every access path through a task body (loops unrolled 0, 1 and
// 2 times; both if arms) and reports a TS variable as hazardous when some
// path reads it strictly before writing it.

struct Access {
  std::string var;
  bool write;
};
struct Path {
  std::vector<Access> acc;
  bool ended = false;  // reached transition_to / halt
};

inline void exprReads(const Expr& e, const Program& p,
                      std::vector<Access>& out) {
  switch (e.kind) {
    case Expr::Kind::Const:
      return;
    case Expr::Kind::Var:
      if (p.findTs(e.name)) out.push_back({e.name, false});
      return;
    case Expr::Kind::Index:
      exprReads(*e.a, p, out);
      if (p.findTs(e.name)) out.push_back({e.name, false});
      return;
    case Expr::Kind::Unary:
      exprReads(*e.a, p, out);
      return;
    case Expr::Kind::Binary:
      exprReads(*e.a, p, out);
      exprReads(*e.b, p, out);
      return;
  }
}

// Ended paths are not extended further.
inline std::vector<Path> concat(const std::vector<Path>& a,
                                const std::vector<Path>& b) {
  std::vector<Path> out;
  out.reserve(a.size() * b.size());
  for (const auto& x : a) {
    if (x.ended) {
      out.push_back(x);
      continue;
    }
    for (const auto& y : b) {
      Path z = x;
      z.acc.insert(z.acc.end(), y.acc.begin(), y.acc.end());
      z.ended = y.ended;
      out.push_back(std::move(z));
    }
  }
  return out;
}

inline Path seqPath(std::vector<Access> acc) {
  return Path{std::move(acc), false};
}

// Paths through `body` starting at statement `i`. A transition or halt ends
// the path immediately.
inline std::vector<Path> enumPaths(const StmtList& body, size_t i,
                                   const Program& p) {
  if (i >= body.size()) return {Path{}};
  const Stmt& s = *body[i];
  std::vector<Path> heads;
  switch (s.kind) {
    case Stmt::Kind::Assign: {
      std::vector<Access> seq;
      exprReads(*s.expr, p, seq);
      if (s.lhs.isArray()) exprReads(*s.lhs.index, p, seq);
      if (p.findTs(s.lhs.name)) seq.push_back({s.lhs.name, true});
      heads = {seqPath(std::move(seq))};
      break;
    }
    case Stmt::Kind::Sample: {
      std::vector<Access> seq;
      if (s.lhs.isArray()) exprReads(*s.lhs.index, p, seq);
      if (p.findTs(s.lhs.name)) seq.push_back({s.lhs.name, true});
      heads = {seqPath(std::move(seq))};
      break;
    }
    case Stmt::Kind::Output: {
      std::vector<Access> seq;
      exprReads(*s.expr, p, seq);
      heads = {seqPath(std::move(seq))};
      break;
    }
    case Stmt::Kind::If: {
      std::vector<Access> cond;
      exprReads(*s.expr, p, cond);
      auto thenP = enumPaths(s.body, 0, p);
      auto elseP = enumPaths(s.elseBody, 0, p);
      thenP.insert(thenP.end(), elseP.begin(), elseP.end());
      heads = concat({seqPath(std::move(cond))}, thenP);
      break;
    }
    case Stmt::Kind::While: {
      std::vector<Access> cond;
      exprReads(*s.expr, p, cond);
      std::vector<Path> condP = {seqPath(std::move(cond))};
      auto bodyP = enumPaths(s.body, 0, p);
      auto zero = condP;
      auto once = concat(concat(condP, bodyP), condP);
      auto twice = concat(concat(once, bodyP), condP);
      heads = zero;
      heads.insert(heads.end(), once.begin(), once.end());
      heads.insert(heads.end(), twice.begin(), twice.end());
      break;
    }
    case Stmt::Kind::Transition:
    case Stmt::Kind::Halt:
      return {Path{{}, true}};
    case Stmt::Kind::LocalDecl: {
      std::vector<Access> seq;
      if (s.expr) exprReads(*s.expr, p, seq);
      heads = {seqPath(std::move(seq))};
      break;
    }
    case Stmt::Kind::Call:
      heads = {Path{}};  // not generated by the fuzzer
      break;
  }
  return concat(heads, enumPaths(body, i + 1, p));
}

inline std::set<std::string> oracleWar(const Task& t, const Program& p) {
  std::set<std::string> war;
  for (const auto& path : enumPaths(t.body, 0, p)) {
    std::set<std::string> seenRead;
    for (const auto& a : path.acc) {
      if (a.write) {
        if (seenRead.count(a.var)) war.insert(a.var);
      } else {
        seenRead.insert(a.var);
      }
    }
  }
  return war;
}

// ---- random task generator: <=20 statements over <=5 TS variables ----

struct TaskGen {
  std::mt19937 rng;
  int nVars;
  explicit TaskGen(unsigned seed) : rng(seed), nVars(2 + pick(4)) {}
  int pick(int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }
  std::string var() {
    return std::string(1, static_cast<char>('a' + pick(nVars)));
  }

  std::string expr(int depth) {
    if (depth <= 0 || pick(3) == 0)
      return pick(2) ? std::to_string(pick(50)) : var();
    static const char* ops[] = {"+", "-", "*", "<", "==", "&"};
    return "(" + expr(depth - 1) + " " + ops[pick(6)] + " " + expr(depth - 1) +
           ")";
  }

  void stmts(std::ostringstream& os, int depth, int& budget) {
    int n = 1 + pick(3);
    for (int i = 0; i < n && budget > 0; ++i) {
      --budget;
      switch (pick(depth > 0 ? 5 : 3)) {
        case 0:
          os << var() << " = " << expr(2) << ";\n";
          break;
        case 1:
          os << "output(" << expr(1) << ");\n";
          break;
        case 2:
          os << "sample(" << var() << ", ch);\n";
          break;
        case 3: {
          os << "if (" << expr(1) << ") {\n";
          stmts(os, depth - 1, budget);
          if (pick(3) == 0) os << "transition_to t0;\n";
          os << "}";
          if (pick(2)) {
            os << " else {\n";
            stmts(os, depth - 1, budget);
            os << "}";
          }
          os << "\n";
          break;
        }
        default: {
          os << "while (" << expr(1) << ") bound " << (1 + pick(3)) << " {\n";
          stmts(os, depth - 1, budget);
          os << "}\n";
          break;
        }
      }
    }
  }

  std::string program() {
    std::ostringstream os;
    for (int v = 0; v < nVars; ++v)
      os << "TS int " << static_cast<char>('a' + v) << " = " << pick(10)
         << ";\n";
    os << "entry task t0 {\n";
    int budget = 20;
    stmts(os, 2, budget);
    os << "halt;\n}\n";
    return os.str();
  }
};

}  // namespace testutil
