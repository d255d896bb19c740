#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "doctest.h"
#include "itc/cfg.hpp"
#include "itc/parser.hpp"
#include "itc/printer.hpp"

using namespace itc;

namespace {

std::string readFile(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

std::vector<std::string> corpusFiles() {
  std::vector<std::string> files;
  for (const auto& e : std::filesystem::directory_iterator(CORPUS_DIR))
    if (e.path().extension() == ".at") files.push_back(e.path().string());
  REQUIRE(files.size() >= 11);
  return files;
}

}  // namespace

TEST_CASE("parse then pretty-print round-trips structurally") {
  for (const auto& f : corpusFiles()) {
    CAPTURE(f);
    Program p1 = parseProgram(readFile(f));
    std::string printed = printProgram(p1);
    Program p2 = parseProgram(printed);
    CHECK(equal(p1, p2));
    // printing is a fixpoint
    CHECK(printProgram(p2) == printed);
  }
}

TEST_CASE("lexer handles number bases and comments") {
  Program p = parseProgram(
      "TS int x = 0;\n"
      "entry task t {\n"
      "  x = 0x1f + 0b101;  // 31 + 5\n"
      "  halt;\n"
      "}\n");
  const Stmt& s = *p.tasks[0].body[0];
  REQUIRE(s.kind == Stmt::Kind::Assign);
  REQUIRE(s.expr->kind == Expr::Kind::Binary);
  CHECK(s.expr->a->value == 31);
  CHECK(s.expr->b->value == 5);
}

TEST_CASE("parser diagnostics carry locations") {
  CHECK_THROWS_AS(parseProgram("task t {"), Diag);
  try {
    parseProgram("TS int x = 0;\nentry task t {\n  y = 1;\n  halt;\n}\n");
    FAIL("expected a diagnostic");
  } catch (const Diag& d) {
    CHECK(d.line == 3);
    CHECK(std::string(d.what()).find("y") != std::string::npos);
  }
}

TEST_CASE("validator rejects broken programs") {
  // no entry task
  CHECK_THROWS_AS(parseProgram("task t { halt; }"), Diag);
  // path without transition or halt
  CHECK_THROWS_AS(
      parseProgram("TS int x = 0;\nentry task t { x = 1; }"), Diag);
  // local read before write
  CHECK_THROWS_AS(
      parseProgram("entry task t { int a; int b; b = a; halt; }"), Diag);
  // while without committing to a bound
  CHECK_THROWS_AS(
      parseProgram("TS int x = 0;\nentry task t { while (x < 3) { x = x + 1; } halt; }"),
      Diag);
  // recursion
  CHECK_THROWS_AS(parseProgram("TS int x = 0;\n"
                               "fn f() { g(); }\n"
                               "fn g() { f(); }\n"
                               "entry task t { f(); halt; }"),
                  Diag);
  // init block touching TS state
  CHECK_THROWS_AS(
      parseProgram("TS int x = 0;\ninit { x = 1; }\nentry task t { halt; }"),
      Diag);
  // transition inside a function
  CHECK_THROWS_AS(parseProgram("entry task t { f(); halt; }\n"
                               "fn f() { transition_to t; }"),
                  Diag);
  // double underscores are reserved for instrumentation names
  CHECK_THROWS_AS(
      parseProgram("TS int a__b = 0;\nentry task t { a__b = 1; halt; }"),
      Diag);
  CHECK_THROWS_AS(parseProgram("entry task t { int x__y; x__y = 1; halt; }"),
                  Diag);
}

TEST_CASE("definite assignment joins branches") {
  // assigned on both branches: fine
  parseProgram(
      "TS int x = 0;\n"
      "entry task t { int a; if (x) { a = 1; } else { a = 2; } x = a; halt; }");
  // assigned on one branch only: rejected
  CHECK_THROWS_AS(
      parseProgram("TS int x = 0;\n"
                   "entry task t { int a; if (x) { a = 1; } x = a; halt; }"),
      Diag);
  // loop bodies may run zero times
  CHECK_THROWS_AS(
      parseProgram("TS int x = 0;\n"
                   "entry task t { int a; while (x) bound 2 { a = 1; } x = a; halt; }"),
      Diag);
}

namespace {

// Oracle: reachability as a transitive closure over the raw edge list.
std::vector<std::vector<bool>> closure(const Cfg& g) {
  size_t n = g.nodes.size();
  std::vector<std::vector<bool>> r(n, std::vector<bool>(n, false));
  for (size_t i = 0; i < n; ++i)
    for (int s : g.nodes[i].succ) r[i][static_cast<size_t>(s)] = true;
  for (size_t k = 0; k < n; ++k)
    for (size_t i = 0; i < n; ++i)
      if (r[i][k])
        for (size_t j = 0; j < n; ++j)
          if (r[k][j]) r[i][j] = true;
  return r;
}

}  // namespace

TEST_CASE("cfg reachability matches transitive-closure oracle") {
  for (const auto& f : corpusFiles()) {
    Program p = parseProgram(readFile(f));
    for (const auto& t : p.tasks) {
      Cfg g = buildCfg(t.body);
      auto oracle = closure(g);
      for (size_t i = 0; i < g.nodes.size(); ++i) {
        auto got = g.reachableFrom(static_cast<int>(i));
        for (size_t j = 0; j < g.nodes.size(); ++j) {
          CAPTURE(f);
          CAPTURE(i);
          CAPTURE(j);
          CHECK(got[j] == oracle[i][j]);
        }
      }
    }
  }
}

TEST_CASE("cfg structure of if/while") {
  Program p = parseProgram(
      "TS int x = 0;\n"
      "entry task t {\n"
      "  while (x < 3) bound 3 { x = x + 1; }\n"
      "  if (x) { x = 0; } else { x = 1; }\n"
      "  halt;\n"
      "}\n");
  Cfg g = buildCfg(p.tasks[0].body);
  CHECK(g.entry >= 0);
  CHECK(!g.backEdges.empty());  // the while loop
  // every reachable node is in exactly one basic block
  auto blocks = g.basicBlocks();
  std::vector<int> seen(g.nodes.size(), 0);
  for (const auto& b : blocks)
    for (int n : b) seen[static_cast<size_t>(n)]++;
  auto reach = g.reachableFrom(g.entry);
  for (size_t i = 0; i < g.nodes.size(); ++i) {
    int expected = (static_cast<int>(i) == g.entry || reach[i]) ? 1 : 0;
    CHECK(seen[i] == expected);
  }
  // halt/transition nodes have no successors
  for (const auto& n : g.nodes)
    if (n.stmt && (n.stmt->kind == Stmt::Kind::Halt ||
                   n.stmt->kind == Stmt::Kind::Transition))
      CHECK(n.succ.empty());
}

namespace {

// Random program generator shared with the fuzzing round-trip check.
struct Gen {
  std::mt19937 rng;
  explicit Gen(unsigned seed) : rng(seed) {}
  int pick(int n) { return static_cast<int>(rng() % static_cast<unsigned>(n)); }

  std::string expr(int depth) {
    if (depth <= 0 || pick(3) == 0) {
      if (pick(2)) return std::to_string(pick(100));
      return std::string(1, static_cast<char>('a' + pick(3)));
    }
    static const char* ops[] = {"+", "-", "*", "&", "|", "<", "=="};
    return "(" + expr(depth - 1) + " " + ops[pick(7)] + " " +
           expr(depth - 1) + ")";
  }

  std::string stmts(int depth, int& budget) {
    std::ostringstream os;
    int n = 1 + pick(3);
    for (int i = 0; i < n && budget > 0; ++i) {
      --budget;
      int kind = pick(depth > 0 ? 4 : 2);
      char v = static_cast<char>('a' + pick(3));
      switch (kind) {
        case 0:
          os << v << " = " << expr(2) << ";\n";
          break;
        case 1:
          os << "output(" << expr(2) << ");\n";
          break;
        case 2:
          os << "if (" << expr(1) << ") {\n" << stmts(depth - 1, budget)
             << "}\n";
          break;
        default:
          os << "while (" << expr(1) << ") bound " << (1 + pick(4)) << " {\n"
             << stmts(depth - 1, budget) << v << " = " << expr(1) << ";\n}\n";
          break;
      }
    }
    return os.str();
  }

  std::string program() {
    int budget = 12;
    std::ostringstream os;
    os << "TS int a = 1;\nTS int b = 2;\nTS int c = 3;\n";
    os << "entry task t0 {\n" << stmts(2, budget) << "halt;\n}\n";
    return os.str();
  }
};

}  // namespace

TEST_CASE("random programs round-trip through the printer") {
  for (unsigned seed = 1; seed <= 300; ++seed) {
    Gen g(seed);
    std::string src = g.program();
    CAPTURE(src);
    Program p1 = parseProgram(src);
    Program p2 = parseProgram(printProgram(p1));
    CHECK(equal(p1, p2));
  }
}
