#pragma once

#include <utility>
#include <vector>

#include "itc/ast.hpp"

namespace itc {

// Statement-level control-flow graph for one task or function body.
// If/while conditions are their own nodes; transition_to and halt are
// terminal (no successors).
struct CfgNode {
  const Stmt* stmt = nullptr;
  bool isCond = false;  // node represents the condition of an if/while
  std::vector<int> succ;
};

struct Cfg {
  std::vector<CfgNode> nodes;
  int entry = -1;                             // -1 for an empty body
  std::vector<int> exits;                     // fall-through exits (functions)
  std::vector<std::pair<int, int>> backEdges; // (from, loop header)

  // Maximal straight-line groupings of nodes, in reverse-postorder-ish
  // discovery order. Every reachable node appears in exactly one block.
  std::vector<std::vector<int>> basicBlocks() const;

  // Nodes reachable from `from` by following one or more edges.
  std::vector<bool> reachableFrom(int from) const;
};

Cfg buildCfg(const StmtList& body);

}  // namespace itc
