#include "itc/cfg.hpp"

#include <deque>

namespace itc {
namespace {

class Builder {
 public:
  Cfg build(const StmtList& body) {
    std::vector<int> exits;
    cfg_.entry = buildList(body, exits);
    cfg_.exits = std::move(exits);
    return std::move(cfg_);
  }

 private:
  int addNode(const Stmt* s, bool isCond) {
    cfg_.nodes.push_back(CfgNode{s, isCond, {}});
    return static_cast<int>(cfg_.nodes.size()) - 1;
  }

  // Builds `body` into the graph. Returns the entry node (-1 if the list is
  // empty and control passes straight through) and fills `exits` with the
  // nodes whose fall-through leaves the list.
  int buildList(const StmtList& body, std::vector<int>& exits) {
    int entry = -1;
    std::vector<int> pending;
    auto connect = [&](int target) {
      if (entry == -1) entry = target;
      for (int p : pending) cfg_.nodes[p].succ.push_back(target);
      pending.clear();
    };
    for (const auto& s : body) {
      switch (s->kind) {
        case Stmt::Kind::If: {
          int c = addNode(s.get(), true);
          connect(c);
          std::vector<int> thenExits, elseExits;
          int te = buildList(s->body, thenExits);
          if (te == -1) thenExits.push_back(c);
          else cfg_.nodes[c].succ.push_back(te);
          int ee = buildList(s->elseBody, elseExits);
          if (ee == -1) elseExits.push_back(c);
          else cfg_.nodes[c].succ.push_back(ee);
          pending = std::move(thenExits);
          pending.insert(pending.end(), elseExits.begin(), elseExits.end());
          break;
        }
        case Stmt::Kind::While: {
          int c = addNode(s.get(), true);
          connect(c);
          std::vector<int> bodyExits;
          int be = buildList(s->body, bodyExits);
          if (be == -1) {
            cfg_.nodes[c].succ.push_back(c);
            cfg_.backEdges.emplace_back(c, c);
          } else {
            cfg_.nodes[c].succ.push_back(be);
            for (int x : bodyExits) {
              cfg_.nodes[x].succ.push_back(c);
              cfg_.backEdges.emplace_back(x, c);
            }
          }
          pending = {c};
          break;
        }
        case Stmt::Kind::Transition:
        case Stmt::Kind::Halt: {
          int n = addNode(s.get(), false);
          connect(n);
          // no successors; following statements are unreachable
          break;
        }
        default: {
          int n = addNode(s.get(), false);
          connect(n);
          pending = {n};
          break;
        }
      }
    }
    exits = std::move(pending);
    return entry;
  }

  Cfg cfg_;
};

}  // namespace

Cfg buildCfg(const StmtList& body) { return Builder().build(body); }

std::vector<bool> Cfg::reachableFrom(int from) const {
  std::vector<bool> seen(nodes.size(), false);
  std::deque<int> work(nodes[from].succ.begin(), nodes[from].succ.end());
  while (!work.empty()) {
    int n = work.front();
    work.pop_front();
    if (seen[n]) continue;
    seen[n] = true;
    for (int s : nodes[n].succ) work.push_back(s);
  }
  return seen;
}

std::vector<std::vector<int>> Cfg::basicBlocks() const {
  size_t n = nodes.size();
  std::vector<std::vector<int>> preds(n);
  for (size_t i = 0; i < n; ++i)
    for (int s : nodes[i].succ) preds[s].push_back(static_cast<int>(i));

  std::vector<bool> leader(n, false);
  if (entry >= 0) leader[entry] = true;
  for (size_t i = 0; i < n; ++i) {
    if (preds[i].size() != 1) leader[i] = true;
    else if (nodes[preds[i][0]].succ.size() > 1) leader[i] = true;
  }

  std::vector<std::vector<int>> blocks;
  std::vector<bool> placed(n, false);
  std::deque<int> work;
  if (entry >= 0) work.push_back(entry);
  std::vector<bool> queued(n, false);
  if (entry >= 0) queued[entry] = true;
  while (!work.empty()) {
    int head = work.front();
    work.pop_front();
    if (placed[head]) continue;
    std::vector<int> block;
    int cur = head;
    while (true) {
      block.push_back(cur);
      placed[cur] = true;
      if (nodes[cur].succ.size() != 1) break;
      int next = nodes[cur].succ[0];
      if (leader[next] || placed[next]) break;
      cur = next;
    }
    for (int s : nodes[block.back()].succ) {
      if (!queued[s]) {
        queued[s] = true;
        work.push_back(s);
      }
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace itc
