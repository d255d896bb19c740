#include "itc/ast.hpp"

namespace itc {

ExprPtr Expr::clone() const {
  auto e = std::make_unique<Expr>();
  e->kind = kind;
  e->value = value;
  e->name = name;
  e->unop = unop;
  e->binop = binop;
  if (a) e->a = a->clone();
  if (b) e->b = b->clone();
  e->line = line;
  e->col = col;
  return e;
}

ExprPtr makeConst(Word v) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Const;
  e->value = v;
  return e;
}

ExprPtr makeVar(std::string name) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Var;
  e->name = std::move(name);
  return e;
}

ExprPtr makeIndex(std::string name, ExprPtr idx) {
  auto e = std::make_unique<Expr>();
  e->kind = Expr::Kind::Index;
  e->name = std::move(name);
  e->a = std::move(idx);
  return e;
}

LValue LValue::clone() const {
  LValue l;
  l.name = name;
  if (index) l.index = index->clone();
  return l;
}

StmtPtr Stmt::clone() const {
  auto s = std::make_unique<Stmt>();
  s->kind = kind;
  s->name = name;
  s->arrayLen = arrayLen;
  s->lhs = lhs.clone();
  if (expr) s->expr = expr->clone();
  for (const auto& st : body) s->body.push_back(st->clone());
  for (const auto& st : elseBody) s->elseBody.push_back(st->clone());
  s->bound = bound;
  s->line = line;
  s->col = col;
  return s;
}

const TsVarDecl* Program::findTs(const std::string& name) const {
  for (const auto& d : tsDecls)
    if (d.name == name) return &d;
  return nullptr;
}

const Task* Program::findTask(const std::string& name) const {
  for (const auto& t : tasks)
    if (t.name == name) return &t;
  return nullptr;
}

int Program::taskIndex(const std::string& name) const {
  for (size_t i = 0; i < tasks.size(); ++i)
    if (tasks[i].name == name) return static_cast<int>(i);
  return -1;
}

const Function* Program::findFunction(const std::string& name) const {
  for (const auto& f : functions)
    if (f.name == name) return &f;
  return nullptr;
}

bool equal(const Expr& a, const Expr& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Expr::Kind::Const: return a.value == b.value;
    case Expr::Kind::Var: return a.name == b.name;
    case Expr::Kind::Index: return a.name == b.name && equal(*a.a, *b.a);
    case Expr::Kind::Unary: return a.unop == b.unop && equal(*a.a, *b.a);
    case Expr::Kind::Binary:
      return a.binop == b.binop && equal(*a.a, *b.a) && equal(*a.b, *b.b);
  }
  return false;
}

static bool equalLValue(const LValue& a, const LValue& b) {
  if (a.name != b.name) return false;
  if ((a.index == nullptr) != (b.index == nullptr)) return false;
  return a.index == nullptr || equal(*a.index, *b.index);
}

bool equal(const Stmt& a, const Stmt& b) {
  if (a.kind != b.kind) return false;
  switch (a.kind) {
    case Stmt::Kind::LocalDecl:
      if (a.name != b.name || a.arrayLen != b.arrayLen) return false;
      if ((a.expr == nullptr) != (b.expr == nullptr)) return false;
      return a.expr == nullptr || equal(*a.expr, *b.expr);
    case Stmt::Kind::Assign:
      return equalLValue(a.lhs, b.lhs) && equal(*a.expr, *b.expr);
    case Stmt::Kind::If:
      return equal(*a.expr, *b.expr) && equal(a.body, b.body) &&
             equal(a.elseBody, b.elseBody);
    case Stmt::Kind::While:
      return equal(*a.expr, *b.expr) && a.bound == b.bound &&
             equal(a.body, b.body);
    case Stmt::Kind::Call:
    case Stmt::Kind::Transition:
      return a.name == b.name;
    case Stmt::Kind::Sample:
      return equalLValue(a.lhs, b.lhs) && a.name == b.name;
    case Stmt::Kind::Output:
      return equal(*a.expr, *b.expr);
    case Stmt::Kind::Halt:
      return true;
  }
  return false;
}

bool equal(const StmtList& a, const StmtList& b) {
  if (a.size() != b.size()) return false;
  for (size_t i = 0; i < a.size(); ++i)
    if (!equal(*a[i], *b[i])) return false;
  return true;
}

bool equal(const Program& a, const Program& b) {
  if (a.tsDecls.size() != b.tsDecls.size()) return false;
  for (size_t i = 0; i < a.tsDecls.size(); ++i) {
    const auto& x = a.tsDecls[i];
    const auto& y = b.tsDecls[i];
    if (x.name != y.name || x.length != y.length || x.init != y.init)
      return false;
  }
  if (a.entryTask != b.entryTask) return false;
  if (a.tasks.size() != b.tasks.size()) return false;
  for (size_t i = 0; i < a.tasks.size(); ++i) {
    if (a.tasks[i].name != b.tasks[i].name) return false;
    if (a.tasks[i].isEntry != b.tasks[i].isEntry) return false;
    if (!equal(a.tasks[i].body, b.tasks[i].body)) return false;
  }
  if (a.functions.size() != b.functions.size()) return false;
  for (size_t i = 0; i < a.functions.size(); ++i) {
    if (a.functions[i].name != b.functions[i].name) return false;
    if (!equal(a.functions[i].body, b.functions[i].body)) return false;
  }
  if (a.initBlock.has_value() != b.initBlock.has_value()) return false;
  if (a.initBlock && !equal(*a.initBlock, *b.initBlock)) return false;
  return true;
}

}  // namespace itc
