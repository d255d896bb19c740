#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace itc {

using Word = std::int64_t;

// Diagnostic thrown by the parser and validator. Line/column are 1-based;
// 0 means "no location".
struct Diag : std::runtime_error {
  int line = 0;
  int col = 0;
  Diag(std::string msg, int line = 0, int col = 0)
      : std::runtime_error(std::move(msg)), line(line), col(col) {}
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

enum class UnOp { Neg, LogNot, BitNot };
enum class BinOp {
  Add, Sub, Mul, Div, Mod,
  Eq, Ne, Lt, Le, Gt, Ge,
  LogAnd, LogOr,
  BitAnd, BitOr, BitXor, Shl, Shr,
};

struct Expr {
  enum class Kind { Const, Var, Index, Unary, Binary };
  Kind kind;
  Word value = 0;        // Const
  std::string name;      // Var, Index (array name)
  UnOp unop{};           // Unary
  BinOp binop{};         // Binary
  ExprPtr a, b;          // Unary: a; Binary: a,b; Index: a = subscript
  int line = 0, col = 0;

  ExprPtr clone() const;
};

ExprPtr makeConst(Word v);
ExprPtr makeVar(std::string name);
ExprPtr makeIndex(std::string name, ExprPtr idx);

// Assignment / sample target: a scalar name or a direct array subscript.
struct LValue {
  std::string name;
  ExprPtr index;  // null for scalars

  bool isArray() const { return index != nullptr; }
  LValue clone() const;
};

struct Stmt;
using StmtPtr = std::unique_ptr<Stmt>;
using StmtList = std::vector<StmtPtr>;

struct Stmt {
  enum class Kind {
    LocalDecl,   // name, arrayLen (0 = scalar), expr = optional scalar init
    Assign,      // lhs, expr
    If,          // expr = cond, body, elseBody
    While,       // expr = cond, bound, body
    Call,        // name = function
    Transition,  // name = target task
    Sample,      // lhs, name = channel
    Output,      // expr
    Halt,
  };
  Kind kind;
  std::string name;
  long arrayLen = 0;
  LValue lhs;
  ExprPtr expr;
  StmtList body, elseBody;
  long bound = 0;
  int line = 0, col = 0;

  StmtPtr clone() const;
};

// Task-shared variable: one machine word per element, lives in NV memory.
struct TsVarDecl {
  std::string name;
  long length = 0;  // 0 = scalar, >=1 = array
  std::vector<Word> init;  // scalar: size 1; array: size == length
  int line = 0, col = 0;

  bool isArray() const { return length > 0; }
  long wordCount() const { return isArray() ? length : 1; }
};

struct LocalInfo {
  long length = 0;  // 0 = scalar
  long wordCount() const { return length > 0 ? length : 1; }
};

struct Task {
  std::string name;
  bool isEntry = false;
  StmtList body;
  // Declared task-local variables, collected during validation.
  std::unordered_map<std::string, LocalInfo> locals;
  int line = 0, col = 0;
};

struct Function {
  std::string name;
  StmtList body;
  std::unordered_map<std::string, LocalInfo> locals;
  int line = 0, col = 0;
};

struct Program {
  std::vector<TsVarDecl> tsDecls;
  std::vector<Task> tasks;          // declaration order
  std::vector<Function> functions;  // declaration order
  std::string entryTask;
  std::optional<StmtList> initBlock;
  std::unordered_map<std::string, LocalInfo> initLocals;

  const TsVarDecl* findTs(const std::string& name) const;
  const Task* findTask(const std::string& name) const;
  int taskIndex(const std::string& name) const;  // -1 if absent
  const Function* findFunction(const std::string& name) const;
};

// Structural equality (ignores source locations). Used by the
// parse/pretty-print round-trip property.
bool equal(const Expr& a, const Expr& b);
bool equal(const Stmt& a, const Stmt& b);
bool equal(const StmtList& a, const StmtList& b);
bool equal(const Program& a, const Program& b);

}  // namespace itc
