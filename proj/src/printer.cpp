#include "itc/printer.hpp"

#include <sstream>

namespace itc {
namespace {

int precOf(const Expr& e) {
  if (e.kind == Expr::Kind::Unary) return 11;
  if (e.kind != Expr::Kind::Binary) return 12;
  switch (e.binop) {
    case BinOp::LogOr: return 1;
    case BinOp::LogAnd: return 2;
    case BinOp::BitOr: return 3;
    case BinOp::BitXor: return 4;
    case BinOp::BitAnd: return 5;
    case BinOp::Eq: case BinOp::Ne: return 6;
    case BinOp::Lt: case BinOp::Le: case BinOp::Gt: case BinOp::Ge: return 7;
    case BinOp::Shl: case BinOp::Shr: return 8;
    case BinOp::Add: case BinOp::Sub: return 9;
    default: return 10;
  }
}

const char* opText(BinOp op) {
  switch (op) {
    case BinOp::Add: return "+";
    case BinOp::Sub: return "-";
    case BinOp::Mul: return "*";
    case BinOp::Div: return "/";
    case BinOp::Mod: return "%";
    case BinOp::Eq: return "==";
    case BinOp::Ne: return "!=";
    case BinOp::Lt: return "<";
    case BinOp::Le: return "<=";
    case BinOp::Gt: return ">";
    case BinOp::Ge: return ">=";
    case BinOp::LogAnd: return "&&";
    case BinOp::LogOr: return "||";
    case BinOp::BitAnd: return "&";
    case BinOp::BitOr: return "|";
    case BinOp::BitXor: return "^";
    case BinOp::Shl: return "<<";
    case BinOp::Shr: return ">>";
  }
  return "?";
}

void emitExpr(std::ostream& os, const Expr& e, int parentPrec) {
  int prec = precOf(e);
  bool paren = prec < parentPrec;
  if (paren) os << '(';
  switch (e.kind) {
    case Expr::Kind::Const:
      os << e.value;
      break;
    case Expr::Kind::Var:
      os << e.name;
      break;
    case Expr::Kind::Index:
      os << e.name << '[';
      emitExpr(os, *e.a, 0);
      os << ']';
      break;
    case Expr::Kind::Unary:
      os << (e.unop == UnOp::Neg ? "-" : e.unop == UnOp::LogNot ? "!" : "~");
      emitExpr(os, *e.a, 11);
      break;
    case Expr::Kind::Binary:
      emitExpr(os, *e.a, prec);
      os << ' ' << opText(e.binop) << ' ';
      emitExpr(os, *e.b, prec + 1);
      break;
  }
  if (paren) os << ')';
}

void emitStmts(std::ostream& os, const StmtList& body, int indent);

void emitStmt(std::ostream& os, const Stmt& s, int indent) {
  std::string pad(indent * 2, ' ');
  os << pad;
  switch (s.kind) {
    case Stmt::Kind::LocalDecl:
      os << "int " << s.name;
      if (s.arrayLen > 0) os << '[' << s.arrayLen << ']';
      if (s.expr) {
        os << " = ";
        emitExpr(os, *s.expr, 0);
      }
      os << ";\n";
      break;
    case Stmt::Kind::Assign:
      os << printLValue(s.lhs) << " = ";
      emitExpr(os, *s.expr, 0);
      os << ";\n";
      break;
    case Stmt::Kind::If:
      os << "if (";
      emitExpr(os, *s.expr, 0);
      os << ") {\n";
      emitStmts(os, s.body, indent + 1);
      os << pad << "}";
      if (!s.elseBody.empty()) {
        os << " else {\n";
        emitStmts(os, s.elseBody, indent + 1);
        os << pad << "}";
      }
      os << "\n";
      break;
    case Stmt::Kind::While:
      os << "while (";
      emitExpr(os, *s.expr, 0);
      os << ") bound " << s.bound << " {\n";
      emitStmts(os, s.body, indent + 1);
      os << pad << "}\n";
      break;
    case Stmt::Kind::Call:
      os << s.name << "();\n";
      break;
    case Stmt::Kind::Transition:
      os << "transition_to " << s.name << ";\n";
      break;
    case Stmt::Kind::Sample:
      os << "sample(" << printLValue(s.lhs) << ", " << s.name << ");\n";
      break;
    case Stmt::Kind::Output:
      os << "output(";
      emitExpr(os, *s.expr, 0);
      os << ");\n";
      break;
    case Stmt::Kind::Halt:
      os << "halt;\n";
      break;
  }
}

void emitStmts(std::ostream& os, const StmtList& body, int indent) {
  for (const auto& s : body) emitStmt(os, *s, indent);
}

}  // namespace

std::string printExpr(const Expr& e) {
  std::ostringstream os;
  emitExpr(os, e, 0);
  return os.str();
}

std::string printLValue(const LValue& l) {
  std::string out = l.name;
  if (l.index) {
    out += '[';
    out += printExpr(*l.index);
    out += ']';
  }
  return out;
}

std::string printStmt(const Stmt& s, int indent) {
  std::ostringstream os;
  emitStmt(os, s, indent);
  return os.str();
}

std::string printProgram(const Program& p) {
  std::ostringstream os;
  for (const auto& d : p.tsDecls) {
    os << "TS int " << d.name;
    if (d.isArray()) os << '[' << d.length << ']';
    bool allZero = true;
    for (Word w : d.init) allZero = allZero && w == 0;
    if (!allZero) {
      os << " = ";
      if (d.isArray()) {
        os << '{';
        for (size_t i = 0; i < d.init.size(); ++i) {
          if (i) os << ", ";
          os << d.init[i];
        }
        os << '}';
      } else {
        os << d.init[0];
      }
    }
    os << ";\n";
  }
  if (!p.tsDecls.empty()) os << "\n";
  if (p.initBlock) {
    os << "init {\n";
    emitStmts(os, *p.initBlock, 1);
    os << "}\n\n";
  }
  for (const auto& f : p.functions) {
    os << "fn " << f.name << "() {\n";
    emitStmts(os, f.body, 1);
    os << "}\n\n";
  }
  for (const auto& t : p.tasks) {
    if (t.isEntry) os << "entry ";
    os << "task " << t.name << " {\n";
    emitStmts(os, t.body, 1);
    os << "}\n\n";
  }
  return os.str();
}

}  // namespace itc
