#pragma once

#include <string>

#include "itc/ast.hpp"

namespace itc {

// Emits re-parsable source: parseProgram(printProgram(p)) is structurally
// equal to p.
std::string printProgram(const Program& p);

std::string printExpr(const Expr& e);
std::string printStmt(const Stmt& s, int indent);
std::string printLValue(const LValue& l);

}  // namespace itc
