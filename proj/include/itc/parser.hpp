#pragma once

#include <string_view>

#include "itc/ast.hpp"

namespace itc {

// Parses task-language source text (`.at` format) and validates the result.
// Throws Diag with a source location on any syntax or validation error.
Program parseProgram(std::string_view source);

// Parses without running validation. Used by tooling that wants to inspect
// partially formed programs; most callers want parseProgram.
Program parseOnly(std::string_view source);

// Checks all Program invariants: entry task present and unique, transition
// targets exist, all task paths end in transition_to or halt, no recursion,
// unique names, locals written before read on every path, while bounds
// positive, functions free of transition/halt, init block volatile-only.
// Fills Task::locals / Function::locals / Program::initLocals.
void validate(Program& program);

}  // namespace itc
