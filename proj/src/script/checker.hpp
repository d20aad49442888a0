#pragma once

#include "ast.hpp"

namespace sceneforge::script::detail {

/// Resolves names, folds expressions and unrolls repeats. Statements that fail
/// checking are reported to `sink` and dropped from the result.
std::vector<Statement> check_program(const StmtList& stmts, DiagnosticSink& sink);

/// Checks a bare handler body: create/set/delete only, `self` allowed.
std::vector<scene::HandlerStatement> check_handler_body(const StmtList& stmts, DiagnosticSink& sink);

}  // namespace sceneforge::script::detail
