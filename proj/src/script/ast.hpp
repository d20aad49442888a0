#pragma once

#include "lexer.hpp"

#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace sceneforge::script::detail {

struct Location {
  int line = 1;
  int column = 1;
};

struct Expr;
using ExprPtr = std::unique_ptr<Expr>;

struct NumberLit {
  double value = 0.0;
};
struct VarRef {
  std::string name;
};
struct Unary {
  char op = '-';
  ExprPtr operand;
};
struct Binary {
  char op = '+';
  ExprPtr lhs;
  ExprPtr rhs;
};

struct Expr {
  Location loc;
  std::variant<NumberLit, VarRef, Unary, Binary> node;
};

/// Name with `$var` interpolation, resolved during checking.
struct NameWord {
  Location loc;
  std::vector<WordPart> parts;
  std::string text;
};

struct TupleValue {
  std::vector<ExprPtr> components;
};
struct ColorValue {
  std::string text;
};

struct Value {
  Location loc;
  std::variant<ExprPtr, TupleValue, ColorValue, NameWord> node;
};

struct KeyValue {
  Location loc;
  std::string key;
  Value value;
};

struct Stmt;
using StmtList = std::vector<Stmt>;

struct CreateStmt {
  NameWord name;
  std::vector<KeyValue> args;
};
struct SetStmt {
  NameWord target;
  std::vector<KeyValue> props;
};
struct BehaviorStmt {
  NameWord target;
  std::string kind;
  Location kind_loc;
  std::vector<KeyValue> args;
};
struct OnInteractStmt {
  NameWord target;
  StmtList body;
};
struct DeleteStmt {
  NameWord target;
};
struct RepeatBound {
  Location loc;
  std::string text;  // sign included
};
struct RepeatStmt {
  std::string variable;
  Location variable_loc;
  RepeatBound from;
  RepeatBound to;
  StmtList body;
};

struct Stmt {
  Location loc;
  std::string keyword;
  std::variant<CreateStmt, SetStmt, BehaviorStmt, OnInteractStmt, DeleteStmt, RepeatStmt> node;
};

StmtList parse(const std::vector<Token>& tokens, DiagnosticSink& sink);

}  // namespace sceneforge::script::detail
