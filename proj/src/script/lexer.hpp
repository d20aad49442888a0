#pragma once

#include "sceneforge/script/script.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::script::detail {

enum class TokenKind {
  Word,
  Number,
  Color,
  Equals,
  LParen,
  RParen,
  Comma,
  LBrace,
  RBrace,
  DotDot,
  Plus,
  Minus,
  Star,
  Slash,
  Semicolon,
  End,
};

std::string_view token_kind_name(TokenKind kind);

/// A word is a run of literal identifier characters and `$var` / `${var}` references.
struct WordPart {
  bool is_variable = false;
  std::string text;
};

struct Token {
  TokenKind kind = TokenKind::End;
  std::string text;
  int line = 1;
  int column = 1;
  std::vector<WordPart> parts;  // Word only

  [[nodiscard]] bool is_plain_word() const {
    return kind == TokenKind::Word && parts.size() == 1 && !parts[0].is_variable;
  }
  [[nodiscard]] bool is_keyword(std::string_view kw) const { return is_plain_word() && text == kw; }
  [[nodiscard]] bool is_variable_only() const {
    return kind == TokenKind::Word && parts.size() == 1 && parts[0].is_variable;
  }
};

class DiagnosticSink {
 public:
  void add(Phase phase, int line, int column, std::string message);
  [[nodiscard]] bool full() const { return errors_.size() >= kMaxDiagnostics; }
  [[nodiscard]] bool empty() const { return errors_.empty(); }
  [[nodiscard]] std::vector<CompileError> take();

 private:
  std::vector<CompileError> errors_;
  bool overflowed_ = false;
};

/// Always ends with an End token. Illegal input is reported and skipped.
std::vector<Token> lex(std::string_view text, DiagnosticSink& sink);

}  // namespace sceneforge::script::detail
