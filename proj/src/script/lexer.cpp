#include "lexer.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>

namespace sceneforge::script::detail {

std::string_view token_kind_name(TokenKind kind) {
  switch (kind) {
    case TokenKind::Word: return "word";
    case TokenKind::Number: return "number";
    case TokenKind::Color: return "color";
    case TokenKind::Equals: return "'='";
    case TokenKind::LParen: return "'('";
    case TokenKind::RParen: return "')'";
    case TokenKind::Comma: return "','";
    case TokenKind::LBrace: return "'{'";
    case TokenKind::RBrace: return "'}'";
    case TokenKind::DotDot: return "'..'";
    case TokenKind::Plus: return "'+'";
    case TokenKind::Minus: return "'-'";
    case TokenKind::Star: return "'*'";
    case TokenKind::Slash: return "'/'";
    case TokenKind::Semicolon: return "';'";
    case TokenKind::End: return "end of input";
  }
  return "token";
}

void DiagnosticSink::add(Phase phase, int line, int column, std::string message) {
  CompileError error{phase, line, column, std::move(message)};
  if (std::find(errors_.begin(), errors_.end(), error) != errors_.end()) return;
  if (full()) {
    if (!overflowed_) {
      overflowed_ = true;
      errors_.back().message += " (further diagnostics suppressed)";
    }
    return;
  }
  errors_.push_back(std::move(error));
}

std::vector<CompileError> DiagnosticSink::take() {
  std::stable_sort(errors_.begin(), errors_.end(), [](const CompileError& a, const CompileError& b) {
    return a.line != b.line ? a.line < b.line : a.column < b.column;
  });
  return std::move(errors_);
}

namespace {

bool ident_start(char c) { return std::isalpha(static_cast<unsigned char>(c)) || c == '_'; }
bool ident_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }
bool digit(char c) { return c >= '0' && c <= '9'; }
bool hex(char c) { return std::isxdigit(static_cast<unsigned char>(c)) != 0; }

class Lexer {
 public:
  Lexer(std::string_view text, DiagnosticSink& sink) : text_(text), sink_(sink) {}

  std::vector<Token> run() {
    std::vector<Token> tokens;
    while (true) {
      skip_trivia();
      if (pos_ >= text_.size()) break;
      const int line = line_, column = column_;
      const char c = text_[pos_];
      Token tok;
      tok.line = line;
      tok.column = column;
      if (ident_start(c) || c == '$') {
        if (lex_word(tok)) tokens.push_back(std::move(tok));
        continue;
      }
      if (digit(c)) {
        lex_number(tok);
        tokens.push_back(std::move(tok));
        continue;
      }
      if (c == '#') {
        if (lex_color(tok)) tokens.push_back(std::move(tok));
        continue;
      }
      if (c == '.' && peek(1) == '.') {
        advance(2);
        tok.kind = TokenKind::DotDot;
        tok.text = "..";
        tokens.push_back(std::move(tok));
        continue;
      }
      TokenKind kind{};
      bool single = true;
      switch (c) {
        case '=': kind = TokenKind::Equals; break;
        case '(': kind = TokenKind::LParen; break;
        case ')': kind = TokenKind::RParen; break;
        case ',': kind = TokenKind::Comma; break;
        case '{': kind = TokenKind::LBrace; break;
        case '}': kind = TokenKind::RBrace; break;
        case '+': kind = TokenKind::Plus; break;
        case '-': kind = TokenKind::Minus; break;
        case '*': kind = TokenKind::Star; break;
        case '/': kind = TokenKind::Slash; break;
        case ';': kind = TokenKind::Semicolon; break;
        default: single = false;
      }
      if (single) {
        advance(1);
        tok.kind = kind;
        tok.text = std::string(1, c);
        tokens.push_back(std::move(tok));
        continue;
      }
      sink_.add(Phase::Lex, line, column, illegal_char_message(c));
      advance(1);
    }
    Token end;
    end.kind = TokenKind::End;
    end.line = last_line_;
    end.column = last_column_;
    tokens.push_back(std::move(end));
    return tokens;
  }

 private:
  [[nodiscard]] char peek(std::size_t offset) const {
    return pos_ + offset < text_.size() ? text_[pos_ + offset] : '\0';
  }

  void advance(std::size_t n) {
    for (std::size_t i = 0; i < n && pos_ < text_.size(); ++i) {
      last_line_ = line_;
      last_column_ = column_;
      if (text_[pos_] == '\n') {
        ++line_;
        column_ = 1;
      } else {
        ++column_;
      }
      ++pos_;
    }
  }

  void skip_trivia() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == ' ' || c == '\t' || c == '\n' || c == '\r') {
        advance(1);
      } else if (c == '/' && peek(1) == '/') {
        while (pos_ < text_.size() && text_[pos_] != '\n') advance(1);
      } else {
        break;
      }
    }
  }

  static std::string illegal_char_message(char c) {
    const auto u = static_cast<unsigned char>(c);
    if (std::isprint(u)) return std::string("illegal character '") + c + "'";
    char buf[40];
    std::snprintf(buf, sizeof buf, "illegal byte 0x%02X", u);
    return buf;
  }

  bool lex_word(Token& tok) {
    tok.kind = TokenKind::Word;
    const std::size_t start = pos_;
    bool ok = true;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (ident_char(c)) {
        if (tok.parts.empty() || tok.parts.back().is_variable) tok.parts.push_back({false, ""});
        tok.parts.back().text.push_back(c);
        advance(1);
      } else if (c == '$') {
        const int line = line_, column = column_;
        advance(1);
        const bool braced = pos_ < text_.size() && text_[pos_] == '{';
        if (braced) advance(1);
        std::string name;
        if (pos_ < text_.size() && ident_start(text_[pos_])) {
          while (pos_ < text_.size() && ident_char(text_[pos_])) {
            name.push_back(text_[pos_]);
            advance(1);
          }
        }
        if (name.empty()) {
          sink_.add(Phase::Lex, line, column, "expected a variable name after '$'");
          ok = false;
        } else if (braced) {
          if (pos_ < text_.size() && text_[pos_] == '}') {
            advance(1);
          } else {
            sink_.add(Phase::Lex, line, column, "unterminated '${' variable reference");
            ok = false;
          }
        }
        tok.parts.push_back({true, std::move(name)});
      } else {
        break;
      }
    }
    tok.text = std::string(text_.substr(start, pos_ - start));
    return ok;
  }

  void lex_number(Token& tok) {
    tok.kind = TokenKind::Number;
    const std::size_t start = pos_;
    while (digit(peek(0))) advance(1);
    if (peek(0) == '.' && digit(peek(1))) {
      advance(1);
      while (digit(peek(0))) advance(1);
    }
    if ((peek(0) == 'e' || peek(0) == 'E') &&
        (digit(peek(1)) || ((peek(1) == '+' || peek(1) == '-') && digit(peek(2))))) {
      advance(2);
      while (digit(peek(0))) advance(1);
    }
    tok.text = std::string(text_.substr(start, pos_ - start));
  }

  bool lex_color(Token& tok) {
    const int line = line_, column = column_;
    std::size_t n = 0;
    while (n < 6 && hex(peek(1 + n))) ++n;
    if (n == 6 && !ident_char(peek(7))) {
      tok.kind = TokenKind::Color;
      tok.text = std::string(text_.substr(pos_, 7));
      advance(7);
      return true;
    }
    std::size_t len = 1;
    while (ident_char(peek(len))) ++len;
    sink_.add(Phase::Lex, line, column,
              "malformed color literal '" + std::string(text_.substr(pos_, len)) + "', expected #RRGGBB");
    advance(len);
    return false;
  }

  std::string_view text_;
  DiagnosticSink& sink_;
  std::size_t pos_ = 0;
  int line_ = 1, column_ = 1;
  int last_line_ = 1, last_column_ = 1;
};

}  // namespace

std::vector<Token> lex(std::string_view text, DiagnosticSink& sink) { return Lexer(text, sink).run(); }

}  // namespace sceneforge::script::detail
