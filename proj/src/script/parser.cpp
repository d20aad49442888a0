#include "ast.hpp"

#include <charconv>
#include <cstdlib>

namespace sceneforge::script::detail {

namespace {

struct ParseFailure {};

constexpr std::string_view kStatementKeywords[] = {"create", "set", "behavior", "on_interact", "delete",
                                                   "repeat"};

bool is_statement_keyword(const Token& tok) {
  for (auto kw : kStatementKeywords) {
    if (tok.is_keyword(kw)) return true;
  }
  return false;
}

class Parser {
 public:
  Parser(const std::vector<Token>& tokens, DiagnosticSink& sink) : tokens_(tokens), sink_(sink) {}

  StmtList program() {
    StmtList out = statements(/*in_block=*/false);
    return out;
  }

 private:
  const Token& cur() const { return tokens_[pos_]; }
  const Token& ahead(std::size_t n) const {
    return tokens_[std::min(pos_ + n, tokens_.size() - 1)];
  }
  bool at(TokenKind kind) const { return cur().kind == kind; }
  const Token& take() {
    const Token& t = tokens_[pos_];
    if (pos_ + 1 < tokens_.size()) ++pos_;
    return t;
  }
  static Location loc(const Token& t) { return {t.line, t.column}; }

  [[noreturn]] void fail(const Token& at_token, const std::string& message) {
    sink_.add(Phase::Parse, at_token.line, at_token.column, message);
    throw ParseFailure{};
  }

  static std::string describe(const Token& t) {
    if (t.kind == TokenKind::End) return "end of input";
    return "'" + t.text + "'";
  }

  const Token& expect(TokenKind kind, const char* context) {
    if (!at(kind)) {
      fail(cur(), std::string("expected ") + std::string(token_kind_name(kind)) + " " + context + ", found " +
                      describe(cur()));
    }
    return take();
  }

  struct DepthGuard {
    Parser& p;
    DepthGuard(Parser& parser, const Token& t) : p(parser) {
      if (++p.depth_ > kMaxNesting) {
        --p.depth_;
        p.fail(t, "nesting too deep");
      }
    }
    ~DepthGuard() { --p.depth_; }
  };

  StmtList statements(bool in_block) {
    StmtList out;
    while (!at(TokenKind::End) && !(in_block && at(TokenKind::RBrace))) {
      if (sink_.full()) {
        // Stop producing more noise; skip to the end.
        pos_ = tokens_.size() - 1;
        break;
      }
      if (at(TokenKind::Semicolon)) {
        take();
        continue;
      }
      const std::size_t before = pos_;
      try {
        out.push_back(statement());
      } catch (const ParseFailure&) {
        if (pos_ == before) take();
        synchronize();
      }
    }
    return out;
  }

  void synchronize() {
    while (!at(TokenKind::End)) {
      if (at(TokenKind::Semicolon)) {
        take();
        return;
      }
      if (at(TokenKind::RBrace) && depth_ > 0) return;
      if (at(TokenKind::RBrace)) {
        take();
        continue;
      }
      if (is_statement_keyword(cur())) return;
      take();
    }
  }

  Stmt statement() {
    const Token& kw = cur();
    Stmt stmt;
    stmt.loc = loc(kw);
    if (kw.kind != TokenKind::Word) fail(kw, "expected a statement, found " + describe(kw));
    if (!kw.is_plain_word() || !is_statement_keyword(kw)) {
      fail(kw, "unknown statement " + describe(kw) +
                   " (expected create, set, behavior, on_interact, delete or repeat)");
    }
    stmt.keyword = kw.text;
    take();
    if (stmt.keyword == "create") {
      CreateStmt s;
      s.name = name_word("after 'create'");
      s.args = key_values();
      stmt.node = std::move(s);
    } else if (stmt.keyword == "set") {
      SetStmt s;
      s.target = name_word("after 'set'");
      s.props = key_values();
      if (s.props.empty()) fail(cur(), "expected at least one property=value after 'set " + s.target.text + "'");
      stmt.node = std::move(s);
    } else if (stmt.keyword == "behavior") {
      BehaviorStmt s;
      s.target = name_word("after 'behavior'");
      const Token& kind = cur();
      if (!kind.is_plain_word()) fail(kind, "expected a behavior kind, found " + describe(kind));
      s.kind = kind.text;
      s.kind_loc = loc(kind);
      take();
      s.args = key_values();
      stmt.node = std::move(s);
    } else if (stmt.keyword == "on_interact") {
      OnInteractStmt s;
      s.target = name_word("after 'on_interact'");
      const Token& open = expect(TokenKind::LBrace, "to open the handler body");
      DepthGuard guard(*this, open);
      s.body = statements(/*in_block=*/true);
      expect(TokenKind::RBrace, "to close the handler body");
      stmt.node = std::move(s);
    } else if (stmt.keyword == "delete") {
      DeleteStmt s;
      s.target = name_word("after 'delete'");
      stmt.node = std::move(s);
    } else {
      RepeatStmt s;
      const Token& var = cur();
      if (!var.is_plain_word()) fail(var, "expected a loop variable name after 'repeat', found " + describe(var));
      s.variable = var.text;
      s.variable_loc = loc(var);
      take();
      s.from = bound();
      expect(TokenKind::DotDot, "between repeat bounds");
      s.to = bound();
      const Token& open = expect(TokenKind::LBrace, "to open the repeat body");
      DepthGuard guard(*this, open);
      s.body = statements(/*in_block=*/true);
      expect(TokenKind::RBrace, "to close the repeat body");
      stmt.node = std::move(s);
    }
    return stmt;
  }

  RepeatBound bound() {
    RepeatBound b;
    b.loc = loc(cur());
    if (at(TokenKind::Minus)) {
      b.text = "-";
      take();
    }
    if (!at(TokenKind::Number)) fail(cur(), "repeat bounds must be integer literals, found " + describe(cur()));
    b.text += take().text;
    return b;
  }

  NameWord name_word(const char* context) {
    const Token& t = cur();
    if (t.kind != TokenKind::Word) fail(t, std::string("expected an entity name ") + context + ", found " + describe(t));
    NameWord w{loc(t), t.parts, t.text};
    take();
    return w;
  }

  bool at_key_value() const {
    return cur().kind == TokenKind::Word && ahead(1).kind == TokenKind::Equals;
  }

  std::vector<KeyValue> key_values() {
    std::vector<KeyValue> out;
    while (at_key_value()) {
      const Token& key = take();
      if (!key.is_plain_word()) fail(key, "argument names cannot contain variables");
      take();  // '='
      KeyValue kv;
      kv.loc = loc(key);
      kv.key = key.text;
      kv.value = value();
      out.push_back(std::move(kv));
    }
    if (cur().kind == TokenKind::Word && !is_statement_keyword(cur()) && ahead(1).kind != TokenKind::Equals &&
        !at(TokenKind::End)) {
      fail(cur(), "expected key=value or a new statement, found " + describe(cur()));
    }
    if (!(at(TokenKind::End) || at(TokenKind::Semicolon) || at(TokenKind::RBrace) || at(TokenKind::Word))) {
      fail(cur(), "unexpected " + describe(cur()));
    }
    return out;
  }

  bool paren_starts_tuple() const {
    int depth = 0;
    for (std::size_t i = pos_; i < tokens_.size(); ++i) {
      const auto kind = tokens_[i].kind;
      if (kind == TokenKind::LParen) ++depth;
      if (kind == TokenKind::RParen && --depth == 0) return false;
      if (kind == TokenKind::Comma && depth == 1) return true;
      if (kind == TokenKind::End || kind == TokenKind::LBrace || kind == TokenKind::RBrace ||
          kind == TokenKind::Semicolon || kind == TokenKind::Equals) {
        return false;
      }
    }
    return false;
  }

  Value value() {
    const Token& t = cur();
    Value v;
    v.loc = loc(t);
    if (t.kind == TokenKind::Color) {
      v.node = ColorValue{t.text};
      take();
      return v;
    }
    if (t.kind == TokenKind::LParen && paren_starts_tuple()) {
      DepthGuard guard(*this, t);
      take();
      TupleValue tuple;
      tuple.components.push_back(expression());
      while (at(TokenKind::Comma)) {
        take();
        tuple.components.push_back(expression());
      }
      expect(TokenKind::RParen, "to close the vector");
      v.node = std::move(tuple);
      return v;
    }
    if (t.kind == TokenKind::Word && !t.is_variable_only()) {
      v.node = NameWord{loc(t), t.parts, t.text};
      take();
      return v;
    }
    v.node = expression();
    return v;
  }

  ExprPtr expression() {
    DepthGuard guard(*this, cur());
    ExprPtr lhs = term();
    while (at(TokenKind::Plus) || at(TokenKind::Minus)) {
      const Token& op = take();
      auto e = std::make_unique<Expr>();
      e->loc = loc(op);
      e->node = Binary{op.text[0], std::move(lhs), term()};
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr term() {
    ExprPtr lhs = unary();
    while (at(TokenKind::Star) || at(TokenKind::Slash)) {
      const Token& op = take();
      auto e = std::make_unique<Expr>();
      e->loc = loc(op);
      e->node = Binary{op.text[0], std::move(lhs), unary()};
      lhs = std::move(e);
    }
    return lhs;
  }

  ExprPtr unary() {
    if (at(TokenKind::Minus) || at(TokenKind::Plus)) {
      const Token& op = take();
      DepthGuard guard(*this, op);
      auto e = std::make_unique<Expr>();
      e->loc = loc(op);
      e->node = Unary{op.text[0], unary()};
      return e;
    }
    return primary();
  }

  ExprPtr primary() {
    const Token& t = cur();
    auto e = std::make_unique<Expr>();
    e->loc = loc(t);
    if (t.kind == TokenKind::Number) {
      e->node = NumberLit{std::strtod(t.text.c_str(), nullptr)};
      take();
      return e;
    }
    if (t.is_variable_only()) {
      e->node = VarRef{t.parts[0].text};
      take();
      return e;
    }
    if (t.kind == TokenKind::LParen) {
      DepthGuard guard(*this, t);
      take();
      ExprPtr inner = expression();
      expect(TokenKind::RParen, "to close the parenthesized expression");
      return inner;
    }
    fail(t, "expected a number, variable or '(', found " + describe(t));
  }

  const std::vector<Token>& tokens_;
  DiagnosticSink& sink_;
  std::size_t pos_ = 0;
  int depth_ = 0;
};

}  // namespace

StmtList parse(const std::vector<Token>& tokens, DiagnosticSink& sink) { return Parser(tokens, sink).program(); }

}  // namespace sceneforge::script::detail
