#include "checker.hpp"

#include <charconv>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>

namespace sceneforge::script::detail {

namespace {

using scene::Assignment;
using scene::Color;
using scene::HandlerStatement;
using scene::Property;
using scene::Vec3;

struct CheckFailure {};

enum class Context { TopLevel, Handler };

class Checker {
 public:
  explicit Checker(DiagnosticSink& sink) : sink_(sink) {}

  std::vector<Statement> program(const StmtList& stmts) {
    std::vector<Statement> out;
    block(stmts, out);
    return out;
  }

  std::vector<HandlerStatement> handler_body(const StmtList& stmts) {
    std::vector<HandlerStatement> out;
    handler_statements(stmts, out);
    return out;
  }

 private:
  void error(const Location& at, std::string message) {
    sink_.add(Phase::Check, at.line, at.column, std::move(message));
  }
  [[noreturn]] void fail(const Location& at, std::string message) {
    error(at, std::move(message));
    throw CheckFailure{};
  }

  // Unrolled statements are capped at kMaxUnrolledStatements; loop iterations
  // get a separate, larger cap so nested repeats with empty bodies terminate.
  bool spend(const Location& at, bool iteration = false) {
    if (budget_exhausted_) return false;
    const bool over = iteration ? ++iterations_ > kMaxIterations : ++work_ > kMaxUnrolledStatements;
    if (over) {
      budget_exhausted_ = true;
      error(at, "repeat expansion exceeds " + std::to_string(kMaxUnrolledStatements) + " statements");
      return false;
    }
    return true;
  }

  void block(const StmtList& stmts, std::vector<Statement>& out) {
    for (const Stmt& stmt : stmts) {
      if (const auto* rep = std::get_if<RepeatStmt>(&stmt.node)) {
        repeat(*rep, out);
        if (budget_exhausted_) return;
        continue;
      }
      if (!spend(stmt.loc)) return;
      try {
        out.push_back({top_level(stmt), stmt.loc.line, stmt.loc.column});
      } catch (const CheckFailure&) {
      }
    }
  }

  std::optional<long long> repeat_bound(const RepeatBound& b) {
    long long v = 0;
    const char* first = b.text.data();
    const char* last = first + b.text.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
      error(b.loc, "repeat bounds must be integers, found '" + b.text + "'");
      return std::nullopt;
    }
    return v;
  }

  void repeat(const RepeatStmt& rep, std::vector<Statement>& out) {
    const auto lo = repeat_bound(rep.from);
    const auto hi = repeat_bound(rep.to);
    if (vars_.count(rep.variable) != 0) {
      error(rep.variable_loc, "loop variable '" + rep.variable + "' is already defined");
      return;
    }
    if (!lo || !hi) return;
    for (long long i = *lo; i <= *hi; ++i) {
      if (!spend(rep.variable_loc, /*iteration=*/true)) break;
      vars_[rep.variable] = i;
      block(rep.body, out);
      if (budget_exhausted_ || i == std::numeric_limits<long long>::max()) break;
    }
    vars_.erase(rep.variable);
  }

  scene::Command top_level(const Stmt& stmt) {
    return std::visit(
        [&](const auto& node) -> scene::Command {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, CreateStmt>) {
            return create(node, Context::TopLevel);
          } else if constexpr (std::is_same_v<T, SetStmt>) {
            return set(node, Context::TopLevel);
          } else if constexpr (std::is_same_v<T, DeleteStmt>) {
            return scene::DeleteCommand{target_name(node.target, Context::TopLevel)};
          } else if constexpr (std::is_same_v<T, BehaviorStmt>) {
            return behavior(node);
          } else if constexpr (std::is_same_v<T, OnInteractStmt>) {
            scene::AttachHandlerCommand cmd;
            cmd.target = target_name(node.target, Context::TopLevel);
            cmd.body = handler_body_checked(node.body);
            return cmd;
          } else {
            throw std::logic_error("repeat handled by block()");
          }
        },
        stmt.node);
  }

  std::vector<HandlerStatement> handler_body_checked(const StmtList& body) {
    std::vector<HandlerStatement> out;
    const std::size_t errors_before = errors_seen_;
    handler_statements(body, out);
    if (errors_seen_ != errors_before) throw CheckFailure{};
    return out;
  }

  void handler_statements(const StmtList& body, std::vector<HandlerStatement>& out) {
    for (const Stmt& stmt : body) {
      try {
        if (const auto* c = std::get_if<CreateStmt>(&stmt.node)) {
          out.emplace_back(create(*c, Context::Handler));
        } else if (const auto* s = std::get_if<SetStmt>(&stmt.node)) {
          out.emplace_back(set(*s, Context::Handler));
        } else if (const auto* d = std::get_if<DeleteStmt>(&stmt.node)) {
          out.emplace_back(scene::DeleteCommand{target_name(d->target, Context::Handler)});
        } else {
          fail(stmt.loc, "'" + stmt.keyword + "' is not allowed inside an interaction handler");
        }
      } catch (const CheckFailure&) {
        ++errors_seen_;
      }
    }
  }

  // -- names ---------------------------------------------------------------

  std::string resolve(const NameWord& word) {
    std::string out;
    for (const WordPart& part : word.parts) {
      if (!part.is_variable) {
        out += part.text;
        continue;
      }
      auto it = vars_.find(part.text);
      if (it == vars_.end()) fail(word.loc, "undefined loop variable '$" + part.text + "'");
      out += std::to_string(it->second);
    }
    return out;
  }

  std::string entity_name(const NameWord& word, Context ctx, bool allow_none) {
    std::string name = resolve(word);
    if (name == scene::kSelfName) {
      if (ctx != Context::Handler) fail(word.loc, "'self' is only valid inside an interaction handler");
      return name;
    }
    if (allow_none && name == scene::kNoneName) return name;
    if (!scene::valid_entity_name(name)) fail(word.loc, "invalid entity name '" + name + "'");
    return name;
  }

  std::string target_name(const NameWord& word, Context ctx) { return entity_name(word, ctx, false); }

  std::string new_name(const NameWord& word) {
    std::string name = resolve(word);
    if (name == scene::kSelfName || name == scene::kNoneName) {
      fail(word.loc, "'" + name + "' is reserved and cannot name an entity");
    }
    if (!scene::valid_entity_name(name)) fail(word.loc, "invalid entity name '" + name + "'");
    return name;
  }

  // -- values --------------------------------------------------------------

  double eval(const Expr& e) {
    return std::visit(
        [&](const auto& node) -> double {
          using T = std::decay_t<decltype(node)>;
          if constexpr (std::is_same_v<T, NumberLit>) {
            if (!std::isfinite(node.value)) fail(e.loc, "number out of range");
            return node.value;
          } else if constexpr (std::is_same_v<T, VarRef>) {
            auto it = vars_.find(node.name);
            if (it == vars_.end()) fail(e.loc, "undefined loop variable '$" + node.name + "'");
            return static_cast<double>(it->second);
          } else if constexpr (std::is_same_v<T, Unary>) {
            const double v = eval(*node.operand);
            return node.op == '-' ? -v : v;
          } else {
            const double a = eval(*node.lhs);
            const double b = eval(*node.rhs);
            double r = 0.0;
            switch (node.op) {
              case '+': r = a + b; break;
              case '-': r = a - b; break;
              case '*': r = a * b; break;
              default:
                if (b == 0.0) fail(e.loc, "division by zero");
                r = a / b;
            }
            if (!std::isfinite(r)) fail(e.loc, "arithmetic overflow");
            return r;
          }
        },
        e.node);
  }

  double number(const KeyValue& kv) {
    const auto* expr = std::get_if<ExprPtr>(&kv.value.node);
    if (expr == nullptr) fail(kv.value.loc, "expected a number for '" + kv.key + "'");
    return eval(**expr);
  }

  Vec3 vector(const KeyValue& kv) {
    const auto* tuple = std::get_if<TupleValue>(&kv.value.node);
    if (tuple == nullptr) fail(kv.value.loc, "malformed vector for '" + kv.key + "', expected (x,y,z)");
    if (tuple->components.size() != 3) {
      fail(kv.value.loc, "malformed vector for '" + kv.key + "', expected 3 components, found " +
                             std::to_string(tuple->components.size()));
    }
    return {eval(*tuple->components[0]), eval(*tuple->components[1]), eval(*tuple->components[2])};
  }

  Vec3 axis(const KeyValue& kv) {
    const Vec3 v = vector(kv);
    if (v.length() == 0.0) fail(kv.value.loc, "axis must be non-zero");
    return v;
  }

  Color color(const KeyValue& kv) {
    std::string text;
    if (const auto* c = std::get_if<ColorValue>(&kv.value.node)) text = c->text;
    if (const auto* w = std::get_if<NameWord>(&kv.value.node)) text = w->text;
    const auto parsed = Color::from_hex(text);
    if (!parsed) fail(kv.value.loc, "malformed color for '" + kv.key + "', expected #RRGGBB");
    return *parsed;
  }

  const NameWord& word(const KeyValue& kv, const char* what) {
    const auto* w = std::get_if<NameWord>(&kv.value.node);
    if (w == nullptr) fail(kv.value.loc, std::string("expected ") + what + " for '" + kv.key + "'");
    return *w;
  }

  // Rejects duplicate and unknown keys; returns the key -> argument map.
  std::map<std::string, const KeyValue*> collect(const std::vector<KeyValue>& args,
                                                 std::initializer_list<std::string_view> allowed,
                                                 const std::string& what) {
    std::map<std::string, const KeyValue*> out;
    for (const KeyValue& kv : args) {
      bool known = false;
      for (auto a : allowed) known = known || kv.key == a;
      if (!known) {
        std::string list;
        for (auto a : allowed) list += (list.empty() ? "" : ", ") + std::string(a);
        fail(kv.loc, "unknown argument '" + kv.key + "' for " + what + " (expected " + list + ")");
      }
      if (!out.emplace(kv.key, &kv).second) fail(kv.loc, "duplicate argument '" + kv.key + "'");
    }
    return out;
  }

  const KeyValue& required(const std::map<std::string, const KeyValue*>& args, const std::string& key,
                           const Location& at, const std::string& what) {
    auto it = args.find(key);
    if (it == args.end()) fail(at, what + " requires '" + key + "='");
    return *it->second;
  }

  // -- statements ----------------------------------------------------------

  scene::CreateCommand create(const CreateStmt& s, Context ctx) {
    scene::CreateCommand cmd;
    cmd.name = new_name(s.name);
    const auto args = collect(s.args, {"shape", "parent"}, "create");
    const KeyValue& shape = required(args, "shape", s.name.loc, "create");
    const std::string shape_text = resolve(word(shape, "a shape name"));
    const auto parsed = scene::parse_shape(shape_text);
    if (!parsed) {
      fail(shape.value.loc,
           "unknown shape '" + shape_text + "' (expected cube, sphere, cylinder, plane or capsule)");
    }
    cmd.shape = *parsed;
    if (auto it = args.find("parent"); it != args.end()) {
      std::string parent = entity_name(word(*it->second, "an entity name"), ctx, true);
      if (parent != scene::kNoneName) cmd.parent = std::move(parent);
    }
    return cmd;
  }

  scene::SetCommand set(const SetStmt& s, Context ctx) {
    scene::SetCommand cmd;
    cmd.target = target_name(s.target, ctx);
    std::set<Property> seen;
    for (const KeyValue& kv : s.props) {
      const auto prop = scene::parse_property(kv.key);
      if (!prop) {
        fail(kv.loc, "unknown property '" + kv.key + "' (expected position, rotation, scale, color or parent)");
      }
      if (!seen.insert(*prop).second) fail(kv.loc, "property '" + kv.key + "' assigned twice");
      Assignment a;
      a.property = *prop;
      switch (*prop) {
        case Property::Position:
        case Property::Rotation:
          a.value = vector(kv);
          break;
        case Property::Scale: {
          const Vec3 v = vector(kv);
          if (!(v.x > 0.0 && v.y > 0.0 && v.z > 0.0)) fail(kv.value.loc, "scale components must be > 0");
          a.value = v;
          break;
        }
        case Property::Color:
          a.value = color(kv);
          break;
        case Property::Parent:
          a.value = entity_name(word(kv, "an entity name"), ctx, true);
          break;
      }
      cmd.assignments.push_back(std::move(a));
    }
    return cmd;
  }

  scene::AttachBehaviorCommand behavior(const BehaviorStmt& s) {
    scene::AttachBehaviorCommand cmd;
    cmd.target = target_name(s.target, Context::TopLevel);
    const std::string what = "behavior " + s.kind;
    if (s.kind == "spin") {
      const auto args = collect(s.args, {"axis", "speed"}, what);
      scene::Spin b;
      if (auto it = args.find("axis"); it != args.end()) b.axis = axis(*it->second);
      b.speed = number(required(args, "speed", s.kind_loc, what));
      cmd.behavior = b;
    } else if (s.kind == "orbit") {
      const auto args = collect(s.args, {"center", "radius", "speed"}, what);
      scene::Orbit b;
      b.center = target_name(word(required(args, "center", s.kind_loc, what), "an entity name"), Context::TopLevel);
      if (auto it = args.find("radius"); it != args.end()) {
        b.radius = number(*it->second);
        if (b.radius < 0.0) fail(it->second->value.loc, "orbit radius must be >= 0");
      }
      b.speed = number(required(args, "speed", s.kind_loc, what));
      cmd.behavior = b;
    } else if (s.kind == "oscillate") {
      const auto args = collect(s.args, {"axis", "amplitude", "period"}, what);
      scene::Oscillate b;
      if (auto it = args.find("axis"); it != args.end()) b.axis = axis(*it->second);
      b.amplitude = number(required(args, "amplitude", s.kind_loc, what));
      const KeyValue& period = required(args, "period", s.kind_loc, what);
      b.period = number(period);
      if (!(b.period > 0.0)) fail(period.value.loc, "oscillate period must be > 0");
      cmd.behavior = b;
    } else if (s.kind == "follow") {
      const auto args = collect(s.args, {"target", "speed"}, what);
      scene::Follow b;
      b.target = target_name(word(required(args, "target", s.kind_loc, what), "an entity name"), Context::TopLevel);
      const KeyValue& speed = required(args, "speed", s.kind_loc, what);
      b.speed = number(speed);
      if (b.speed < 0.0) fail(speed.value.loc, "follow speed must be >= 0");
      cmd.behavior = b;
    } else {
      fail(s.kind_loc, "unknown behavior '" + s.kind + "' (expected spin, orbit, oscillate or follow)");
    }
    try {
      cmd.behavior = scene::make_valid(std::move(cmd.behavior));
    } catch (const std::invalid_argument& e) {
      fail(s.kind_loc, e.what());
    }
    return cmd;
  }

  DiagnosticSink& sink_;
  std::map<std::string, long long> vars_;
  static constexpr std::size_t kMaxIterations = 100 * kMaxUnrolledStatements;
  std::size_t work_ = 0;
  std::size_t iterations_ = 0;
  bool budget_exhausted_ = false;
  std::size_t errors_seen_ = 0;  // failed handler statements
};

}  // namespace

std::vector<Statement> check_program(const StmtList& stmts, DiagnosticSink& sink) {
  return Checker(sink).program(stmts);
}

std::vector<scene::HandlerStatement> check_handler_body(const StmtList& stmts, DiagnosticSink& sink) {
  return Checker(sink).handler_body(stmts);
}

}  // namespace sceneforge::script::detail
