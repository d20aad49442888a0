#pragma once

#include "sceneforge/scene/command.hpp"
#include "sceneforge/scene/scene.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sceneforge::script {

enum class Origin { Builder, Saved, User };

struct ScriptSource {
  std::string id;
  std::string text;
  Origin origin = Origin::User;
};

enum class Phase { Lex, Parse, Check };

std::string_view phase_name(Phase phase);

struct CompileError {
  Phase phase = Phase::Parse;
  int line = 1;    // 1-based
  int column = 1;  // 1-based, in bytes
  std::string message;

  friend bool operator==(const CompileError&, const CompileError&) = default;
};

struct RuntimeError {
  std::size_t statement_index = 0;  // into the unrolled statement list
  scene::ErrorKind kind = scene::ErrorKind::EntityNotFound;
  std::string message;
};

struct Statement {
  scene::Command command;
  int line = 1;
  int column = 1;
};

/// A checked program: repeat blocks unrolled, every expression folded.
struct Program {
  std::vector<Statement> statements;

  [[nodiscard]] std::size_t size() const { return statements.size(); }
};

struct CompileResult {
  std::optional<Program> program;
  std::vector<CompileError> errors;

  [[nodiscard]] bool ok() const { return program.has_value(); }
};

/// Limits that keep compilation total on adversarial input.
inline constexpr std::size_t kMaxUnrolledStatements = 10000;
inline constexpr std::size_t kMaxDiagnostics = 50;
inline constexpr int kMaxNesting = 64;

/// Lex, parse, and check. Reports every diagnostic it finds rather than
/// stopping at the first; a program is produced only when there are none.
CompileResult compile(std::string_view text);
CompileResult compile(const ScriptSource& source);

/// Compiles a handler body (create/set/delete only, `self` allowed), as found
/// in the one-line handler summaries of the hierarchy document.
std::variant<std::vector<scene::HandlerStatement>, std::vector<CompileError>> compile_handler_body(
    std::string_view text);

enum class Status { Success, CompileFailed, RuntimeFailed };

std::string_view status_name(Status status);

using Diagnostic = std::variant<CompileError, RuntimeError>;

struct ExecutionOutcome {
  Status status = Status::Success;
  scene::Scene scene_after;
  std::vector<Diagnostic> errors;
  std::vector<std::string> log;  // canonical text of each executed statement

  [[nodiscard]] bool ok() const { return status == Status::Success; }
};

/// Applies statements in order to a copy of `scene`. The first runtime error
/// aborts, and scene_after is then the unmodified input.
ExecutionOutcome execute(const Program& program, const scene::Scene& scene);

/// compile + execute; compile failures also leave the scene untouched.
ExecutionOutcome compile_and_run(std::string_view text, const scene::Scene& scene);

nlohmann::ordered_json to_json(const CompileError& error);
nlohmann::ordered_json to_json(const RuntimeError& error);
nlohmann::ordered_json diagnostics_json(const std::vector<Diagnostic>& errors);
/// "line:col: phase error: message" lines, as fed back to the builder.
std::string format_diagnostics(const std::vector<CompileError>& errors);

}  // namespace sceneforge::script
