#include "sceneforge/script/script.hpp"

#include "checker.hpp"

#include <sstream>

namespace sceneforge::script {

std::string_view phase_name(Phase phase) {
  switch (phase) {
    case Phase::Lex: return "lex";
    case Phase::Parse: return "parse";
    case Phase::Check: return "check";
  }
  return "unknown";
}

std::string_view status_name(Status status) {
  switch (status) {
    case Status::Success: return "Success";
    case Status::CompileFailed: return "CompileFailed";
    case Status::RuntimeFailed: return "RuntimeFailed";
  }
  return "unknown";
}

CompileResult compile(std::string_view text) {
  detail::DiagnosticSink sink;
  const auto tokens = detail::lex(text, sink);
  const auto ast = detail::parse(tokens, sink);
  auto statements = detail::check_program(ast, sink);
  CompileResult result;
  if (sink.empty()) {
    result.program = Program{std::move(statements)};
  } else {
    result.errors = sink.take();
  }
  return result;
}

CompileResult compile(const ScriptSource& source) { return compile(source.text); }

std::variant<std::vector<scene::HandlerStatement>, std::vector<CompileError>> compile_handler_body(
    std::string_view text) {
  detail::DiagnosticSink sink;
  const auto tokens = detail::lex(text, sink);
  const auto ast = detail::parse(tokens, sink);
  auto body = detail::check_handler_body(ast, sink);
  if (!sink.empty()) return sink.take();
  return body;
}

ExecutionOutcome execute(const Program& program, const scene::Scene& scene) {
  ExecutionOutcome outcome{Status::Success, scene, {}, {}};
  scene::Scene working = scene;
  for (std::size_t i = 0; i < program.statements.size(); ++i) {
    const auto& command = program.statements[i].command;
    try {
      working.apply(command);
    } catch (const scene::SceneError& e) {
      outcome.status = Status::RuntimeFailed;
      outcome.errors.emplace_back(RuntimeError{i, e.kind(), e.what()});
      return outcome;
    }
    outcome.log.push_back(scene::to_script(command));
  }
  outcome.scene_after = std::move(working);
  return outcome;
}

ExecutionOutcome compile_and_run(std::string_view text, const scene::Scene& scene) {
  auto compiled = compile(text);
  if (!compiled.ok()) {
    ExecutionOutcome outcome{Status::CompileFailed, scene, {}, {}};
    for (auto& e : compiled.errors) outcome.errors.emplace_back(std::move(e));
    return outcome;
  }
  return execute(*compiled.program, scene);
}

nlohmann::ordered_json to_json(const CompileError& error) {
  return {{"phase", phase_name(error.phase)},
          {"line", error.line},
          {"column", error.column},
          {"message", error.message}};
}

nlohmann::ordered_json to_json(const RuntimeError& error) {
  return {{"statement_index", error.statement_index},
          {"kind", scene::error_kind_name(error.kind)},
          {"message", error.message}};
}

nlohmann::ordered_json diagnostics_json(const std::vector<Diagnostic>& errors) {
  auto out = nlohmann::ordered_json::array();
  for (const auto& d : errors) {
    std::visit([&](const auto& e) { out.push_back(to_json(e)); }, d);
  }
  return out;
}

std::string format_diagnostics(const std::vector<CompileError>& errors) {
  std::ostringstream out;
  for (const auto& e : errors) {
    out << e.line << ':' << e.column << ": " << phase_name(e.phase) << " error: " << e.message << '\n';
  }
  return out.str();
}

}  // namespace sceneforge::script
