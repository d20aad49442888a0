#pragma once

#include "sceneforge/script/script.hpp"

#include <functional>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sceneforge::persist {

struct SavedGeneration {
  std::string id;
  script::ScriptSource source;
  std::string summary;
  std::string created_at;
  std::string origin_session;
};

class UnknownId : public std::runtime_error {
 public:
  explicit UnknownId(const std::string& id) : std::runtime_error("no saved generation with id '" + id + "'") {}
};

/// save_generation refused a source that does not compile.
class GenerationRejected : public std::runtime_error {
 public:
  explicit GenerationRejected(std::vector<script::CompileError> errors);
  [[nodiscard]] const std::vector<script::CompileError>& errors() const { return errors_; }

 private:
  std::vector<script::CompileError> errors_;
};

/// Durable store of generated scripts:
///   <root>/<session>/index.jsonl           one {id, summary, created_at, origin_session} per line
///   <root>/<session>/<id>.scenescript      raw DSL text
/// Ids are "<session>-NNNN", numbered per session.
class GenerationStore {
 public:
  using Clock = std::function<std::string()>;

  explicit GenerationStore(std::string root, Clock now = {});

  std::string save(const script::ScriptSource& source, const std::string& summary, const std::string& session);
  [[nodiscard]] std::vector<SavedGeneration> list(const std::optional<std::string>& session = std::nullopt) const;
  [[nodiscard]] SavedGeneration get(const std::string& id) const;

  /// Re-executes the stored script against `scene`; the outcome is classified normally.
  [[nodiscard]] script::ExecutionOutcome reload(const std::string& id, const scene::Scene& scene) const;

  [[nodiscard]] const std::string& root() const { return root_; }

 private:
  [[nodiscard]] std::vector<SavedGeneration> read_session(const std::string& session) const;

  std::string root_;
  Clock now_;
  mutable std::mutex mutex_;
};

/// Session names become directory names: [A-Za-z0-9_-], at most 64 characters.
bool valid_session_name(const std::string& name);

}  // namespace sceneforge::persist
