#include "sceneforge/persist/generation_store.hpp"

#include "sceneforge/util/text.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace sceneforge::persist {

namespace fs = std::filesystem;

GenerationRejected::GenerationRejected(std::vector<script::CompileError> errors)
    : std::runtime_error("generation does not compile:\n" + script::format_diagnostics(errors)),
      errors_(std::move(errors)) {}

bool valid_session_name(const std::string& name) {
  if (name.empty() || name.size() > 64) return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) != 0 || c == '_' || c == '-';
  });
}

GenerationStore::GenerationStore(std::string root, Clock now)
    : root_(std::move(root)), now_(now ? std::move(now) : Clock(util::utc_timestamp)) {
  fs::create_directories(root_);
}

std::vector<SavedGeneration> GenerationStore::read_session(const std::string& session) const {
  std::vector<SavedGeneration> out;
  const fs::path dir = fs::path(root_) / session;
  const fs::path index = dir / "index.jsonl";
  if (!fs::exists(index)) return out;
  for (const auto& line : util::split_lines(util::read_file(index.string()))) {
    if (util::trim(line).empty()) continue;
    const auto j = nlohmann::json::parse(line);
    SavedGeneration g;
    g.id = j.at("id").get<std::string>();
    g.summary = j.at("summary").get<std::string>();
    g.created_at = j.at("created_at").get<std::string>();
    g.origin_session = j.at("origin_session").get<std::string>();
    g.source = {g.id, util::read_file((dir / (g.id + ".scenescript")).string()), script::Origin::Saved};
    out.push_back(std::move(g));
  }
  return out;
}

std::string GenerationStore::save(const script::ScriptSource& source, const std::string& summary,
                                  const std::string& session) {
  if (!valid_session_name(session)) throw std::invalid_argument("invalid session name '" + session + "'");
  auto compiled = script::compile(source);
  if (!compiled.ok()) throw GenerationRejected(std::move(compiled.errors));

  std::lock_guard lock(mutex_);
  const fs::path dir = fs::path(root_) / session;
  fs::create_directories(dir);
  const auto existing = read_session(session);
  char number[16];
  std::snprintf(number, sizeof number, "%04zu", existing.size() + 1);
  const std::string id = session + "-" + number;

  util::write_file((dir / (id + ".scenescript")).string(), source.text);
  nlohmann::ordered_json record{{"id", id}, {"summary", summary}, {"created_at", now_()}, {"origin_session", session}};
  std::ofstream index(dir / "index.jsonl", std::ios::app | std::ios::binary);
  index << record.dump() << '\n';
  index.flush();
  if (!index) throw std::runtime_error("failed to append to " + (dir / "index.jsonl").string());
  return id;
}

std::vector<SavedGeneration> GenerationStore::list(const std::optional<std::string>& session) const {
  std::lock_guard lock(mutex_);
  if (session) return read_session(*session);
  std::vector<std::string> sessions;
  for (const auto& entry : fs::directory_iterator(root_)) {
    if (entry.is_directory()) sessions.push_back(entry.path().filename().string());
  }
  std::sort(sessions.begin(), sessions.end());
  std::vector<SavedGeneration> out;
  for (const auto& s : sessions) {
    auto part = read_session(s);
    std::move(part.begin(), part.end(), std::back_inserter(out));
  }
  return out;
}

SavedGeneration GenerationStore::get(const std::string& id) const {
  const auto dash = id.rfind('-');
  if (dash == std::string::npos || dash == 0) throw UnknownId(id);
  const std::string session = id.substr(0, dash);
  if (!valid_session_name(session)) throw UnknownId(id);
  std::lock_guard lock(mutex_);
  for (auto& g : read_session(session)) {
    if (g.id == id) return g;
  }
  throw UnknownId(id);
}

script::ExecutionOutcome GenerationStore::reload(const std::string& id, const scene::Scene& scene) const {
  return script::compile_and_run(get(id).source.text, scene);
}

}  // namespace sceneforge::persist
