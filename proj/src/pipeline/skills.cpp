#include "sceneforge/pipeline/skills.hpp"

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/pipeline/types.hpp"
#include "sceneforge/util/text.hpp"

#include <nlohmann/json.hpp>

#include <stdexcept>

namespace sceneforge::pipeline {

void SkillLibrary::register_skill(Skill skill) {
  if (skill.id.empty()) throw std::invalid_argument("skill id is empty");
  if (skill.summary.size() > kMaxSkillSummary) {
    throw std::invalid_argument("summary of skill '" + skill.id + "' exceeds " + std::to_string(kMaxSkillSummary) +
                                " characters");
  }
  if (skill.summary.find('\n') != std::string::npos) {
    throw std::invalid_argument("summary of skill '" + skill.id + "' spans several lines");
  }
  if (find(skill.id) != nullptr) throw DuplicateSkillId(skill.id);
  skill.token_cost = llm::estimate_tokens(skill.details);
  skills_.push_back(std::move(skill));
}

const Skill* SkillLibrary::find(const std::string& id) const {
  for (const auto& s : skills_) {
    if (s.id == id) return &s;
  }
  return nullptr;
}

std::string SkillLibrary::summaries() const {
  std::string out;
  for (const auto& s : skills_) out += "- " + s.id + ": " + s.summary + "\n";
  return out;
}

SkillLibrary SkillLibrary::load(const std::string& path) {
  const auto j = nlohmann::json::parse(util::read_file(path));
  if (!j.is_array()) throw std::runtime_error(path + ": expected a JSON array of skills");
  SkillLibrary library;
  for (const auto& r : j) {
    Skill s;
    s.id = r.at("id").get<std::string>();
    s.summary = r.at("summary").get<std::string>();
    const auto& details = r.at("details");
    if (details.is_array()) {
      for (const auto& line : details) s.details += line.get<std::string>() + "\n";
    } else {
      s.details = details.get<std::string>();
    }
    library.register_skill(std::move(s));
  }
  return library;
}

}  // namespace sceneforge::pipeline
