#pragma once

#include <cstddef>
#include <string>
#include <vector>

namespace sceneforge::pipeline {

inline constexpr std::size_t kMaxSkillSummary = 200;

struct Skill {
  std::string id;
  std::string summary;  // one line, shown during selection
  std::string details;  // usage with positive and negative examples, shown to the Builder
  std::size_t token_cost = 0;
};

/// Registration-ordered skill registry.
class SkillLibrary {
 public:
  /// Throws DuplicateSkillId, or invalid_argument for an empty id or an
  /// over-long or multi-line summary. Fills token_cost from the details.
  void register_skill(Skill skill);

  [[nodiscard]] const Skill* find(const std::string& id) const;
  [[nodiscard]] const std::vector<Skill>& skills() const { return skills_; }
  [[nodiscard]] bool empty() const { return skills_.empty(); }

  /// "- id: summary" per skill.
  [[nodiscard]] std::string summaries() const;

  /// JSON array of {id, summary, details}; details may be a string or an
  /// array of lines.
  static SkillLibrary load(const std::string& path);

 private:
  std::vector<Skill> skills_;
};

}  // namespace sceneforge::pipeline
