#pragma once

// Wire formats of the module replies. The shipped metaprompts ask for these
// shapes; the parsers tolerate surrounding prose where it is unambiguous.

#include "sceneforge/pipeline/types.hpp"

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sceneforge::pipeline {

/// Numbered steps ("1. ..." or "1) ...") or a first line "QUESTION: ...".
/// Throws MalformedPlan otherwise.
std::variant<Plan, ClarifyingQuestion> parse_plan_reply(std::string_view reply);

/// First non-empty line is PASS or FAIL (an optional "Verdict:" prefix is
/// accepted); the remainder is the suggestion. nullopt when neither.
std::optional<Verdict> parse_verdict_reply(std::string_view reply);

struct AnalyzerReply {
  std::string summary;
  std::optional<std::vector<std::string>> relevant;  // nullopt: no "Relevant:" line
};

/// Free text plus one line "Relevant: A, B" (or "Relevant: none").
AnalyzerReply parse_analyzer_reply(std::string_view reply);

struct SkillChoice {
  std::string id;
  std::vector<std::string> arguments;  // "object-retriever(clock, chair)"
};

/// Ids separated by newlines or commas; "none" selects nothing.
std::vector<SkillChoice> parse_skill_reply(std::string_view reply);

/// Body of the first ``` fence; an unterminated fence runs to the end.
/// Throws NoCodeBlock when there is no fence or the body is blank.
std::string extract_code_block(std::string_view reply);

}  // namespace sceneforge::pipeline
