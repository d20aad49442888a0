#include "sceneforge/pipeline/replies.hpp"

#include "sceneforge/util/text.hpp"

#include <cctype>

namespace sceneforge::pipeline {

namespace {

using util::istarts_with;
using util::trim;

std::string_view trim_chars(std::string_view text, std::string_view chars) {
  while (!text.empty() && chars.find(text.front()) != std::string_view::npos) text.remove_prefix(1);
  while (!text.empty() && chars.find(text.back()) != std::string_view::npos) text.remove_suffix(1);
  return text;
}

// Leading markdown decoration: bullets, emphasis, headings.
std::string_view strip_decoration(std::string_view line) {
  line = trim(line);
  while (!line.empty() && (line.front() == '*' || line.front() == '#' || line.front() == '-' || line.front() == '>')) {
    line.remove_prefix(1);
    line = trim(line);
  }
  return line;
}

bool word_boundary(std::string_view text, std::size_t at) {
  return at >= text.size() || std::isalnum(static_cast<unsigned char>(text[at])) == 0;
}

std::string join_rest(const std::vector<std::string>& lines, std::size_t from, std::string head) {
  std::string out = std::move(head);
  for (std::size_t i = from; i < lines.size(); ++i) {
    if (!out.empty()) out += '\n';
    out += lines[i];
  }
  return std::string(trim(out));
}

}  // namespace

std::variant<Plan, ClarifyingQuestion> parse_plan_reply(std::string_view reply) {
  const auto lines = util::split_lines(reply);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first < lines.size()) {
    const auto head = strip_decoration(lines[first]);
    if (istarts_with(head, "QUESTION:")) {
      auto question = join_rest(lines, first + 1, std::string(trim(head.substr(9))));
      if (question.empty()) throw MalformedPlan("planner asked an empty question");
      return ClarifyingQuestion{std::move(question)};
    }
  }

  std::vector<std::string> steps;
  for (const auto& raw : lines) {
    const auto line = trim(raw);
    std::size_t digits = 0;
    while (digits < line.size() && std::isdigit(static_cast<unsigned char>(line[digits])) != 0) ++digits;
    const bool numbered = digits > 0 && digits < line.size() && (line[digits] == '.' || line[digits] == ')') &&
                          !trim(line.substr(digits + 1)).empty();
    if (numbered) {
      steps.emplace_back(trim_chars(trim(line.substr(digits + 1)), "*"));
    } else if (!steps.empty() && !line.empty() && !raw.empty() && std::isspace(static_cast<unsigned char>(raw[0])) != 0) {
      steps.back() += " ";
      steps.back() += line;
    }
  }
  if (steps.empty()) throw MalformedPlan("planner reply is neither a numbered list nor a QUESTION line");

  Plan plan;
  for (std::size_t i = 0; i < steps.size(); ++i) plan.push_back({steps[i], i + 1, steps.size()});
  return plan;
}

std::optional<Verdict> parse_verdict_reply(std::string_view reply) {
  const auto lines = util::split_lines(reply);
  std::size_t first = 0;
  while (first < lines.size() && trim(lines[first]).empty()) ++first;
  if (first == lines.size()) return std::nullopt;

  auto head = strip_decoration(lines[first]);
  if (istarts_with(head, "verdict") && word_boundary(head, 7)) head = trim_chars(head.substr(7), " \t:*-");
  bool passed = false;
  std::size_t word = 0;
  if (istarts_with(head, "PASS") && word_boundary(head, 4)) {
    passed = true;
    word = 4;
  } else if (istarts_with(head, "FAIL") && word_boundary(head, 4)) {
    word = 4;
  } else {
    return std::nullopt;
  }
  if (passed) return Verdict::pass(VerdictSource::ModelCritique);

  auto rest = std::string(trim_chars(head.substr(word), " \t:*-.,"));
  auto suggestion = join_rest(lines, first + 1, rest);
  if (istarts_with(suggestion, "suggestion:")) suggestion = std::string(trim(std::string_view(suggestion).substr(11)));
  return Verdict::fail(std::move(suggestion), VerdictSource::ModelCritique);
}

AnalyzerReply parse_analyzer_reply(std::string_view reply) {
  AnalyzerReply out;
  std::vector<std::string> summary;
  for (const auto& raw : util::split_lines(reply)) {
    const auto line = strip_decoration(raw);
    std::size_t colon = std::string_view::npos;
    if (istarts_with(line, "relevant")) colon = line.find(':');
    if (colon != std::string_view::npos && colon <= 20) {
      std::vector<std::string> names;
      const auto list = trim(line.substr(colon + 1));
      if (util::to_lower(list) != "none") {
        for (const auto& part : util::split(list, ',')) {
          const auto name = trim_chars(trim(part), " \t'\"`.");
          if (!name.empty()) names.emplace_back(name);
        }
      }
      out.relevant = std::move(names);
      continue;
    }
    auto text = trim(raw);
    if (istarts_with(text, "summary:")) text = trim(text.substr(8));
    summary.emplace_back(text);
  }
  out.summary = std::string(trim(util::join(summary, "\n")));
  return out;
}

std::vector<SkillChoice> parse_skill_reply(std::string_view reply) {
  std::vector<std::string> tokens;
  std::string current;
  int depth = 0;
  for (char c : reply) {
    if (c == '(') ++depth;
    if (c == ')' && depth > 0) --depth;
    if (depth == 0 && (c == '\n' || c == ',')) {
      tokens.push_back(std::move(current));
      current.clear();
    } else {
      current += c;
    }
  }
  tokens.push_back(std::move(current));

  std::vector<SkillChoice> out;
  for (const auto& raw : tokens) {
    auto token = trim_chars(strip_decoration(raw), " \t`'\".");
    if (token.empty() || util::to_lower(token) == "none") continue;
    SkillChoice choice;
    const auto open = token.find('(');
    if (open != std::string_view::npos) {
      auto inner = token.substr(open + 1);
      if (const auto close = inner.rfind(')'); close != std::string_view::npos) inner = inner.substr(0, close);
      for (auto& part : util::split(inner, ',')) {
        const auto arg = trim_chars(trim(part), " \t'\"`");
        if (!arg.empty()) choice.arguments.emplace_back(arg);
      }
      token = trim_chars(token.substr(0, open), " \t`'\"");
    }
    choice.id = util::to_lower(token);
    if (!choice.id.empty()) out.push_back(std::move(choice));
  }
  return out;
}

std::string extract_code_block(std::string_view reply) {
  const auto lines = util::split_lines(reply);
  std::size_t open = 0;
  while (open < lines.size() && trim(lines[open]).rfind("```", 0) != 0) ++open;
  if (open == lines.size()) throw NoCodeBlock();
  std::string body;
  for (std::size_t i = open + 1; i < lines.size(); ++i) {
    if (trim(lines[i]).rfind("```", 0) == 0) break;
    body += lines[i];
    body += '\n';
  }
  if (trim(body).empty()) throw NoCodeBlock();
  return body;
}

}  // namespace sceneforge::pipeline
