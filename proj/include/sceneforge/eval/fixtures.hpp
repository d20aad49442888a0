#pragma once

#include "sceneforge/llm/provider.hpp"

#include <map>
#include <string>
#include <vector>

namespace sceneforge::eval {

/// Authored source of a replay fixture: the config and dataset to run, and the
/// replies each module returns in call order. Recording runs the real pipeline
/// over a scripted provider and keeps every request/reply pair.
struct FixtureSpec {
  std::string name;
  std::string config;   // preset name or config file
  std::string dataset;  // dataset file
  std::map<std::string, std::vector<std::string>> replies;  // module tag -> replies
  std::vector<std::string> answers;                          // clarifying-question answers, in order
  std::string output;                                        // replay file
  bool allow_failures = true;  // false: any failed step aborts recording
};

/// Relative paths resolve against the spec file.
FixtureSpec load_fixture_spec(const std::string& path);

/// Throws std::runtime_error when replies are left over or run out.
std::vector<llm::ReplayRecord> record_fixture(const FixtureSpec& spec);

/// *.json under `dir`, sorted.
std::vector<std::string> list_fixture_specs(const std::string& dir);

}  // namespace sceneforge::eval
