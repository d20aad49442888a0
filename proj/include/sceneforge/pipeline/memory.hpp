#pragma once

#include "sceneforge/llm/provider.hpp"
#include "sceneforge/pipeline/types.hpp"

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::pipeline {

class MemoryMode {
 public:
  enum class Kind { Full, Limited, Memoryless };

  static MemoryMode full() { return {Kind::Full, 0}; }
  static MemoryMode limited(std::size_t n);  // n >= 1
  static MemoryMode memoryless() { return {Kind::Memoryless, 0}; }
  /// "full", "memoryless", "limited(N)" or "limited" (N = 1).
  static MemoryMode parse(std::string_view text);

  [[nodiscard]] Kind kind() const { return kind_; }
  [[nodiscard]] std::size_t n() const { return n_; }
  /// How many of `available` episodes the module may see.
  [[nodiscard]] std::size_t visible(std::size_t available) const;
  [[nodiscard]] std::string to_string() const;

  friend bool operator==(const MemoryMode&, const MemoryMode&) = default;

 private:
  MemoryMode(Kind kind, std::size_t n) : kind_(kind), n_(n) {}

  Kind kind_;
  std::size_t n_;
};

/// Planner, Scene Analyzer, Inspector and Skill Library remember nothing; the
/// Builder keeps its most recent episode.
std::map<Module, MemoryMode> default_memory_modes();

/// One module's input and output for a single instruction.
struct Exchange {
  std::string request;
  std::string reply;
};

/// User half of a replayed episode starts with this; the Assistant half is the
/// module's reply. Nothing else in a context carries the prefix.
inline constexpr std::string_view kEpisodePrefix = "Earlier request: ";

/// Per-module episode stores. Metaprompts are not stored here and so survive
/// every trim.
class ModuleMemory {
 public:
  explicit ModuleMemory(std::map<Module, MemoryMode> modes = default_memory_modes());

  void record(Module module, Exchange exchange);
  /// The newest episodes the module's mode admits, oldest first.
  [[nodiscard]] std::vector<Exchange> window(Module module) const;
  /// window() rendered as alternating User/Assistant messages.
  [[nodiscard]] std::vector<llm::Message> messages(Module module) const;

  /// Drops everything the mode would hide from now on.
  void trim(Module module);
  void trim_all();
  void clear();

  [[nodiscard]] std::size_t stored(Module module) const;
  [[nodiscard]] const MemoryMode& mode(Module module) const;

 private:
  std::map<Module, MemoryMode> modes_;
  std::map<Module, std::deque<Exchange>> store_;
};

/// Number of replayed episodes in a context.
std::size_t count_episodes(const std::vector<llm::Message>& messages);

}  // namespace sceneforge::pipeline
