#include "sceneforge/pipeline/memory.hpp"

#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <charconv>
#include <stdexcept>

namespace sceneforge::pipeline {

MemoryMode MemoryMode::limited(std::size_t n) {
  if (n == 0) throw std::invalid_argument("limited memory needs N >= 1");
  return {Kind::Limited, n};
}

MemoryMode MemoryMode::parse(std::string_view text) {
  const auto t = util::to_lower(util::trim(text));
  if (t == "full") return full();
  if (t == "memoryless" || t == "memory-less" || t == "none") return memoryless();
  if (t == "limited") return limited(1);
  if (t.rfind("limited(", 0) == 0 && t.back() == ')') {
    const auto digits = std::string_view(t).substr(8, t.size() - 9);
    std::size_t n = 0;
    const auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
    if (ec == std::errc() && ptr == digits.data() + digits.size()) return limited(n);
  }
  throw std::invalid_argument("unknown memory mode '" + std::string(text) + "'");
}

std::size_t MemoryMode::visible(std::size_t available) const {
  switch (kind_) {
    case Kind::Full: return available;
    case Kind::Limited: return std::min(n_, available);
    case Kind::Memoryless: return 0;
  }
  return 0;
}

std::string MemoryMode::to_string() const {
  switch (kind_) {
    case Kind::Full: return "full";
    case Kind::Limited: return "limited(" + std::to_string(n_) + ")";
    case Kind::Memoryless: return "memoryless";
  }
  return "memoryless";
}

std::map<Module, MemoryMode> default_memory_modes() {
  return {{Module::Planner, MemoryMode::memoryless()},
          {Module::SceneAnalyzer, MemoryMode::memoryless()},
          {Module::SkillLibrary, MemoryMode::memoryless()},
          {Module::Builder, MemoryMode::limited(1)},
          {Module::Inspector, MemoryMode::memoryless()}};
}

ModuleMemory::ModuleMemory(std::map<Module, MemoryMode> modes) : modes_(std::move(modes)) {
  for (Module m : kModules) modes_.try_emplace(m, default_memory_modes().at(m));
}

void ModuleMemory::record(Module module, Exchange exchange) { store_[module].push_back(std::move(exchange)); }

std::vector<Exchange> ModuleMemory::window(Module module) const {
  const auto it = store_.find(module);
  if (it == store_.end()) return {};
  const auto& all = it->second;
  const auto keep = mode(module).visible(all.size());
  return {all.end() - static_cast<std::ptrdiff_t>(keep), all.end()};
}

std::vector<llm::Message> ModuleMemory::messages(Module module) const {
  std::vector<llm::Message> out;
  for (const auto& e : window(module)) {
    out.push_back({llm::Role::User, std::string(kEpisodePrefix) + e.request});
    out.push_back({llm::Role::Assistant, e.reply});
  }
  return out;
}

void ModuleMemory::trim(Module module) {
  auto it = store_.find(module);
  if (it == store_.end()) return;
  auto& all = it->second;
  const auto keep = mode(module).visible(all.size());
  all.erase(all.begin(), all.end() - static_cast<std::ptrdiff_t>(keep));
}

void ModuleMemory::trim_all() {
  for (Module m : kModules) trim(m);
}

void ModuleMemory::clear() { store_.clear(); }

std::size_t ModuleMemory::stored(Module module) const {
  const auto it = store_.find(module);
  return it == store_.end() ? 0 : it->second.size();
}

const MemoryMode& ModuleMemory::mode(Module module) const { return modes_.at(module); }

std::size_t count_episodes(const std::vector<llm::Message>& messages) {
  return static_cast<std::size_t>(std::count_if(messages.begin(), messages.end(), [](const llm::Message& m) {
    return m.role == llm::Role::User && m.content.rfind(kEpisodePrefix, 0) == 0;
  }));
}

}  // namespace sceneforge::pipeline
