#include "sceneforge/retrieval/retrieval.hpp"

#include "sceneforge/util/hash.hpp"
#include "sceneforge/util/text.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <mutex>
#include <numeric>

namespace sceneforge::retrieval {

std::string_view space_name(Space space) { return space == Space::Language ? "language" : "visual"; }

double cosine_similarity(const Embedding& a, const Embedding& b) {
  if (a.space != b.space) {
    throw SpaceMismatch("cannot compare a " + std::string(space_name(a.space)) + " embedding with a " +
                        std::string(space_name(b.space)) + " embedding");
  }
  if (a.dim() != b.dim()) {
    throw DimMismatch("embedding dimensions differ: " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.dim(); ++i) {
    dot += a.values[i] * b.values[i];
    na += a.values[i] * a.values[i];
    nb += b.values[i] * b.values[i];
  }
  if (na == 0.0 || nb == 0.0) throw ZeroVector("cosine similarity of a zero vector");
  return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

const CatalogEntry* Catalog::find(std::string_view id) const {
  for (const auto& e : entries) {
    if (e.id == id) return &e;
  }
  return nullptr;
}

// -- result serialization ----------------------------------------------------

nlohmann::ordered_json to_json(const RetrievalResult& result) {
  nlohmann::ordered_json j;
  j["chosen"] = result.chosen.id;
  j["label"] = result.chosen.label;
  j["payload_ref"] = result.chosen.payload_ref;
  j["language_top_k"] = result.language_top_k;
  auto& scores = j["scores"] = nlohmann::ordered_json::array();
  for (const auto& s : result.scores) {
    nlohmann::ordered_json row{{"id", s.id}, {"language_score", s.language_score}};
    row["visual_score"] = s.visual_score ? nlohmann::ordered_json(*s.visual_score) : nlohmann::ordered_json();
    scores.push_back(std::move(row));
  }
  j["cache_hit"] = result.cache_hit;
  return j;
}

RetrievalResult retrieval_result_from_json(const nlohmann::json& j, const Catalog& catalog) {
  RetrievalResult r;
  const auto* chosen = catalog.find(j.at("chosen").get<std::string>());
  if (chosen == nullptr) throw RetrievalError("cached result names an entry missing from the catalog");
  r.chosen = *chosen;
  r.language_top_k = j.at("language_top_k").get<std::vector<std::string>>();
  for (const auto& s : j.at("scores")) {
    EntryScore e{s.at("id").get<std::string>(), s.at("language_score").get<double>(), std::nullopt};
    if (!s.at("visual_score").is_null()) e.visual_score = s.at("visual_score").get<double>();
    r.scores.push_back(std::move(e));
  }
  r.cache_hit = j.value("cache_hit", false);
  return r;
}

// -- cache -------------------------------------------------------------------

std::string RetrievalCache::file_for(const std::string& label, const std::string& version) const {
  return (std::filesystem::path(*directory_) / "v1" / (util::sha256_hex(version + "\n" + label) + ".json")).string();
}

std::optional<RetrievalResult> RetrievalCache::lookup(const std::string& label, const Catalog& catalog) {
  const auto key = std::make_pair(label, catalog.version);
  {
    std::shared_lock lock(mutex_);
    if (auto it = memory_.find(key); it != memory_.end()) return it->second;
  }
  if (!directory_) return std::nullopt;
  const std::string path = file_for(label, catalog.version);
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto j = nlohmann::json::parse(util::read_file(path), nullptr, false);
  if (j.is_discarded() || j.value("label_query", std::string{}) != label ||
      j.value("catalog_version", std::string{}) != catalog.version) {
    return std::nullopt;
  }
  auto result = retrieval_result_from_json(j.at("result"), catalog);
  std::unique_lock lock(mutex_);
  memory_.emplace(key, result);
  return result;
}

void RetrievalCache::store(const std::string& label, const Catalog& catalog, const RetrievalResult& result) {
  std::unique_lock lock(mutex_);
  memory_.insert_or_assign(std::make_pair(label, catalog.version), result);
  if (directory_) {
    nlohmann::ordered_json j{{"label_query", label}, {"catalog_version", catalog.version}, {"result", to_json(result)}};
    util::write_file(file_for(label, catalog.version), j.dump(2) + "\n");
  }
}

std::size_t RetrievalCache::size() const {
  std::shared_lock lock(mutex_);
  return memory_.size();
}

// -- algorithm ---------------------------------------------------------------

namespace {

template <typename Fn>
auto stage(const char* name, Fn&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ProviderFailure&) {
    throw;
  } catch (const std::exception& e) {
    throw ProviderFailure(name, e.what());
  }
}

// Indices ranked by score descending, ties by ascending id.
std::vector<std::size_t> rank(const std::vector<double>& score, const std::vector<CatalogEntry>& entries,
                              const std::vector<std::size_t>& among) {
  std::vector<std::size_t> order = among;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (score[a] != score[b]) return score[a] > score[b];
    return entries[a].id < entries[b].id;
  });
  return order;
}

}  // namespace

RetrievalResult retrieve(const std::string& label, const Catalog& catalog, const Providers& providers,
                         const RetrievalOptions& options, RetrievalCache* cache) {
  if (catalog.entries.empty()) throw EmptyCatalog("cannot retrieve '" + label + "' from an empty catalog");
  if (options.k == 0) throw std::invalid_argument("retrieval k must be >= 1");
  if (cache != nullptr) {
    if (auto hit = cache->lookup(label, catalog)) {
      hit->cache_hit = true;
      return *hit;
    }
  }
  if (providers.images == nullptr || providers.visual == nullptr || providers.text == nullptr) {
    throw std::invalid_argument("retrieval needs image, visual and text providers");
  }

  const auto& entries = catalog.entries;
  const std::size_t n = entries.size();
  const std::string target_ref = stage("image_generation", [&] { return providers.images->generate(label); });
  const Embedding target = stage("visual_embedding", [&] { return providers.visual->embed_image(target_ref); });
  const Embedding query = stage("language_embedding", [&] { return providers.text->embed_text(label); });

  std::vector<double> language(n, 0.0);
  std::vector<std::optional<double>> visual(n);
  auto visual_score = [&](std::size_t i) {
    if (!visual[i]) {
      const Embedding thumb =
          stage("visual_embedding", [&] { return providers.visual->embed_image(entries[i].thumbnail_ref); });
      visual[i] = cosine_similarity(target, thumb);
    }
    return *visual[i];
  };
  for (std::size_t i = 0; i < n; ++i) {
    const Embedding e = entries[i].language_embedding
                            ? *entries[i].language_embedding
                            : stage("language_embedding", [&] { return providers.text->embed_text(entries[i].label); });
    language[i] = cosine_similarity(query, e);
  }

  std::vector<std::size_t> all(n);
  std::iota(all.begin(), all.end(), std::size_t{0});
  const std::size_t k = std::min(options.k, n);
  std::vector<double> first_score(n), second_score(n);
  if (options.order == StageOrder::LanguageFirst) {
    first_score = language;
  } else {
    for (std::size_t i = 0; i < n; ++i) first_score[i] = visual_score(i);
  }
  auto shortlist = rank(first_score, entries, all);
  shortlist.resize(k);
  for (std::size_t i : shortlist) {
    second_score[i] = options.order == StageOrder::LanguageFirst ? visual_score(i) : language[i];
  }
  const std::size_t chosen = rank(second_score, entries, shortlist).front();

  RetrievalResult result;
  result.chosen = entries[chosen];
  for (std::size_t i : shortlist) result.language_top_k.push_back(entries[i].id);
  for (std::size_t i = 0; i < n; ++i) result.scores.push_back({entries[i].id, language[i], visual[i]});
  if (cache != nullptr) cache->store(label, catalog, result);
  return result;
}

std::string load_payload(const CatalogEntry& entry, const Catalog& catalog) {
  constexpr std::string_view kInline = "inline:";
  if (entry.payload_ref.rfind(kInline, 0) == 0) return entry.payload_ref.substr(kInline.size());
  std::filesystem::path path(entry.payload_ref);
  if (path.is_relative() && !catalog.base_dir.empty()) path = std::filesystem::path(catalog.base_dir) / path;
  return util::read_file(path.string());
}

std::string asset_name(std::string_view label) {
  std::string out;
  bool gap = false;
  for (char c : label) {
    if (std::isalnum(static_cast<unsigned char>(c)) != 0) {
      if (gap && !out.empty()) out += '_';
      out += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      gap = false;
    } else {
      gap = true;
    }
  }
  if (out.empty()) return "asset";
  if (std::isdigit(static_cast<unsigned char>(out[0])) != 0) out.insert(0, "asset_");
  return out;
}

std::string instantiate_payload(std::string_view payload, std::string_view name) {
  constexpr std::string_view kPlaceholder = "{{name}}";
  std::string out;
  std::size_t pos = 0;
  while (true) {
    const auto hit = payload.find(kPlaceholder, pos);
    if (hit == std::string_view::npos) break;
    out.append(payload.substr(pos, hit - pos));
    out.append(name);
    pos = hit + kPlaceholder.size();
  }
  out.append(payload.substr(pos));
  return out;
}

}  // namespace sceneforge::retrieval
