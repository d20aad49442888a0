#pragma once

#include <nlohmann/json.hpp>

#include <atomic>
#include <cstddef>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sceneforge::retrieval {

enum class Space { Language, Visual };

std::string_view space_name(Space space);

struct Embedding {
  std::vector<double> values;
  Space space = Space::Language;

  [[nodiscard]] std::size_t dim() const { return values.size(); }
};

class RetrievalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};
class SpaceMismatch : public RetrievalError {
 public:
  using RetrievalError::RetrievalError;
};
class DimMismatch : public RetrievalError {
 public:
  using RetrievalError::RetrievalError;
};
class ZeroVector : public RetrievalError {
 public:
  using RetrievalError::RetrievalError;
};
class EmptyCatalog : public RetrievalError {
 public:
  using RetrievalError::RetrievalError;
};
/// A provider threw; stage is one of image_generation, visual_embedding, language_embedding.
class ProviderFailure : public RetrievalError {
 public:
  ProviderFailure(std::string stage, const std::string& cause)
      : RetrievalError("retrieval provider failed at stage '" + stage + "': " + cause), stage_(std::move(stage)) {}
  [[nodiscard]] const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

/// dot(a, b) / (|a| |b|), clamped to [-1, 1].
double cosine_similarity(const Embedding& a, const Embedding& b);

struct CatalogEntry {
  std::string id;
  std::string label;
  std::string thumbnail_ref;  // resolved by the VisualEmbedder
  std::string payload_ref;    // "inline:<dsl>" or a path relative to the catalog file
  // Precomputed label embedding; when absent the TextEmbedder embeds `label`.
  std::optional<Embedding> language_embedding;
};

struct Catalog {
  std::string version;
  std::vector<CatalogEntry> entries;
  std::string base_dir;  // for relative payload_ref paths

  [[nodiscard]] const CatalogEntry* find(std::string_view id) const;
};

/// Returns an image reference for a label (text-to-image in a live setup).
class ImageGenerator {
 public:
  virtual ~ImageGenerator() = default;
  virtual std::string generate(const std::string& label) = 0;
};

/// Embeds an image reference (generated target or catalog thumbnail) in the visual space.
class VisualEmbedder {
 public:
  virtual ~VisualEmbedder() = default;
  virtual Embedding embed_image(const std::string& image_ref) = 0;
};

class TextEmbedder {
 public:
  virtual ~TextEmbedder() = default;
  virtual Embedding embed_text(const std::string& text) = 0;
};

struct Providers {
  ImageGenerator* images = nullptr;
  VisualEmbedder* visual = nullptr;
  TextEmbedder* text = nullptr;
};

enum class StageOrder {
  LanguageFirst,  // shortlist by language similarity, pick by visual similarity
  VisualFirst,    // shortlist by visual similarity, pick by language similarity
};

struct RetrievalOptions {
  std::size_t k = 5;
  StageOrder order = StageOrder::LanguageFirst;
};

struct EntryScore {
  std::string id;
  double language_score = 0.0;
  std::optional<double> visual_score;  // computed for every entry in visual-first mode, else the shortlist only
};

struct RetrievalResult {
  CatalogEntry chosen;
  // The first-stage shortlist in rank order (the language top-k by default).
  std::vector<std::string> language_top_k;
  std::vector<EntryScore> scores;  // catalog order
  bool cache_hit = false;
};

nlohmann::ordered_json to_json(const RetrievalResult& result);
RetrievalResult retrieval_result_from_json(const nlohmann::json& j, const Catalog& catalog);

/// Results keyed by (label, catalog version). In memory, plus an optional
/// directory layout `<dir>/v1/<sha256(version "\n" label)>.json`.
class RetrievalCache {
 public:
  RetrievalCache() = default;
  explicit RetrievalCache(std::string directory) : directory_(std::move(directory)) {}

  std::optional<RetrievalResult> lookup(const std::string& label, const Catalog& catalog);
  void store(const std::string& label, const Catalog& catalog, const RetrievalResult& result);
  [[nodiscard]] std::size_t size() const;

 private:
  [[nodiscard]] std::string file_for(const std::string& label, const std::string& version) const;

  std::optional<std::string> directory_;
  mutable std::shared_mutex mutex_;
  std::map<std::pair<std::string, std::string>, RetrievalResult> memory_;
};

RetrievalResult retrieve(const std::string& label, const Catalog& catalog, const Providers& providers,
                         const RetrievalOptions& options = {}, RetrievalCache* cache = nullptr);

/// DSL text of the chosen asset's payload.
std::string load_payload(const CatalogEntry& entry, const Catalog& catalog);

/// Entity-name stem for a label: lowercase, runs of other characters become '_'.
std::string asset_name(std::string_view label);
/// Replaces every "{{name}}" in a payload.
std::string instantiate_payload(std::string_view payload, std::string_view name);

// -- fixture providers -------------------------------------------------------

/// Catalog file: an array of {id, label, language_embedding, visual_embedding,
/// payload_ref[, thumbnail_ref]}, or {"version", "entries": [...]}. Thumbnails
/// default to "embedding:<id>". Without a version, the file's SHA-256 is used.
struct FixtureCatalog {
  Catalog catalog;
  std::map<std::string, Embedding> thumbnails;  // thumbnail_ref -> visual embedding
};

FixtureCatalog load_fixture_catalog(const std::string& path);

struct TargetRecord {
  std::string label;
  Embedding target_visual;
  std::optional<Embedding> label_language;
};

/// Targets file: an array of {label, target_visual_embedding[, label_language_embedding]}.
std::vector<TargetRecord> load_targets(const std::string& path);

/// Character-trigram hashing embedder, L2-normalized. Deterministic stand-in
/// for a language model.
class HashingTextEmbedder : public TextEmbedder {
 public:
  explicit HashingTextEmbedder(std::size_t dim = 8) : dim_(dim) {}
  Embedding embed_text(const std::string& text) override;

 private:
  std::size_t dim_;
};

/// Offline providers backed by a fixture catalog and targets file.
class FixtureProviders : public ImageGenerator, public VisualEmbedder, public TextEmbedder {
 public:
  FixtureProviders(const FixtureCatalog& catalog, std::vector<TargetRecord> targets);

  std::string generate(const std::string& label) override;  // "target:<label>"
  Embedding embed_image(const std::string& image_ref) override;
  Embedding embed_text(const std::string& text) override;

  [[nodiscard]] Providers providers() { return {this, this, this}; }
  [[nodiscard]] std::size_t calls() const { return calls_.load(); }

 private:
  std::map<std::string, Embedding> images_;
  std::map<std::string, Embedding> texts_;
  HashingTextEmbedder fallback_;
  std::atomic<std::size_t> calls_{0};
};

}  // namespace sceneforge::retrieval
