#include "sceneforge/retrieval/retrieval.hpp"

#include "sceneforge/util/hash.hpp"
#include "sceneforge/util/text.hpp"

#include <cmath>
#include <filesystem>

namespace sceneforge::retrieval {

namespace {

Embedding embedding(const nlohmann::json& j, Space space) { return {j.get<std::vector<double>>(), space}; }

}  // namespace

FixtureCatalog load_fixture_catalog(const std::string& path) {
  const std::string text = util::read_file(path);
  const auto j = nlohmann::json::parse(text);
  const nlohmann::json& records = j.is_array() ? j : j.at("entries");
  FixtureCatalog out;
  out.catalog.version = j.is_object() && j.contains("version") ? j.at("version").get<std::string>()
                                                               : util::sha256_hex(text);
  out.catalog.base_dir = std::filesystem::path(path).parent_path().string();
  for (const auto& r : records) {
    CatalogEntry e;
    e.id = r.at("id").get<std::string>();
    e.label = r.at("label").get<std::string>();
    e.payload_ref = r.value("payload_ref", std::string{});
    e.thumbnail_ref = r.value("thumbnail_ref", "embedding:" + e.id);
    if (r.contains("language_embedding")) e.language_embedding = embedding(r.at("language_embedding"), Space::Language);
    if (r.contains("visual_embedding")) out.thumbnails[e.thumbnail_ref] = embedding(r.at("visual_embedding"), Space::Visual);
    if (out.catalog.find(e.id) != nullptr) throw RetrievalError("duplicate catalog id '" + e.id + "' in " + path);
    out.catalog.entries.push_back(std::move(e));
  }
  return out;
}

std::vector<TargetRecord> load_targets(const std::string& path) {
  const auto j = nlohmann::json::parse(util::read_file(path));
  std::vector<TargetRecord> out;
  for (const auto& r : j) {
    TargetRecord t;
    t.label = r.at("label").get<std::string>();
    t.target_visual = embedding(r.at("target_visual_embedding"), Space::Visual);
    if (r.contains("label_language_embedding")) {
      t.label_language = embedding(r.at("label_language_embedding"), Space::Language);
    }
    out.push_back(std::move(t));
  }
  return out;
}

Embedding HashingTextEmbedder::embed_text(const std::string& text) {
  std::vector<double> v(dim_, 0.0);
  const std::string padded = "  " + util::to_lower(text) + "  ";
  for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
    const std::string digest = util::sha256_hex(padded.substr(i, 3));
    const std::size_t bucket = std::stoul(digest.substr(0, 8), nullptr, 16) % dim_;
    const double sign = (std::stoul(digest.substr(8, 2), nullptr, 16) & 1) != 0 ? 1.0 : -1.0;
    v[bucket] += sign;
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  if (norm == 0.0) {
    v[0] = 1.0;
  } else {
    for (double& x : v) x /= std::sqrt(norm);
  }
  return {std::move(v), Space::Language};
}

FixtureProviders::FixtureProviders(const FixtureCatalog& catalog, std::vector<TargetRecord> targets)
    : images_(catalog.thumbnails), fallback_([&] {
        for (const auto& e : catalog.catalog.entries) {
          if (e.language_embedding) return e.language_embedding->dim();
        }
        return std::size_t{8};
      }()) {
  for (auto& t : targets) {
    images_["target:" + t.label] = std::move(t.target_visual);
    if (t.label_language) texts_[t.label] = std::move(*t.label_language);
  }
}

std::string FixtureProviders::generate(const std::string& label) {
  ++calls_;
  const std::string ref = "target:" + label;
  if (images_.count(ref) == 0) throw RetrievalError("no fixture target image for label '" + label + "'");
  return ref;
}

Embedding FixtureProviders::embed_image(const std::string& image_ref) {
  ++calls_;
  auto it = images_.find(image_ref);
  if (it == images_.end()) throw RetrievalError("no fixture visual embedding for '" + image_ref + "'");
  return it->second;
}

Embedding FixtureProviders::embed_text(const std::string& text) {
  ++calls_;
  if (auto it = texts_.find(text); it != texts_.end()) return it->second;
  return fallback_.embed_text(text);
}

}  // namespace sceneforge::retrieval
