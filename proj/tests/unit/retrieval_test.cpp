#include "sceneforge/retrieval/retrieval.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <random>
#include <set>

namespace rt = sceneforge::retrieval;

namespace {

const std::string kClockDir = std::string(SCENEFORGE_DATA_DIR) + "/catalogs/clocks";

rt::Embedding lang(std::vector<double> v) { return {std::move(v), rt::Space::Language}; }
rt::Embedding vis(std::vector<double> v) { return {std::move(v), rt::Space::Visual}; }

// Independent reference: repeated max-selection instead of sorting.
struct OracleAnswer {
  std::string chosen;
  std::vector<std::string> top_k;
};

double plain_cos(const std::vector<double>& a, const std::vector<double>& b) {
  double dot = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::max(-1.0, std::min(1.0, dot / (std::sqrt(na) * std::sqrt(nb))));
}

OracleAnswer brute_force(const std::vector<std::string>& ids, const std::vector<std::vector<double>>& L,
                         const std::vector<std::vector<double>>& V, const std::vector<double>& q,
                         const std::vector<double>& t, std::size_t k) {
  std::vector<bool> taken(ids.size(), false);
  OracleAnswer out;
  for (std::size_t round = 0; round < std::min(k, ids.size()); ++round) {
    int best = -1;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (taken[i]) continue;
      if (best < 0) {
        best = static_cast<int>(i);
        continue;
      }
      const double si = plain_cos(q, L[i]), sb = plain_cos(q, L[best]);
      if (si > sb || (si == sb && ids[i] < ids[best])) best = static_cast<int>(i);
    }
    taken[best] = true;
    out.top_k.push_back(ids[best]);
  }
  double best_v = -2;
  for (const auto& id : out.top_k) {
    const std::size_t i = std::find(ids.begin(), ids.end(), id) - ids.begin();
    const double v = plain_cos(t, V[i]);
    if (v > best_v || (v == best_v && id < out.chosen)) {
      best_v = v;
      out.chosen = id;
    }
  }
  return out;
}

struct Fixture {
  rt::FixtureCatalog catalog;
  std::unique_ptr<rt::FixtureProviders> providers;
};

Fixture clock_fixture() {
  Fixture f{rt::load_fixture_catalog(kClockDir + "/catalog.json"), nullptr};
  f.providers = std::make_unique<rt::FixtureProviders>(f.catalog, rt::load_targets(kClockDir + "/targets.json"));
  return f;
}

class CountingProviders : public rt::ImageGenerator, public rt::VisualEmbedder, public rt::TextEmbedder {
 public:
  std::map<std::string, rt::Embedding> images;
  rt::Embedding query;
  std::string fail_stage;
  std::size_t calls = 0;

  std::string generate(const std::string& label) override {
    ++calls;
    if (fail_stage == "image_generation") throw std::runtime_error("generator offline");
    return "target:" + label;
  }
  rt::Embedding embed_image(const std::string& ref) override {
    ++calls;
    if (fail_stage == "visual_embedding") throw std::runtime_error("embedder offline");
    return images.at(ref);
  }
  rt::Embedding embed_text(const std::string&) override {
    ++calls;
    return query;
  }
  rt::Providers providers() { return {this, this, this}; }
};

}  // namespace

TEST(Cosine, HandValues) {
  EXPECT_DOUBLE_EQ(rt::cosine_similarity(lang({1, 0}), lang({1, 0})), 1.0);
  EXPECT_DOUBLE_EQ(rt::cosine_similarity(lang({1, 0}), lang({0, 1})), 0.0);
  EXPECT_NEAR(rt::cosine_similarity(lang({1, 1}), lang({1, 0})), 0.7071067, 1e-6);
  EXPECT_DOUBLE_EQ(rt::cosine_similarity(lang({1, 2, 3}), lang({-2, 0.5, 4})),
                   rt::cosine_similarity(lang({-2, 0.5, 4}), lang({1, 2, 3})));
}

TEST(Cosine, Errors) {
  EXPECT_THROW(rt::cosine_similarity(lang({1, 0}), vis({1, 0})), rt::SpaceMismatch);
  EXPECT_THROW(rt::cosine_similarity(lang({1, 0}), lang({1, 0, 0})), rt::DimMismatch);
  EXPECT_THROW(rt::cosine_similarity(lang({0, 0}), lang({1, 0})), rt::ZeroVector);
}

TEST(Retrieve, ClockFixtureMatchesPythonOracle) {
  // Frozen from tests/oracles/retrieval_oracle.py on data/catalogs/clocks.
  auto f = clock_fixture();
  const auto r = rt::retrieve("clock", f.catalog.catalog, f.providers->providers());
  EXPECT_EQ(r.chosen.id, "clock_01");
  EXPECT_EQ(r.language_top_k, (std::vector<std::string>{"clock_02", "clock_01", "clock_03", "clock_09", "clock_04"}));
  EXPECT_FALSE(r.cache_hit);
  EXPECT_EQ(std::find(r.language_top_k.begin(), r.language_top_k.end(), "clock_11"), r.language_top_k.end());

  rt::RetrievalOptions all;
  all.k = 12;
  EXPECT_EQ(rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), all).chosen.id, "clock_11");
}

TEST(Retrieve, TwoStageIgnoresBetterVisualOutsideTopK) {
  auto f = clock_fixture();
  const auto r = rt::retrieve("clock", f.catalog.catalog, f.providers->providers());
  // clock_11 has the best visual score overall but is outside the language top-5.
  double best_in_top = -2;
  for (const auto& s : r.scores) {
    if (std::find(r.language_top_k.begin(), r.language_top_k.end(), s.id) != r.language_top_k.end()) {
      ASSERT_TRUE(s.visual_score.has_value());
      best_in_top = std::max(best_in_top, *s.visual_score);
    }
  }
  for (const auto& s : r.scores) {
    if (s.id == r.chosen.id) EXPECT_EQ(*s.visual_score, best_in_top);
  }
  rt::RetrievalOptions visual_first;
  visual_first.order = rt::StageOrder::VisualFirst;
  const auto v = rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), visual_first);
  EXPECT_EQ(v.language_top_k.front(), "clock_11");
}

TEST(Retrieve, SingleEntryIsForced) {
  CountingProviders p;
  p.query = lang({1, 0});
  p.images["target:lamp"] = vis({0, 1});
  p.images["thumb"] = vis({1, 0});
  rt::Catalog c{"v", {{"only", "lamp", "thumb", "inline:create {{name}} shape=cube", lang({-1, 0.1})}}, ""};
  EXPECT_EQ(rt::retrieve("lamp", c, p.providers()).chosen.id, "only");
}

TEST(Retrieve, CacheHitMakesNoProviderCalls) {
  auto f = clock_fixture();
  rt::RetrievalCache cache;
  const auto first = rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), {}, &cache);
  const auto calls = f.providers->calls();
  const auto second = rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), {}, &cache);
  EXPECT_EQ(f.providers->calls(), calls);
  EXPECT_TRUE(second.cache_hit);
  EXPECT_EQ(second.chosen.id, first.chosen.id);
  EXPECT_EQ(second.language_top_k, first.language_top_k);
}

TEST(Retrieve, DiskCacheSurvivesProcessRestart) {
  const auto dir = std::filesystem::temp_directory_path() / "sceneforge_retrieval_cache";
  std::filesystem::remove_all(dir);
  auto f = clock_fixture();
  {
    rt::RetrievalCache cache(dir.string());
    rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), {}, &cache);
  }
  EXPECT_TRUE(std::filesystem::exists(dir / "v1"));
  rt::RetrievalCache fresh(dir.string());
  const auto calls = f.providers->calls();
  const auto r = rt::retrieve("clock", f.catalog.catalog, f.providers->providers(), {}, &fresh);
  EXPECT_TRUE(r.cache_hit);
  EXPECT_EQ(r.chosen.id, "clock_01");
  EXPECT_EQ(f.providers->calls(), calls);

  rt::Catalog bumped = f.catalog.catalog;
  bumped.version = "clocks-2";
  EXPECT_FALSE(rt::retrieve("clock", bumped, f.providers->providers(), {}, &fresh).cache_hit);
  std::filesystem::remove_all(dir);
}

TEST(Retrieve, ErrorsNameTheStage) {
  rt::Catalog empty{"v", {}, ""};
  CountingProviders p;
  EXPECT_THROW(rt::retrieve("x", empty, p.providers()), rt::EmptyCatalog);

  p.query = lang({1, 0});
  p.images["target:x"] = vis({1, 0});
  p.images["t"] = vis({1, 0});
  rt::Catalog c{"v", {{"a", "x", "t", "", lang({1, 0})}}, ""};
  p.fail_stage = "image_generation";
  try {
    rt::retrieve("x", c, p.providers());
    FAIL();
  } catch (const rt::ProviderFailure& e) {
    EXPECT_EQ(e.stage(), "image_generation");
  }
  p.fail_stage = "visual_embedding";
  try {
    rt::retrieve("x", c, p.providers());
    FAIL();
  } catch (const rt::ProviderFailure& e) {
    EXPECT_EQ(e.stage(), "visual_embedding");
  }
}

TEST(Retrieve, TiesBreakByAscendingId) {
  CountingProviders p;
  p.query = lang({1, 0});
  p.images["target:x"] = vis({1, 0});
  for (const char* t : {"ta", "tb", "tc"}) p.images[t] = vis({1, 1});
  rt::Catalog c{"v",
                {{"m", "x", "ta", "", lang({1, 0})}, {"b", "x", "tb", "", lang({1, 0})}, {"k", "x", "tc", "", lang({1, 0})}},
                ""};
  rt::RetrievalOptions o;
  o.k = 2;
  const auto r = rt::retrieve("x", c, p.providers(), o);
  EXPECT_EQ(r.language_top_k, (std::vector<std::string>{"b", "k"}));
  EXPECT_EQ(r.chosen.id, "b");
}

TEST(Retrieve, PayloadInlineAndFile) {
  auto f = clock_fixture();
  const auto r = rt::retrieve("clock", f.catalog.catalog, f.providers->providers());
  EXPECT_NE(rt::load_payload(r.chosen, f.catalog.catalog).find("create {{name}}"), std::string::npos);
}

TEST(Retrieve, HashingEmbedderIsDeterministicUnit) {
  rt::HashingTextEmbedder e(8);
  const auto a = e.embed_text("Wall Clock");
  EXPECT_EQ(a.values, e.embed_text("wall clock").values);
  double n = 0;
  for (double x : a.values) n += x * x;
  EXPECT_NEAR(n, 1.0, 1e-12);
}

TEST(RetrieveProperties, OracleEquivalenceOnRandomCatalogs) {
  std::mt19937_64 rng(1234);
  std::normal_distribution<double> g(0.0, 1.0);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = 1 + rng() % 50;
    const std::size_t dim = 4 + rng() % 13;
    const std::size_t k = 1 + rng() % 8;
    auto vec = [&] {
      std::vector<double> v(dim);
      for (auto& x : v) x = std::round(g(rng) * 4) / 4;  // coarse values force score ties
      if (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; })) v[0] = 1.0;
      return v;
    };
    CountingProviders p;
    p.query = lang(vec());
    const auto target = vec();
    p.images["target:obj"] = vis(target);
    rt::Catalog c{"r" + std::to_string(trial), {}, ""};
    std::vector<std::string> ids;
    std::vector<std::vector<double>> L, V;
    std::set<std::string> used;
    for (std::size_t i = 0; i < n; ++i) {
      std::string id;
      do id = "e" + std::to_string(rng() % 1000); while (!used.insert(id).second);
      ids.push_back(id);
      L.push_back(vec());
      V.push_back(vec());
      p.images["thumb:" + id] = vis(V.back());
      c.entries.push_back({id, "obj", "thumb:" + id, "", lang(L.back())});
    }
    rt::RetrievalOptions o;
    o.k = k;
    const auto got = rt::retrieve("obj", c, p.providers(), o);
    const auto want = brute_force(ids, L, V, p.query.values, target, k);
    ASSERT_EQ(got.chosen.id, want.chosen) << "trial " << trial;
    ASSERT_EQ(got.language_top_k, want.top_k) << "trial " << trial;
  }
}
