#ifndef PILAR_TESTS_SUPPORT_H_
#define PILAR_TESTS_SUPPORT_H_

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <memory>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/attribution.h"
#include "pilar/counterfactual.h"
#include "pilar/domain.h"
#include "pilar/recommender.h"

namespace pilar::testing {

inline std::filesystem::path SourceDir() { return PILAR_SOURCE_DIR; }
inline std::filesystem::path DataDir() { return SourceDir() / "data"; }
inline std::filesystem::path GoldenDir() { return SourceDir() / "tests" / "golden"; }

inline std::string ReadFile(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline std::shared_ptr<const Vocabulary> SharedVocab() {
  static auto vocab = std::make_shared<const Vocabulary>(Vocabulary::Load(DataDir() / "vocabulary.json"));
  return vocab;
}

inline const std::vector<Recipe>& SharedRecipes() {
  static const auto recipes = LoadCorpus(DataDir() / "corpus.json", *SharedVocab());
  return recipes;
}

inline UserProfile LoadProfile(const std::string& file) {
  return ReadJsonFile(DataDir() / "profiles" / file).get<UserProfile>();
}

// Fresh scratch directory under the system temp dir.
inline std::filesystem::path TempDir(const std::string& tag) {
  static std::mt19937_64 rng(std::random_device{}());
  auto dir = std::filesystem::temp_directory_path() /
             ("pilar_" + tag + "_" + std::to_string(rng() % 1000000000));
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}

// Seeded generator with the handful of draws the property tests need.
class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  int Int(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng_); }
  std::size_t Index(std::size_t n) { return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng_); }
  double Real(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng_); }
  bool Coin(double p = 0.5) { return std::bernoulli_distribution(p)(rng_); }

  template <typename T>
  const T& Pick(const std::vector<T>& v) {
    return v[Index(v.size())];
  }

  template <typename T>
  std::vector<T> Sample(const std::vector<T>& v, std::size_t n) {
    std::vector<T> copy = v;
    std::shuffle(copy.begin(), copy.end(), rng_);
    copy.resize(std::min(n, copy.size()));
    return copy;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

inline std::vector<std::string> IngredientIds(const Vocabulary& vocab) {
  std::vector<std::string> ids;
  for (const auto& i : vocab.ingredients()) ids.push_back(i.id);
  return ids;
}

// Random recipe over the vocabulary. Diet labels are only attached when the
// ingredients allow them, so the result always validates.
inline Recipe RandomRecipe(Gen& g, const Vocabulary& vocab, const std::string& id,
                           std::size_t max_ingredients = 6) {
  Recipe r;
  r.id = id;
  r.title = "Recipe " + id;
  r.ingredients = g.Sample(IngredientIds(vocab), static_cast<std::size_t>(g.Int(1, static_cast<int>(max_ingredients))));
  for (const auto& t : vocab.tags()) {
    if (g.Coin(0.25)) r.tags.insert(t);
  }
  for (const auto& d : vocab.diets()) r.tags.erase(d);
  const TagSet effective = vocab.EffectiveTags(r);
  for (const auto& d : vocab.diets()) {
    if (!vocab.IsTag(d) || !g.Coin(0.5)) continue;
    bool ok = true;
    for (const auto& c : vocab.DietConflicts(d)) ok = ok && !effective.count(c);
    if (ok) r.tags.insert(d);
  }
  r.calories_per_serving = g.Int(80, 1200);
  return r;
}

inline std::vector<Recipe> RandomRecipes(Gen& g, const Vocabulary& vocab, std::size_t n,
                                         std::size_t max_ingredients = 6) {
  std::vector<Recipe> out;
  for (std::size_t i = 0; i < n; ++i) {
    out.push_back(RandomRecipe(g, vocab, "r" + std::to_string(i), max_ingredients));
  }
  return out;
}

inline UserProfile RandomProfile(Gen& g, const Vocabulary& vocab) {
  UserProfile p;
  p.id = "u" + std::to_string(g.Int(0, 9999));
  p.diet = g.Pick(vocab.diets());
  for (const auto& goal : g.Sample(vocab.health_goals(), static_cast<std::size_t>(g.Int(0, 3)))) {
    p.health_goals.insert(goal);
  }
  const int allergens = g.Int(0, 3);
  for (int i = 0; i < allergens; ++i) {
    if (g.Coin(0.7)) {
      p.allergens.insert(g.Pick(IngredientIds(vocab)));
    } else {
      p.allergens.insert(g.Pick(vocab.tags()));
    }
  }
  p.calorie_target = g.Int(200, 1000);
  return p;
}

inline std::set<IngredientId> RandomDetected(Gen& g, const Vocabulary& vocab, std::size_t max_n) {
  std::set<IngredientId> out;
  for (const auto& id : g.Sample(IngredientIds(vocab), static_cast<std::size_t>(g.Int(0, static_cast<int>(max_n))))) {
    out.insert(id);
  }
  return out;
}

// A tiny closed vocabulary so exhaustive edit enumeration stays small.
inline Vocabulary SmallVocabulary() {
  nlohmann::json j = {
      {"version", "test"},
      {"diets", {"omnivore", "vegetarian"}},
      {"health_goals", {"high_fiber", "low_fat"}},
      {"tags", {"vegetarian", "high_fiber", "low_fat", "meat", "dairy"}},
      {"diet_conflicts", {{"omnivore", nlohmann::json::array()}, {"vegetarian", {"meat"}}}},
      {"ingredients",
       {{{"id", "tomato"}, {"display_name", "tomato"}, {"tags", nlohmann::json::array()}},
        {{"id", "beef"}, {"display_name", "beef"}, {"tags", {"meat"}}},
        {{"id", "cheese"}, {"display_name", "cheese"}, {"tags", {"dairy"}}},
        {{"id", "rice"}, {"display_name", "rice"}, {"tags", nlohmann::json::array()}},
        {{"id", "peanut"}, {"display_name", "peanut"}, {"tags", nlohmann::json::array()}}}},
      {"synonyms", nlohmann::json::object()},
  };
  return Vocabulary::FromJson(j);
}

// Shapley value as the average marginal contribution over every ordering.
inline std::vector<double> PermutationShapley(const InstanceScoreFn& f, const std::vector<double>& x,
                                              const std::vector<double>& baseline) {
  const std::size_t n = x.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> phi(n, 0.0);
  std::size_t count = 0;
  do {
    std::vector<double> z = baseline;
    double prev = f(z);
    for (std::size_t i : order) {
      z[i] = x[i];
      const double cur = f(z);
      phi[i] += cur - prev;
      prev = cur;
    }
    ++count;
  } while (std::next_permutation(order.begin(), order.end()));
  for (auto& p : phi) p /= static_cast<double>(count);
  return phi;
}

struct ExhaustiveResult {
  // Smallest number of edits reaching the target, if any within max_edits.
  std::optional<std::size_t> min_edits;
  std::size_t states = 0;
};

// Depth-first enumeration of every edit sequence up to max_edits, each
// outcome checked with a full Rank call.
inline ExhaustiveResult ExhaustiveMinEdits(const Recommender& rec, const Corpus& corpus,
                                           const CounterfactualInstance& inst,
                                           const CounterfactualTarget& target,
                                           std::size_t max_edits, std::size_t state_cap,
                                           int step_percent = 25) {
  ExhaustiveResult result;
  const Recipe& recipe = *corpus.Find(inst.recipe_id);
  std::vector<Edit> path;
  std::function<void()> walk = [&]() {
    UserProfile p = inst.profile;
    std::set<IngredientId> d = inst.detected;
    ApplyEdits(path, step_percent, p, d);
    ++result.states;
    if (target.SatisfiedBy(ObserveOutcome(rec, corpus, p, d, inst.recipe_id, inst.k))) {
      if (!result.min_edits || path.size() < *result.min_edits) result.min_edits = path.size();
      return;
    }
    if (path.size() >= max_edits || result.states > state_cap) return;
    if (result.min_edits && path.size() + 1 >= *result.min_edits) return;
    int steps = 0;
    for (const auto& e : path) {
      if (e.kind == EditKind::kCalorieDown) --steps;
      if (e.kind == EditKind::kCalorieUp) ++steps;
    }
    for (const auto& e : EditSpace(p, d, recipe, rec.vocab(), inst.profile.calorie_target, steps,
                                   step_percent)) {
      path.push_back(e);
      walk();
      path.pop_back();
    }
  };
  walk();
  return result;
}

}  // namespace pilar::testing

#endif  // PILAR_TESTS_SUPPORT_H_
