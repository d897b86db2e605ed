#ifndef PILAR_RECOMMENDER_H_
#define PILAR_RECOMMENDER_H_

#include <array>
#include <chrono>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pilar/domain.h"

namespace pilar {

inline constexpr std::size_t kNumFeatures = 4;

enum FeatureIndex : std::size_t {
  kIngredientCoverage = 0,
  kDietCompatibility = 1,
  kGoalAlignment = 2,
  kCalorieFit = 3,
};

std::string_view FeatureName(std::size_t index);
std::optional<std::size_t> FindFeature(std::string_view name);
const std::vector<std::string>& FeatureNames();

// Each component in [0,1].
struct FeatureVector {
  std::array<double, kNumFeatures> values{};

  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  bool operator==(const FeatureVector&) const = default;
};

struct ScoringWeights {
  // match, diet, goal, calorie
  std::array<double, kNumFeatures> values{0.4, 0.25, 0.2, 0.15};

  static ScoringWeights Default() { return {}; }
  // Empty when every weight is >= 0 and the sum is 1 within 1e-9.
  std::vector<std::string> Problems() const;
  bool operator==(const ScoringWeights&) const = default;
};

double Score(const FeatureVector& features, const ScoringWeights& weights);

struct ExclusionReason {
  enum class Kind { kAllergen, kDietConflict };
  Kind kind = Kind::kAllergen;
  // Offending ingredient id or tag.
  std::string cause;
  // Ingredient that carries `cause`, when `cause` is a tag.
  std::string ingredient;
  std::string message;

  bool operator==(const ExclusionReason&) const = default;
};

struct ScoredRecipe {
  Recipe recipe;
  FeatureVector features;
  double score = 0;
  // 1-based; 0 for excluded recipes.
  int rank = 0;
  std::optional<ExclusionReason> excluded;

  bool operator==(const ScoredRecipe&) const = default;
};

struct RankResult {
  std::vector<ScoredRecipe> ranked;
  std::vector<ScoredRecipe> excluded;
  std::size_t passing = 0;
};

// Immutable recipe collection with precomputed effective tags.
class Corpus {
 public:
  Corpus(std::vector<Recipe> recipes, const Vocabulary& vocab);

  const std::vector<Recipe>& recipes() const { return recipes_; }
  std::size_t size() const { return recipes_.size(); }
  bool empty() const { return recipes_.empty(); }
  const Recipe* Find(std::string_view id) const;
  std::optional<std::size_t> IndexOf(std::string_view id) const;
  const TagSet& EffectiveTags(std::size_t index) const { return effective_tags_[index]; }

 private:
  std::vector<Recipe> recipes_;
  std::vector<TagSet> effective_tags_;
  std::map<std::string, std::size_t, std::less<>> index_;
};

// Read-mostly holder: readers take a snapshot, reloads swap it atomically.
class CorpusStore {
 public:
  explicit CorpusStore(std::shared_ptr<const Corpus> corpus) : corpus_(std::move(corpus)) {}

  std::shared_ptr<const Corpus> Snapshot() const {
    std::lock_guard lock(mu_);
    return corpus_;
  }
  void Swap(std::shared_ptr<const Corpus> next) {
    std::lock_guard lock(mu_);
    corpus_ = std::move(next);
  }

 private:
  mutable std::mutex mu_;
  std::shared_ptr<const Corpus> corpus_;
};

enum class OutcomeStatus { kIncluded, kBelowCutoff, kExcluded };
std::string_view OutcomeStatusName(OutcomeStatus s);

// Where one recipe lands for a given (profile, detected, k).
struct Outcome {
  OutcomeStatus status = OutcomeStatus::kExcluded;
  // 1-based position among passing recipes; 0 when excluded.
  int position = 0;
  double score = 0;
  std::optional<ExclusionReason> reason;

  bool operator==(const Outcome&) const = default;
};

class Recommender {
 public:
  Recommender(std::shared_ptr<const Vocabulary> vocab, ScoringWeights weights);

  const Vocabulary& vocab() const { return *vocab_; }
  const ScoringWeights& weights() const { return weights_; }

  // Fails when any ingredient or effective tag is a profile allergen, or an
  // effective tag conflicts with the profile diet.
  std::optional<ExclusionReason> HardFilter(const Recipe& recipe, const UserProfile& profile) const;

  FeatureVector Features(const Recipe& recipe, const UserProfile& profile,
                         const std::set<IngredientId>& detected) const;

  // Top-k by score desc, then ingredient coverage desc, then recipe id.
  // Throws Error(kEmptyCorpus) / Error(kInvalidArgument) for k < 1.
  RankResult Rank(const Corpus& corpus, const UserProfile& profile,
                  const std::set<IngredientId>& detected, int k) const;

  // Same ordering as Rank, computed for a single recipe in O(corpus).
  Outcome Evaluate(const Corpus& corpus, const UserProfile& profile,
                   const std::set<IngredientId>& detected, std::string_view recipe_id,
                   int k) const;

  std::optional<ExclusionReason> HardFilterWithTags(const Recipe& recipe, const TagSet& tags,
                                                    const UserProfile& profile) const;

 private:
  std::shared_ptr<const Vocabulary> vocab_;
  ScoringWeights weights_;
};

// True when a should be listed before b.
bool RanksBefore(double score_a, double coverage_a, std::string_view id_a, double score_b,
                 double coverage_b, std::string_view id_b);

// Rank contract against an Edamam-shaped remote search API:
// GET <endpoint>?ingredients=a,b&diet=..&health=..&calories=..
// Response `{"hits": [{"recipe": {...}}]}`; hits are mapped to recipes and ranked
// locally so every safety property of Rank still holds.
class RemoteRecommender {
 public:
  RemoteRecommender(std::string endpoint, std::shared_ptr<const Vocabulary> vocab,
                    ScoringWeights weights,
                    std::chrono::milliseconds timeout = std::chrono::seconds(10));

  RankResult Rank(const UserProfile& profile, const std::set<IngredientId>& detected, int k) const;

  // Request target built from the profile and detections (path + query).
  std::string BuildRequestTarget(const UserProfile& profile,
                                 const std::set<IngredientId>& detected) const;

  std::vector<Recipe> ParseHits(const nlohmann::json& body) const;

 private:
  std::string endpoint_;
  std::shared_ptr<const Vocabulary> vocab_;
  Recommender local_;
  std::chrono::milliseconds timeout_;
};

nlohmann::json ToJson(const FeatureVector& f);
nlohmann::json ToJson(const ExclusionReason& r);
nlohmann::json ToJson(const ScoredRecipe& s);
nlohmann::json ToJson(const Outcome& o);
FeatureVector FeatureVectorFromJson(const nlohmann::json& j);
ExclusionReason ExclusionReasonFromJson(const nlohmann::json& j);
ScoredRecipe ScoredRecipeFromJson(const nlohmann::json& j);

}  // namespace pilar

#endif  // PILAR_RECOMMENDER_H_
