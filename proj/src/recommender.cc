#include "pilar/recommender.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

double Coverage(const Recipe& recipe, const std::set<IngredientId>& detected) {
  if (recipe.ingredients.empty()) return 0.0;
  std::size_t hit = 0;
  for (const auto& id : recipe.ingredients) hit += detected.count(id);
  return static_cast<double>(hit) / static_cast<double>(recipe.ingredients.size());
}

}  // namespace

const std::vector<std::string>& FeatureNames() {
  static const std::vector<std::string> kNames = {"ingredient_coverage", "diet_compatibility",
                                                  "goal_alignment", "calorie_fit"};
  return kNames;
}

std::string_view FeatureName(std::size_t index) { return FeatureNames().at(index); }

std::optional<std::size_t> FindFeature(std::string_view name) {
  const auto& names = FeatureNames();
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) return std::nullopt;
  return static_cast<std::size_t>(it - names.begin());
}

std::vector<std::string> ScoringWeights::Problems() const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    if (!(values[i] >= 0.0) || !std::isfinite(values[i])) {
      out.push_back(fmt::format("weight for {} must be >= 0", FeatureName(i)));
    }
  }
  double sum = std::accumulate(values.begin(), values.end(), 0.0);
  if (!(std::abs(sum - 1.0) <= 1e-9)) {
    out.push_back(fmt::format("weights must sum to 1 (got {})", sum));
  }
  return out;
}

double Score(const FeatureVector& features, const ScoringWeights& weights) {
  double s = 0.0;
  for (std::size_t i = 0; i < kNumFeatures; ++i) s += features[i] * weights.values[i];
  return std::clamp(s, 0.0, 1.0);
}

Corpus::Corpus(std::vector<Recipe> recipes, const Vocabulary& vocab)
    : recipes_(std::move(recipes)) {
  effective_tags_.reserve(recipes_.size());
  for (std::size_t i = 0; i < recipes_.size(); ++i) {
    effective_tags_.push_back(vocab.EffectiveTags(recipes_[i]));
    if (!index_.emplace(recipes_[i].id, i).second) {
      throw Error(ErrorCode::kDataFile, fmt::format("duplicate recipe id {}", recipes_[i].id));
    }
  }
}

const Recipe* Corpus::Find(std::string_view id) const {
  auto idx = IndexOf(id);
  return idx ? &recipes_[*idx] : nullptr;
}

std::optional<std::size_t> Corpus::IndexOf(std::string_view id) const {
  auto it = index_.find(id);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::string_view OutcomeStatusName(OutcomeStatus s) {
  switch (s) {
    case OutcomeStatus::kIncluded: return "included";
    case OutcomeStatus::kBelowCutoff: return "below_cutoff";
    case OutcomeStatus::kExcluded: return "excluded";
  }
  return "excluded";
}

bool RanksBefore(double score_a, double coverage_a, std::string_view id_a, double score_b,
                 double coverage_b, std::string_view id_b) {
  if (score_a != score_b) return score_a > score_b;
  if (coverage_a != coverage_b) return coverage_a > coverage_b;
  return id_a < id_b;
}

Recommender::Recommender(std::shared_ptr<const Vocabulary> vocab, ScoringWeights weights)
    : vocab_(std::move(vocab)), weights_(weights) {
  auto problems = weights_.Problems();
  if (!problems.empty()) throw Error(ErrorCode::kInvalidArgument, problems.front());
}

std::optional<ExclusionReason> Recommender::HardFilter(const Recipe& recipe,
                                                       const UserProfile& profile) const {
  return HardFilterWithTags(recipe, vocab_->EffectiveTags(recipe), profile);
}

std::optional<ExclusionReason> Recommender::HardFilterWithTags(const Recipe& recipe,
                                                               const TagSet& tags,
                                                               const UserProfile& profile) const {
  auto carrier = [&](const std::string& tag) -> std::string {
    for (const auto& id : recipe.ingredients) {
      const Ingredient* ing = vocab_->FindIngredient(id);
      if (ing && ing->tags.count(tag)) return id;
    }
    return {};
  };
  if (!profile.allergens.empty()) {
    for (const auto& id : recipe.ingredients) {
      if (profile.allergens.count(id)) {
        return ExclusionReason{ExclusionReason::Kind::kAllergen, id, id,
                               fmt::format("contains {}, which is on your allergen list", id)};
      }
    }
    for (const auto& tag : tags) {
      if (profile.allergens.count(tag)) {
        std::string ing = carrier(tag);
        return ExclusionReason{
            ExclusionReason::Kind::kAllergen, tag, ing,
            ing.empty() ? fmt::format("is tagged {}, which is on your allergen list", tag)
                        : fmt::format("contains {} ({}), which is on your allergen list", ing,
                                      tag)};
      }
    }
  }
  for (const auto& conflict : vocab_->DietConflicts(profile.diet)) {
    if (tags.count(conflict)) {
      return ExclusionReason{ExclusionReason::Kind::kDietConflict, conflict, carrier(conflict),
                             fmt::format("{} conflicts with {}", conflict, profile.diet)};
    }
  }
  return std::nullopt;
}

FeatureVector Recommender::Features(const Recipe& recipe, const UserProfile& profile,
                                    const std::set<IngredientId>& detected) const {
  FeatureVector f;
  f[kIngredientCoverage] = Coverage(recipe, detected);
  f[kDietCompatibility] =
      (profile.diet == "omnivore" || recipe.tags.count(profile.diet)) ? 1.0 : 0.0;
  std::size_t goals_hit = 0;
  for (const auto& g : profile.health_goals) goals_hit += recipe.tags.count(g);
  f[kGoalAlignment] = static_cast<double>(goals_hit) /
                      static_cast<double>(std::max<std::size_t>(1, profile.health_goals.size()));
  const double target = static_cast<double>(profile.calorie_target);
  f[kCalorieFit] =
      target > 0 ? std::max(0.0, 1.0 - std::abs(recipe.calories_per_serving - target) / target)
                 : 0.0;
  return f;
}

RankResult Recommender::Rank(const Corpus& corpus, const UserProfile& profile,
                             const std::set<IngredientId>& detected, int k) const {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus is empty");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  RankResult result;
  std::vector<ScoredRecipe> passing;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const Recipe& r = corpus.recipes()[i];
    ScoredRecipe s;
    s.recipe = r;
    if (auto reason = HardFilterWithTags(r, corpus.EffectiveTags(i), profile)) {
      s.excluded = std::move(reason);
      result.excluded.push_back(std::move(s));
      continue;
    }
    s.features = Features(r, profile, detected);
    s.score = Score(s.features, weights_);
    passing.push_back(std::move(s));
  }
  result.passing = passing.size();
  const std::size_t take = std::min<std::size_t>(static_cast<std::size_t>(k), passing.size());
  auto before = [](const ScoredRecipe& a, const ScoredRecipe& b) {
    return RanksBefore(a.score, a.features[kIngredientCoverage], a.recipe.id, b.score,
                       b.features[kIngredientCoverage], b.recipe.id);
  };
  std::partial_sort(passing.begin(), passing.begin() + static_cast<std::ptrdiff_t>(take),
                    passing.end(), before);
  passing.resize(take);
  for (std::size_t i = 0; i < passing.size(); ++i) passing[i].rank = static_cast<int>(i + 1);
  result.ranked = std::move(passing);
  std::sort(result.excluded.begin(), result.excluded.end(),
            [](const ScoredRecipe& a, const ScoredRecipe& b) { return a.recipe.id < b.recipe.id; });
  return result;
}

Outcome Recommender::Evaluate(const Corpus& corpus, const UserProfile& profile,
                              const std::set<IngredientId>& detected, std::string_view recipe_id,
                              int k) const {
  if (corpus.empty()) throw Error(ErrorCode::kEmptyCorpus, "corpus is empty");
  if (k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  auto idx = corpus.IndexOf(recipe_id);
  if (!idx) {
    throw Error(ErrorCode::kUnknownRecipe, fmt::format("unknown recipe {}", recipe_id),
                {{"recipe_id", recipe_id}});
  }
  const Recipe& target = corpus.recipes()[*idx];
  Outcome out;
  if (auto reason = HardFilterWithTags(target, corpus.EffectiveTags(*idx), profile)) {
    out.status = OutcomeStatus::kExcluded;
    out.reason = std::move(reason);
    return out;
  }
  const FeatureVector tf = Features(target, profile, detected);
  out.score = Score(tf, weights_);
  int ahead = 0;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    if (i == *idx) continue;
    const Recipe& r = corpus.recipes()[i];
    if (HardFilterWithTags(r, corpus.EffectiveTags(i), profile)) continue;
    FeatureVector f = Features(r, profile, detected);
    if (RanksBefore(Score(f, weights_), f[kIngredientCoverage], r.id, out.score,
                    tf[kIngredientCoverage], target.id)) {
      ++ahead;
    }
  }
  out.position = ahead + 1;
  out.status = out.position <= k ? OutcomeStatus::kIncluded : OutcomeStatus::kBelowCutoff;
  return out;
}

nlohmann::json ToJson(const FeatureVector& f) {
  nlohmann::json j = nlohmann::json::object();
  for (std::size_t i = 0; i < kNumFeatures; ++i) j[std::string(FeatureName(i))] = f[i];
  return j;
}

FeatureVector FeatureVectorFromJson(const nlohmann::json& j) {
  FeatureVector f;
  for (std::size_t i = 0; i < kNumFeatures; ++i) f[i] = j.at(std::string(FeatureName(i)));
  return f;
}

nlohmann::json ToJson(const ExclusionReason& r) {
  return {{"kind", r.kind == ExclusionReason::Kind::kAllergen ? "allergen" : "diet_conflict"},
          {"cause", r.cause},
          {"ingredient", r.ingredient},
          {"message", r.message}};
}

ExclusionReason ExclusionReasonFromJson(const nlohmann::json& j) {
  ExclusionReason r;
  r.kind = j.at("kind") == "allergen" ? ExclusionReason::Kind::kAllergen
                                      : ExclusionReason::Kind::kDietConflict;
  r.cause = j.at("cause");
  r.ingredient = j.value("ingredient", "");
  r.message = j.at("message");
  return r;
}

nlohmann::json ToJson(const ScoredRecipe& s) {
  nlohmann::json j = {{"recipe", s.recipe}};
  if (s.excluded) {
    j["excluded"] = ToJson(*s.excluded);
  } else {
    j["features"] = ToJson(s.features);
    j["score"] = s.score;
    j["rank"] = s.rank;
  }
  return j;
}

ScoredRecipe ScoredRecipeFromJson(const nlohmann::json& j) {
  ScoredRecipe s;
  s.recipe = j.at("recipe").get<Recipe>();
  if (j.contains("excluded")) {
    s.excluded = ExclusionReasonFromJson(j.at("excluded"));
  } else {
    s.features = FeatureVectorFromJson(j.at("features"));
    s.score = j.at("score");
    s.rank = j.at("rank");
  }
  return s;
}

nlohmann::json ToJson(const Outcome& o) {
  nlohmann::json j = {{"status", OutcomeStatusName(o.status)}};
  if (o.status != OutcomeStatus::kExcluded) {
    j["position"] = o.position;
    j["score"] = o.score;
  }
  if (o.reason) j["reason"] = ToJson(*o.reason);
  return j;
}

}  // namespace pilar
