#ifndef PILAR_CONTEXT_H_
#define PILAR_CONTEXT_H_

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/domain.h"
#include "pilar/intent.h"
#include "pilar/recommender.h"

namespace pilar {

struct RecipeSummary {
  std::string id;
  std::string name;
  TagSet tags;
  int calories = 0;
  std::vector<IngredientId> ingredients;
};

struct ProfileSummary {
  std::string diet;
  TagSet health_goals;
};

// What the recommender decided for the recipe being explained.
struct DecisionSummary {
  OutcomeStatus status = OutcomeStatus::kIncluded;
  int position = 0;
  int k = 0;
  double score = 0;
  FeatureVector features;
  std::optional<ExclusionReason> exclusion;
  // Feature with the largest attribution; empty for excluded recipes.
  std::string top_feature;
};

// Everything an explanation engine may see about one question. Built as a
// value copy so later session changes never leak in.
struct ExplanationContext {
  std::set<IngredientId> detected;
  RecipeSummary recipe;
  ProfileSummary profile;
  std::string query;
  Intent intent;
  DecisionSummary decision;
};

// The last completed recommendation of a session.
struct RecommendationState {
  UserProfile profile;
  std::set<IngredientId> detected;
  RankResult result;
  int k = 3;
};

// Throws Error(kUnknownRecipeInSession) unless recipe_id is ranked or excluded.
ExplanationContext BuildContext(const RecommendationState& state, const std::string& recipe_id,
                                const std::string& query, const Intent& intent,
                                const Recommender& rec);

// Raw inputs for the prompt slots, shared by live contexts and ICL examples.
struct SlotInputs {
  std::string diet;
  TagSet health_goals;
  std::set<IngredientId> ingredients;
  std::string recipe_name;
  TagSet recipe_tags;
  std::string question;
};

// Rendered slot text. Empty goal or tag lists render as "none".
struct PromptSlots {
  std::string dietary_preference;
  std::string health_goal;
  std::string ingredient_list;
  std::string recipe_name;
  std::string recipe_tags;
  std::string user_question;
};

SlotInputs SlotInputsOf(const ExplanationContext& ctx);
// Throws Error(kMissingSlot) naming the slot, e.g. "<ingredient list>".
PromptSlots RenderSlots(const SlotInputs& in, const Vocabulary& vocab);

nlohmann::json ToJson(const ExplanationContext& ctx);

}  // namespace pilar

#endif  // PILAR_CONTEXT_H_
