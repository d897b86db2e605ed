#include "pilar/context.h"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pilar/attribution.h"
#include "pilar/error.h"

namespace pilar {

namespace {

RecipeSummary Summarize(const Recipe& r) {
  return {r.id, r.title, r.tags, r.calories_per_serving, r.ingredients};
}

std::string JoinHumanized(const TagSet& items, std::string_view sep) {
  if (items.empty()) return "none";
  std::vector<std::string> parts;
  for (const auto& t : items) parts.push_back(Humanize(t));
  return fmt::format("{}", fmt::join(parts, sep));
}

[[noreturn]] void ThrowMissing(std::string_view slot) {
  throw Error(ErrorCode::kMissingSlot, fmt::format("missing slot {}", slot), {{"slot", slot}});
}

}  // namespace

ExplanationContext BuildContext(const RecommendationState& state, const std::string& recipe_id,
                                const std::string& query, const Intent& intent,
                                const Recommender& rec) {
  ExplanationContext ctx;
  ctx.detected = state.detected;
  ctx.profile = {state.profile.diet, state.profile.health_goals};
  ctx.query = query;
  ctx.intent = intent;
  ctx.decision.k = state.k;

  for (const auto& s : state.result.ranked) {
    if (s.recipe.id != recipe_id) continue;
    ctx.recipe = Summarize(s.recipe);
    ctx.decision.status = OutcomeStatus::kIncluded;
    ctx.decision.position = s.rank;
    ctx.decision.score = s.score;
    ctx.decision.features = s.features;
    const auto attributions = AttributeRecipeScore(s.features, rec.weights());
    std::size_t best = 0;
    for (std::size_t i = 1; i < attributions.size(); ++i) {
      if (attributions[i].phi > attributions[best].phi) best = i;
    }
    ctx.decision.top_feature = attributions[best].feature;
    return ctx;
  }
  for (const auto& s : state.result.excluded) {
    if (s.recipe.id != recipe_id) continue;
    ctx.recipe = Summarize(s.recipe);
    ctx.decision.status = OutcomeStatus::kExcluded;
    ctx.decision.exclusion = s.excluded;
    ctx.decision.features = rec.Features(s.recipe, state.profile, state.detected);
    ctx.decision.score = Score(ctx.decision.features, rec.weights());
    return ctx;
  }
  throw Error(ErrorCode::kUnknownRecipeInSession,
              fmt::format("recipe {} is not in the session's last recommendation", recipe_id),
              {{"recipe_id", recipe_id}});
}

SlotInputs SlotInputsOf(const ExplanationContext& ctx) {
  return {ctx.profile.diet,      ctx.profile.health_goals, ctx.detected,
          ctx.recipe.name,       ctx.recipe.tags,          ctx.query};
}

PromptSlots RenderSlots(const SlotInputs& in, const Vocabulary& vocab) {
  if (in.diet.empty()) ThrowMissing("<dietary preference>");
  if (in.ingredients.empty()) ThrowMissing("<ingredient list>");
  if (in.recipe_name.empty()) ThrowMissing("<recipe name>");
  if (in.question.empty()) ThrowMissing("<user question>");
  PromptSlots out;
  out.dietary_preference = Humanize(in.diet);
  out.health_goal = JoinHumanized(in.health_goals, " and ");
  std::vector<std::string> names;
  for (const auto& id : in.ingredients) names.push_back(vocab.DisplayName(id));
  std::sort(names.begin(), names.end());
  out.ingredient_list = fmt::format("{}", fmt::join(names, ", "));
  out.recipe_name = in.recipe_name;
  out.recipe_tags = JoinHumanized(in.recipe_tags, ", ");
  out.user_question = in.question;
  return out;
}

nlohmann::json ToJson(const ExplanationContext& ctx) {
  nlohmann::json decision = {{"status", OutcomeStatusName(ctx.decision.status)},
                             {"position", ctx.decision.position},
                             {"k", ctx.decision.k},
                             {"score", ctx.decision.score},
                             {"features", ToJson(ctx.decision.features)},
                             {"top_feature", ctx.decision.top_feature}};
  if (ctx.decision.exclusion) decision["exclusion"] = ToJson(*ctx.decision.exclusion);
  return {{"detected", ctx.detected},
          {"recipe",
           {{"id", ctx.recipe.id},
            {"name", ctx.recipe.name},
            {"tags", ctx.recipe.tags},
            {"calories", ctx.recipe.calories},
            {"ingredients", ctx.recipe.ingredients}}},
          {"profile", {{"diet", ctx.profile.diet}, {"health_goals", ctx.profile.health_goals}}},
          {"query", ctx.query},
          {"intent", ToJson(ctx.intent)},
          {"decision", decision}};
}

}  // namespace pilar
