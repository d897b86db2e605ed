#ifndef PILAR_ROUTER_H_
#define PILAR_ROUTER_H_

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pilar/context.h"
#include "pilar/counterfactual.h"
#include "pilar/intent.h"
#include "pilar/llm.h"
#include "pilar/template.h"

namespace pilar {

enum class ExplainMode { kTemplate, kLlm };
std::string_view ModeName(ExplainMode mode);
std::optional<ExplainMode> ParseMode(std::string_view name);

enum class Trigger { kQuery, kEvent };

struct Explanation {
  std::string text;
  ExplainMode mode = ExplainMode::kTemplate;
  std::string strategy;
  Intent intent;
  Trigger trigger = Trigger::kQuery;
  // Subset of when, what, how, who, where in that order.
  std::vector<std::string> dimensions;
  std::vector<std::string> flags;
  std::string limitation;
  // Template mode: the engine output the text was realized from.
  nlohmann::json materials;
};

// Engines and settings a dispatch may use. `llm` and `icl` are only touched
// in llm mode.
struct ExplainDeps {
  const Recommender& rec;
  const Corpus& corpus;
  const IclStore* icl = nullptr;
  LlmClient* llm = nullptr;
  GenerationParams params;
  std::size_t icl_k = 3;
  CounterfactualOptions counterfactual;
};

// Edits named in a what-if question: a diet, a health goal, or an ingredient
// the user does not have yet.
std::vector<Edit> ParseScenario(std::string_view query, const UserProfile& profile,
                                const std::set<IngredientId>& detected, const Vocabulary& vocab);

// Tags in canonical order: when, what, how, who, where.
std::vector<std::string> TagDimensions(const Explanation& e, const ExplanationContext& ctx,
                                       const Vocabulary& vocab);

// Runs the strategy for ctx.intent in the given mode and tags the result.
// In llm mode endpoint failures are rethrown with a fallback hint in details.
Explanation Dispatch(ExplainMode mode, const ExplanationContext& ctx,
                     const RecommendationState& state, const ExplainDeps& deps);

// Classify, build the context, dispatch.
Explanation Explain(const IntentRules& rules, const RecommendationState& state,
                    const std::string& recipe_id, const std::string& query, ExplainMode mode,
                    const ExplainDeps& deps);

// Event-triggered notice for a fresh recommendation.
Explanation RecommendationNotice(const RecommendationState& state, const Vocabulary& vocab);

nlohmann::json ToJson(const Explanation& e);

}  // namespace pilar

#endif  // PILAR_ROUTER_H_
