#ifndef PILAR_TEMPLATE_H_
#define PILAR_TEMPLATE_H_

#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "pilar/attribution.h"
#include "pilar/context.h"
#include "pilar/contrastive.h"
#include "pilar/counterfactual.h"

namespace pilar {

// The short-explanation prompt with every slot filled.
std::string FillTemplatePrompt(const ExplanationContext& ctx, const Vocabulary& vocab);

struct WhyMaterials {
  std::vector<Attribution> attributions;
  // Sweep of the top attributed feature.
  std::string pdp_feature;
  std::vector<PdpPoint> pdp;
};

struct CounterfactualMaterials {
  CounterfactualTarget target;
  // Ascending edit distance. Empty when the search budget ran out.
  std::vector<Counterfactual> counterfactuals;
  std::size_t max_edits = 3;
  // A user-named scenario ("what if I went gluten free") and its outcome.
  std::optional<Counterfactual> scenario;
  // Top recipe name after applying the scenario.
  std::string scenario_top;
};

struct ContrastiveMaterials {
  RecipeContrastive contrastive;
};

using Materials = std::variant<WhyMaterials, CounterfactualMaterials, ContrastiveMaterials>;

// Deterministic sentence realization. Materials must fit the intent:
// WHY/FREE_FORM -> attributions, WHY_NOT/WHAT_IF -> counterfactuals,
// HOW_TO -> contrastive or counterfactuals. Throws Error(kMaterialsMissing).
std::string RealizeTemplate(IntentKind intent, const Materials& materials,
                            const ExplanationContext& ctx, const Vocabulary& vocab);

nlohmann::json ToJson(const Materials& m, const Vocabulary& vocab);

}  // namespace pilar

#endif  // PILAR_TEMPLATE_H_
