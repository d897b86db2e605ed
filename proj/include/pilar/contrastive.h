#ifndef PILAR_CONTRASTIVE_H_
#define PILAR_CONTRASTIVE_H_

#include <functional>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/counterfactual.h"
#include "pilar/recommender.h"

namespace pilar {

struct ContrastiveExplanation {
  // Present items sufficient for the decision; dropping any one changes it.
  std::vector<std::string> pertinent_positives;
  // Absent items whose joint presence would flip the decision.
  std::vector<std::string> pertinent_negatives;
};

// Decision oracle: given the present items kept and the absent items added,
// does the original decision still hold?
using DecisionHolds =
    std::function<bool(const std::set<std::string>& kept, const std::set<std::string>& added)>;

struct ContrastiveProblem {
  std::vector<std::string> present;
  std::vector<std::string> absent;
  DecisionHolds holds;
};

inline constexpr std::size_t kMaxPertinentNegativeAdditions = 2;

// Positives by greedy backward elimination with an exact re-check after every
// removal; negatives by forward search over absent items, smallest sets first,
// up to two additions.
ContrastiveExplanation Contrastive(const ContrastiveProblem& problem);

struct RecipeContrastive {
  Outcome decision;
  ContrastiveExplanation explanation;
  // Human phrase per item id.
  std::map<std::string, std::string> labels;
};

// Recipe-level decision items:
//  - excluded: positives range over the recipe's ingredients and tags
//    ("tag:<t>"), so the offending hard-filter cause remains.
//  - included: positives range over non-zero features; negatives over
//    allergens and diet-conflict tags the recipe lacks.
//  - below the cut: negatives range over features short of 1.
RecipeContrastive ContrastiveForRecipe(const Recommender& rec, const Corpus& corpus,
                                       const CounterfactualInstance& instance);

nlohmann::json ToJson(const ContrastiveExplanation& c);

}  // namespace pilar

#endif  // PILAR_CONTRASTIVE_H_
