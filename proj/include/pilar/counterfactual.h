#ifndef PILAR_COUNTERFACTUAL_H_
#define PILAR_COUNTERFACTUAL_H_

#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/recommender.h"

namespace pilar {

enum class EditKind {
  kRemoveIngredient,
  kAddIngredient,
  kSetDiet,
  kRemoveGoal,
  kAddGoal,
  kCalorieDown,
  kCalorieUp,
  kRemoveAllergen,
  kAddAllergen,
};

// One step in the edit graph: a change to the detected set or one profile field.
struct Edit {
  EditKind kind = EditKind::kAddIngredient;
  std::string value;

  // "detected_set" or "profile.<field>".
  std::string Target() const;
  // Finer-grained key used for diversity, e.g. "detected:tomato", "diet".
  std::string DiversityKey() const;
  std::string Describe(const Vocabulary& vocab) const;

  auto operator<=>(const Edit&) const = default;
};

struct CounterfactualInstance {
  UserProfile profile;
  std::set<IngredientId> detected;
  std::string recipe_id;
  // Size of the recommended list the recipe must make.
  int k = 3;
};

struct CounterfactualTarget {
  enum class Kind { kInclude, kExclude, kReachRank };
  Kind kind = Kind::kInclude;
  int rank = 0;

  static CounterfactualTarget Include() { return {Kind::kInclude, 0}; }
  static CounterfactualTarget Exclude() { return {Kind::kExclude, 0}; }
  static CounterfactualTarget ReachRank(int r) { return {Kind::kReachRank, r}; }

  bool SatisfiedBy(const Outcome& o) const;
  std::string Describe() const;
};

struct Counterfactual {
  std::vector<Edit> edits;
  std::size_t edit_distance = 0;
  Outcome resulting_outcome;
  std::set<std::string> diversity_key;
  // The edited inputs, so callers can re-run rank themselves.
  UserProfile profile;
  std::set<IngredientId> detected;
};

struct CounterfactualOptions {
  std::size_t k = 3;
  std::size_t max_edits = 3;
  double max_jaccard = 0.5;
  std::size_t max_states = 200000;
  // Calorie target moves in steps of this percentage of the original target.
  int calorie_step_percent = 25;
};

double Jaccard(const std::set<std::string>& a, const std::set<std::string>& b);

// Applies edits in order. Calorie steps are relative to the original target.
void ApplyEdits(const std::vector<Edit>& edits, int calorie_step_percent, UserProfile& profile,
                std::set<IngredientId>& detected);

// Every single edit available from the given state. `base_calorie_target` is
// the target before any calorie edits; `calorie_steps` the net steps so far.
std::vector<Edit> EditSpace(const UserProfile& profile, const std::set<IngredientId>& detected,
                            const Recipe& recipe, const Vocabulary& vocab,
                            int base_calorie_target, int calorie_steps,
                            int calorie_step_percent);

// Outcome as observed through a full Rank call.
Outcome ObserveOutcome(const Recommender& rec, const Corpus& corpus, const UserProfile& profile,
                       const std::set<IngredientId>& detected, const std::string& recipe_id,
                       int k);

// True when the claimed outcome is what Rank reports for the edited inputs.
bool VerifyCounterfactual(const Recommender& rec, const Corpus& corpus,
                          const CounterfactualInstance& instance, const Counterfactual& cf,
                          int calorie_step_percent = 25);

// Best-first search over the edit graph (unit cost per edit). Returns up to
// `options.k` counterfactuals by ascending edit distance, pairwise Jaccard of
// diversity keys <= max_jaccard, none a superset of a cheaper one. Each is
// re-verified through Rank. An already-satisfied target yields a single empty
// counterfactual. Throws Error(kNoCounterfactualWithinBudget).
std::vector<Counterfactual> DiverseCounterfactuals(const Recommender& rec, const Corpus& corpus,
                                                   const CounterfactualInstance& instance,
                                                   const CounterfactualTarget& target,
                                                   const CounterfactualOptions& options = {});

// Applies a fixed scenario and reports the re-ranked outcome.
Counterfactual EvaluateScenario(const Recommender& rec, const Corpus& corpus,
                                const CounterfactualInstance& instance,
                                const std::vector<Edit>& edits,
                                int calorie_step_percent = 25);

nlohmann::json ToJson(const Edit& e, const Vocabulary& vocab);
nlohmann::json ToJson(const Counterfactual& c, const Vocabulary& vocab);

}  // namespace pilar

#endif  // PILAR_COUNTERFACTUAL_H_
