#include "pilar/counterfactual.h"

#include <algorithm>
#include <cmath>
#include <deque>
#include <unordered_set>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

struct SearchState {
  UserProfile profile;
  std::set<IngredientId> detected;
  int calorie_steps = 0;
  std::vector<Edit> edits;
};

int CalorieTargetFor(int base, int steps, int step_percent) {
  return static_cast<int>(
      std::lround(static_cast<double>(base) * (100.0 + step_percent * steps) / 100.0));
}

void ApplyOne(const Edit& e, int base_calorie, int step_percent, UserProfile& profile,
              std::set<IngredientId>& detected, int& steps) {
  switch (e.kind) {
    case EditKind::kRemoveIngredient: detected.erase(e.value); break;
    case EditKind::kAddIngredient: detected.insert(e.value); break;
    case EditKind::kSetDiet: profile.diet = e.value; break;
    case EditKind::kRemoveGoal: profile.health_goals.erase(e.value); break;
    case EditKind::kAddGoal: profile.health_goals.insert(e.value); break;
    case EditKind::kCalorieDown:
      --steps;
      profile.calorie_target = CalorieTargetFor(base_calorie, steps, step_percent);
      break;
    case EditKind::kCalorieUp:
      ++steps;
      profile.calorie_target = CalorieTargetFor(base_calorie, steps, step_percent);
      break;
    case EditKind::kRemoveAllergen: profile.allergens.erase(e.value); break;
    case EditKind::kAddAllergen: profile.allergens.insert(e.value); break;
  }
}

std::string StateKey(const SearchState& s) {
  std::string key = s.profile.diet;
  key += '|';
  for (const auto& g : s.profile.health_goals) key += g + ',';
  key += '|';
  for (const auto& a : s.profile.allergens) key += a + ',';
  key += '|';
  key += std::to_string(s.calorie_steps);
  key += '|';
  for (const auto& d : s.detected) key += d + ',';
  return key;
}

std::set<std::string> KeysOf(const std::vector<Edit>& edits) {
  std::set<std::string> out;
  for (const auto& e : edits) out.insert(e.DiversityKey());
  return out;
}

bool IsSubMultiset(std::vector<Edit> small, std::vector<Edit> big) {
  std::sort(small.begin(), small.end());
  std::sort(big.begin(), big.end());
  return std::includes(big.begin(), big.end(), small.begin(), small.end());
}

}  // namespace

std::string Edit::Target() const {
  switch (kind) {
    case EditKind::kRemoveIngredient:
    case EditKind::kAddIngredient: return "detected_set";
    case EditKind::kSetDiet: return "profile.diet";
    case EditKind::kRemoveGoal:
    case EditKind::kAddGoal: return "profile.health_goals";
    case EditKind::kCalorieDown:
    case EditKind::kCalorieUp: return "profile.calorie_target";
    case EditKind::kRemoveAllergen:
    case EditKind::kAddAllergen: return "profile.allergens";
  }
  return "";
}

std::string Edit::DiversityKey() const {
  switch (kind) {
    case EditKind::kRemoveIngredient:
    case EditKind::kAddIngredient: return "detected:" + value;
    case EditKind::kSetDiet: return "diet";
    case EditKind::kRemoveGoal:
    case EditKind::kAddGoal: return "goal:" + value;
    case EditKind::kCalorieDown:
    case EditKind::kCalorieUp: return "calorie_target";
    case EditKind::kRemoveAllergen:
    case EditKind::kAddAllergen: return "allergen:" + value;
  }
  return "";
}

std::string Edit::Describe(const Vocabulary& vocab) const {
  switch (kind) {
    case EditKind::kRemoveIngredient:
      return fmt::format("remove {} from your ingredients", vocab.DisplayName(value));
    case EditKind::kAddIngredient:
      return fmt::format("add {} to your ingredients", vocab.DisplayName(value));
    case EditKind::kSetDiet: return fmt::format("switch your diet to {}", Humanize(value));
    case EditKind::kRemoveGoal: return fmt::format("drop the health goal {}", Humanize(value));
    case EditKind::kAddGoal: return fmt::format("add the health goal {}", Humanize(value));
    case EditKind::kCalorieDown: return fmt::format("lower your calorie target by {}%", value);
    case EditKind::kCalorieUp: return fmt::format("raise your calorie target by {}%", value);
    case EditKind::kRemoveAllergen:
      return fmt::format("remove {} from your allergens", vocab.DisplayName(value));
    case EditKind::kAddAllergen:
      return fmt::format("add {} to your allergens", vocab.DisplayName(value));
  }
  return "";
}

bool CounterfactualTarget::SatisfiedBy(const Outcome& o) const {
  switch (kind) {
    case Kind::kInclude: return o.status == OutcomeStatus::kIncluded;
    case Kind::kExclude: return o.status != OutcomeStatus::kIncluded;
    case Kind::kReachRank: return o.status == OutcomeStatus::kIncluded && o.position <= rank;
  }
  return false;
}

std::string CounterfactualTarget::Describe() const {
  switch (kind) {
    case Kind::kInclude: return "include";
    case Kind::kExclude: return "exclude";
    case Kind::kReachRank: return fmt::format("reach rank <= {}", rank);
  }
  return "";
}

double Jaccard(const std::set<std::string>& a, const std::set<std::string>& b) {
  if (a.empty() && b.empty()) return 1.0;
  std::size_t common = 0;
  for (const auto& x : a) common += b.count(x);
  return static_cast<double>(common) / static_cast<double>(a.size() + b.size() - common);
}

void ApplyEdits(const std::vector<Edit>& edits, int calorie_step_percent, UserProfile& profile,
                std::set<IngredientId>& detected) {
  const int base = profile.calorie_target;
  int steps = 0;
  for (const auto& e : edits) ApplyOne(e, base, calorie_step_percent, profile, detected, steps);
}

std::vector<Edit> EditSpace(const UserProfile& profile, const std::set<IngredientId>& detected,
                            const Recipe& recipe, const Vocabulary& vocab,
                            int base_calorie_target, int calorie_steps,
                            int calorie_step_percent) {
  std::vector<Edit> out;
  for (const auto& id : detected) out.push_back({EditKind::kRemoveIngredient, id});
  for (const auto& id : recipe.ingredients) {
    if (!detected.count(id)) out.push_back({EditKind::kAddIngredient, id});
  }
  for (const auto& d : vocab.diets()) {
    if (d != profile.diet) out.push_back({EditKind::kSetDiet, d});
  }
  for (const auto& g : profile.health_goals) out.push_back({EditKind::kRemoveGoal, g});
  for (const auto& g : vocab.health_goals()) {
    if (!profile.health_goals.count(g)) out.push_back({EditKind::kAddGoal, g});
  }
  const std::string pct = std::to_string(calorie_step_percent);
  if (CalorieTargetFor(base_calorie_target, calorie_steps - 1, calorie_step_percent) > 0) {
    out.push_back({EditKind::kCalorieDown, pct});
  }
  out.push_back({EditKind::kCalorieUp, pct});
  for (const auto& a : profile.allergens) out.push_back({EditKind::kRemoveAllergen, a});
  std::set<std::string> proposed;
  for (const auto& id : recipe.ingredients) {
    if (!profile.allergens.count(id) && proposed.insert(id).second) {
      out.push_back({EditKind::kAddAllergen, id});
    }
  }
  for (const auto& t : vocab.EffectiveTags(recipe)) {
    if (!profile.allergens.count(t) && proposed.insert(t).second) {
      out.push_back({EditKind::kAddAllergen, t});
    }
  }
  return out;
}

Outcome ObserveOutcome(const Recommender& rec, const Corpus& corpus, const UserProfile& profile,
                       const std::set<IngredientId>& detected, const std::string& recipe_id,
                       int k) {
  RankResult result = rec.Rank(corpus, profile, detected, k);
  for (const auto& s : result.ranked) {
    if (s.recipe.id == recipe_id) {
      return Outcome{OutcomeStatus::kIncluded, s.rank, s.score, std::nullopt};
    }
  }
  for (const auto& s : result.excluded) {
    if (s.recipe.id == recipe_id) return Outcome{OutcomeStatus::kExcluded, 0, 0, s.excluded};
  }
  if (!corpus.Find(recipe_id)) {
    throw Error(ErrorCode::kUnknownRecipe, fmt::format("unknown recipe {}", recipe_id));
  }
  return Outcome{OutcomeStatus::kBelowCutoff, 0, 0, std::nullopt};
}

bool VerifyCounterfactual(const Recommender& rec, const Corpus& corpus,
                          const CounterfactualInstance& instance, const Counterfactual& cf,
                          int calorie_step_percent) {
  UserProfile profile = instance.profile;
  std::set<IngredientId> detected = instance.detected;
  ApplyEdits(cf.edits, calorie_step_percent, profile, detected);
  if (profile != cf.profile || detected != cf.detected) return false;
  Outcome seen = ObserveOutcome(rec, corpus, profile, detected, instance.recipe_id, instance.k);
  const Outcome& claimed = cf.resulting_outcome;
  if (seen.status != claimed.status) return false;
  switch (seen.status) {
    case OutcomeStatus::kIncluded:
      return seen.position == claimed.position && seen.score == claimed.score;
    case OutcomeStatus::kExcluded: return seen.reason == claimed.reason;
    case OutcomeStatus::kBelowCutoff: return claimed.position > instance.k;
  }
  return false;
}

std::vector<Counterfactual> DiverseCounterfactuals(const Recommender& rec, const Corpus& corpus,
                                                   const CounterfactualInstance& instance,
                                                   const CounterfactualTarget& target,
                                                   const CounterfactualOptions& options) {
  if (options.k < 1) throw Error(ErrorCode::kInvalidArgument, "k must be >= 1");
  if (options.max_edits < 1) throw Error(ErrorCode::kInvalidArgument, "max_edits must be >= 1");
  if (target.kind == CounterfactualTarget::Kind::kReachRank &&
      (target.rank < 1 || target.rank > instance.k)) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("target rank must be within 1..{}", instance.k));
  }
  const Recipe* recipe = corpus.Find(instance.recipe_id);
  if (!recipe) {
    throw Error(ErrorCode::kUnknownRecipe, fmt::format("unknown recipe {}", instance.recipe_id),
                {{"recipe_id", instance.recipe_id}});
  }
  const int base = instance.profile.calorie_target;
  const int pct = options.calorie_step_percent;
  // Adding an allergen the recipe carries can only exclude it.
  const bool prune_allergen_adds = target.kind != CounterfactualTarget::Kind::kExclude;

  auto evaluate = [&](const SearchState& s) {
    return rec.Evaluate(corpus, s.profile, s.detected, instance.recipe_id, instance.k);
  };
  auto make_cf = [&](const SearchState& s, const Outcome& o) {
    Counterfactual cf;
    cf.edits = s.edits;
    cf.edit_distance = s.edits.size();
    cf.resulting_outcome = o;
    cf.diversity_key = KeysOf(s.edits);
    cf.profile = s.profile;
    cf.detected = s.detected;
    return cf;
  };
  auto verified = [&](std::vector<Counterfactual> out) {
    for (const auto& cf : out) {
      if (!VerifyCounterfactual(rec, corpus, instance, cf, pct)) {
        throw std::logic_error("counterfactual failed re-verification for " + instance.recipe_id);
      }
    }
    return out;
  };

  SearchState start{instance.profile, instance.detected, 0, {}};
  Outcome initial = evaluate(start);
  if (target.SatisfiedBy(initial)) return verified({make_cf(start, initial)});

  std::vector<Counterfactual> accepted;
  std::vector<std::vector<Edit>> found;
  std::unordered_set<std::string> visited{StateKey(start)};
  std::vector<SearchState> frontier{start};
  std::size_t states = 0;
  bool budget_hit = false;

  for (std::size_t depth = 1; depth <= options.max_edits && !frontier.empty(); ++depth) {
    std::vector<SearchState> next;
    for (const auto& state : frontier) {
      for (const auto& edit : EditSpace(state.profile, state.detected, *recipe, rec.vocab(), base,
                                        state.calorie_steps, pct)) {
        if (prune_allergen_adds && edit.kind == EditKind::kAddAllergen) continue;
        SearchState child = state;
        ApplyOne(edit, base, pct, child.profile, child.detected, child.calorie_steps);
        child.edits.push_back(edit);
        if (!visited.insert(StateKey(child)).second) continue;
        if (++states > options.max_states) {
          budget_hit = true;
          break;
        }
        Outcome o = evaluate(child);
        if (!target.SatisfiedBy(o)) {
          if (depth < options.max_edits) next.push_back(std::move(child));
          continue;
        }
        bool redundant = std::any_of(found.begin(), found.end(), [&](const auto& prev) {
          return IsSubMultiset(prev, child.edits);
        });
        if (redundant) continue;
        found.push_back(child.edits);
        Counterfactual cf = make_cf(child, o);
        bool diverse = std::all_of(accepted.begin(), accepted.end(), [&](const Counterfactual& a) {
          return Jaccard(a.diversity_key, cf.diversity_key) <= options.max_jaccard;
        });
        if (!diverse) continue;
        accepted.push_back(std::move(cf));
        if (accepted.size() >= options.k) return verified(std::move(accepted));
      }
      if (budget_hit) break;
    }
    if (budget_hit) break;
    frontier = std::move(next);
  }
  if (accepted.empty()) {
    throw Error(ErrorCode::kNoCounterfactualWithinBudget,
                fmt::format("no counterfactual to {} {} within {} edit(s)", target.Describe(),
                            instance.recipe_id, options.max_edits),
                {{"max_edits", options.max_edits},
                 {"states_explored", states},
                 {"state_budget_exhausted", budget_hit}});
  }
  return verified(std::move(accepted));
}

Counterfactual EvaluateScenario(const Recommender& rec, const Corpus& corpus,
                                const CounterfactualInstance& instance,
                                const std::vector<Edit>& edits, int calorie_step_percent) {
  Counterfactual cf;
  cf.profile = instance.profile;
  cf.detected = instance.detected;
  ApplyEdits(edits, calorie_step_percent, cf.profile, cf.detected);
  cf.edits = edits;
  cf.edit_distance = edits.size();
  cf.diversity_key = KeysOf(edits);
  cf.resulting_outcome =
      rec.Evaluate(corpus, cf.profile, cf.detected, instance.recipe_id, instance.k);
  return cf;
}

nlohmann::json ToJson(const Edit& e, const Vocabulary& vocab) {
  return {{"target", e.Target()}, {"key", e.DiversityKey()}, {"change", e.Describe(vocab)}};
}

nlohmann::json ToJson(const Counterfactual& c, const Vocabulary& vocab) {
  nlohmann::json edits = nlohmann::json::array();
  for (const auto& e : c.edits) edits.push_back(ToJson(e, vocab));
  return {{"edits", edits},
          {"edit_distance", c.edit_distance},
          {"resulting_outcome", ToJson(c.resulting_outcome)},
          {"diversity_key", c.diversity_key}};
}

}  // namespace pilar
