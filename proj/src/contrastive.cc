#include "pilar/contrastive.h"

#include <algorithm>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

constexpr std::string_view kTagPrefix = "tag:";

bool IsTagItem(const std::string& item) { return item.rfind(kTagPrefix, 0) == 0; }
std::string TagOf(const std::string& item) { return item.substr(kTagPrefix.size()); }

struct Competitor {
  double score;
  double coverage;
  std::string id;
};

}  // namespace

ContrastiveExplanation Contrastive(const ContrastiveProblem& problem) {
  ContrastiveExplanation out;
  std::set<std::string> kept(problem.present.begin(), problem.present.end());
  for (const auto& item : problem.present) {
    std::set<std::string> trial = kept;
    trial.erase(item);
    if (problem.holds(trial, {})) kept = std::move(trial);
  }
  for (const auto& item : problem.present) {
    if (kept.count(item)) out.pertinent_positives.push_back(item);
  }

  const std::set<std::string> all_present(problem.present.begin(), problem.present.end());
  const auto& absent = problem.absent;
  for (const auto& a : absent) {
    if (!problem.holds(all_present, {a})) {
      out.pertinent_negatives = {a};
      return out;
    }
  }
  static_assert(kMaxPertinentNegativeAdditions == 2);
  for (std::size_t i = 0; i < absent.size(); ++i) {
    for (std::size_t j = i + 1; j < absent.size(); ++j) {
      if (!problem.holds(all_present, {absent[i], absent[j]})) {
        out.pertinent_negatives = {absent[i], absent[j]};
        return out;
      }
    }
  }
  return out;
}

RecipeContrastive ContrastiveForRecipe(const Recommender& rec, const Corpus& corpus,
                                       const CounterfactualInstance& instance) {
  const Recipe* recipe = corpus.Find(instance.recipe_id);
  if (!recipe) {
    throw Error(ErrorCode::kUnknownRecipe, fmt::format("unknown recipe {}", instance.recipe_id),
                {{"recipe_id", instance.recipe_id}});
  }
  const Vocabulary& vocab = rec.vocab();
  const UserProfile& profile = instance.profile;
  RecipeContrastive result;
  result.decision =
      rec.Evaluate(corpus, profile, instance.detected, instance.recipe_id, instance.k);

  auto label_of = [&](const std::string& item) {
    if (IsTagItem(item)) return fmt::format("{} (tag)", Humanize(TagOf(item)));
    if (FindFeature(item)) return Humanize(item);
    return vocab.DisplayName(item);
  };

  ContrastiveProblem problem;
  if (result.decision.status == OutcomeStatus::kExcluded) {
    problem.present = recipe->ingredients;
    for (const auto& t : recipe->tags) problem.present.push_back(std::string(kTagPrefix) + t);
    problem.holds = [&](const std::set<std::string>& kept, const std::set<std::string>&) {
      Recipe hypo = *recipe;
      hypo.ingredients.clear();
      hypo.tags.clear();
      for (const auto& item : kept) {
        if (IsTagItem(item)) {
          hypo.tags.insert(TagOf(item));
        } else {
          hypo.ingredients.push_back(item);
        }
      }
      return rec.HardFilter(hypo, profile).has_value();
    };
  } else {
    const FeatureVector features = rec.Features(*recipe, profile, instance.detected);
    std::vector<Competitor> competitors;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
      const Recipe& r = corpus.recipes()[i];
      if (r.id == recipe->id) continue;
      if (rec.HardFilterWithTags(r, corpus.EffectiveTags(i), profile)) continue;
      FeatureVector f = rec.Features(r, profile, instance.detected);
      competitors.push_back({Score(f, rec.weights()), f[kIngredientCoverage], r.id});
    }
    const bool included = result.decision.status == OutcomeStatus::kIncluded;

    for (std::size_t i = 0; i < kNumFeatures; ++i) {
      if (features[i] > 0.0) problem.present.emplace_back(FeatureName(i));
    }
    if (included) {
      const TagSet effective = vocab.EffectiveTags(*recipe);
      for (const auto& a : profile.allergens) {
        if (vocab.IsIngredient(a)) {
          if (std::find(recipe->ingredients.begin(), recipe->ingredients.end(), a) ==
              recipe->ingredients.end()) {
            problem.absent.push_back(a);
          }
        } else if (!effective.count(a)) {
          problem.absent.push_back(std::string(kTagPrefix) + a);
        }
      }
      for (const auto& t : vocab.DietConflicts(profile.diet)) {
        std::string item = std::string(kTagPrefix) + t;
        if (!effective.count(t) &&
            std::find(problem.absent.begin(), problem.absent.end(), item) == problem.absent.end()) {
          problem.absent.push_back(item);
        }
      }
    } else {
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        if (features[i] < 1.0) problem.absent.emplace_back(FeatureName(i));
      }
    }

    problem.holds = [&, features, competitors, included](const std::set<std::string>& kept,
                                                         const std::set<std::string>& added) {
      FeatureVector f = features;
      Recipe hypo = *recipe;
      bool touches_recipe = false;
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        const std::string name(FeatureName(i));
        if (f[i] > 0.0 && !kept.count(name)) f[i] = 0.0;
        if (added.count(name)) f[i] = 1.0;
      }
      for (const auto& item : added) {
        if (FindFeature(item)) continue;
        touches_recipe = true;
        if (IsTagItem(item)) {
          hypo.tags.insert(TagOf(item));
        } else {
          hypo.ingredients.push_back(item);
        }
      }
      bool now_included = false;
      if (!touches_recipe || !rec.HardFilter(hypo, profile)) {
        const double s = Score(f, rec.weights());
        int ahead = 0;
        for (const auto& c : competitors) {
          if (RanksBefore(c.score, c.coverage, c.id, s, f[kIngredientCoverage], recipe->id)) {
            ++ahead;
          }
        }
        now_included = ahead + 1 <= instance.k;
      }
      return now_included == included;
    };
  }

  result.explanation = Contrastive(problem);
  for (const auto& item : result.explanation.pertinent_positives) {
    result.labels[item] = label_of(item);
  }
  for (const auto& item : result.explanation.pertinent_negatives) {
    result.labels[item] = label_of(item);
  }
  return result;
}

nlohmann::json ToJson(const ContrastiveExplanation& c) {
  return {{"pertinent_positives", c.pertinent_positives},
          {"pertinent_negatives", c.pertinent_negatives}};
}

}  // namespace pilar
