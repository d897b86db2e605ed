#include <gtest/gtest.h>

#include "pilar/contrastive.h"
#include "pilar/counterfactual.h"
#include "pilar/error.h"
#include "support.h"

namespace pilar {
namespace {

using testing::Gen;
using testing::SharedVocab;

// Re-derives the outcome for a counterfactual straight from Rank.
bool RerankConfirms(const Recommender& rec, const Corpus& corpus, const CounterfactualInstance& inst,
                    const CounterfactualTarget& target, const Counterfactual& cf) {
  UserProfile p = inst.profile;
  std::set<IngredientId> d = inst.detected;
  ApplyEdits(cf.edits, 25, p, d);
  const auto result = rec.Rank(corpus, p, d, inst.k);
  Outcome o;
  o.status = OutcomeStatus::kBelowCutoff;
  for (const auto& s : result.ranked) {
    if (s.recipe.id == inst.recipe_id) o = {OutcomeStatus::kIncluded, s.rank, s.score, std::nullopt};
  }
  for (const auto& s : result.excluded) {
    if (s.recipe.id == inst.recipe_id) o = {OutcomeStatus::kExcluded, 0, 0, s.excluded};
  }
  return target.SatisfiedBy(o) && o.status == cf.resulting_outcome.status;
}

TEST(Counterfactual, PeanutAllergenIsOneEdit) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegan_peanut_allergy.json"),
                              {"tofu", "peanut", "rice", "garlic"}, "peanut_satay", 3};
  const auto cfs = DiverseCounterfactuals(rec, corpus, inst, CounterfactualTarget::Include());
  ASSERT_FALSE(cfs.empty());
  ASSERT_EQ(cfs[0].edit_distance, 1u);
  EXPECT_EQ(cfs[0].edits[0], (Edit{EditKind::kRemoveAllergen, "peanut"}));
  EXPECT_EQ(cfs[0].resulting_outcome.status, OutcomeStatus::kIncluded);
}

TEST(Counterfactual, AlreadySatisfiedIsEmpty) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegetarian_high_fiber.json"),
                              {"tomato", "onion", "cheese", "bell_pepper"}, "stuffed_peppers", 3};
  const auto cfs = DiverseCounterfactuals(rec, corpus, inst, CounterfactualTarget::Include());
  ASSERT_EQ(cfs.size(), 1u);
  EXPECT_EQ(cfs[0].edit_distance, 0u);
}

TEST(Counterfactual, BudgetExhaustedThrows) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegetarian_high_fiber.json"), {"tomato"},
                              "beef_stew", 3};
  CounterfactualOptions opts;
  opts.max_edits = 1;
  opts.max_states = 5;
  try {
    DiverseCounterfactuals(rec, corpus, inst, CounterfactualTarget::Include(), opts);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kNoCounterfactualWithinBudget);
    EXPECT_EQ(e.details()["max_edits"], 1);
  }
}

TEST(Counterfactual, RejectsBadOptions) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("omnivore.json"), {}, "beef_stew", 3};
  EXPECT_THROW(DiverseCounterfactuals(rec, corpus, inst, CounterfactualTarget::ReachRank(5)), Error);
  inst.recipe_id = "nope";
  EXPECT_THROW(DiverseCounterfactuals(rec, corpus, inst, CounterfactualTarget::Include()), Error);
}

TEST(Counterfactual, JaccardBasics) {
  EXPECT_DOUBLE_EQ(Jaccard({"a"}, {"a"}), 1.0);
  EXPECT_DOUBLE_EQ(Jaccard({"a"}, {"b"}), 0.0);
  EXPECT_DOUBLE_EQ(Jaccard({"a", "b"}, {"b", "c"}), 1.0 / 3.0);
}

TEST(Counterfactual, PropertyValidDiverseAndOrdered) {
  const auto& vocab = *SharedVocab();
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  Gen g(41);
  int checked = 0;
  for (int iter = 0; iter < 60; ++iter) {
    const Corpus corpus(testing::RandomRecipes(g, vocab, 10, 4), vocab);
    CounterfactualInstance inst{testing::RandomProfile(g, vocab), testing::RandomDetected(g, vocab, 6),
                                corpus.recipes()[g.Index(corpus.size())].id, g.Int(1, 3)};
    const auto target = g.Coin(0.7) ? CounterfactualTarget::Include() : CounterfactualTarget::Exclude();
    CounterfactualOptions opts;
    opts.max_edits = 2;
    std::vector<Counterfactual> cfs;
    try {
      cfs = DiverseCounterfactuals(rec, corpus, inst, target, opts);
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kNoCounterfactualWithinBudget);
      continue;
    }
    for (std::size_t i = 0; i < cfs.size(); ++i) {
      ++checked;
      ASSERT_TRUE(RerankConfirms(rec, corpus, inst, target, cfs[i])) << "iteration " << iter;
      ASSERT_EQ(cfs[i].edit_distance, cfs[i].edits.size());
      if (i > 0) ASSERT_GE(cfs[i].edit_distance, cfs[i - 1].edit_distance);
      for (std::size_t j = 0; j < i; ++j) {
        ASSERT_LE(Jaccard(cfs[i].diversity_key, cfs[j].diversity_key), 0.5);
      }
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Counterfactual, PropertyMinimalAgainstExhaustiveSearch) {
  const auto vocab = std::make_shared<const Vocabulary>(testing::SmallVocabulary());
  const Recommender rec(vocab, ScoringWeights::Default());
  Gen g(42);
  int compared = 0;
  for (int iter = 0; iter < 40; ++iter) {
    const Corpus corpus(testing::RandomRecipes(g, *vocab, 4, 3), *vocab);
    CounterfactualInstance inst{testing::RandomProfile(g, *vocab), testing::RandomDetected(g, *vocab, 3),
                                corpus.recipes()[g.Index(corpus.size())].id, 1};
    const auto target = g.Coin(0.6) ? CounterfactualTarget::Include() : CounterfactualTarget::Exclude();
    const auto oracle = testing::ExhaustiveMinEdits(rec, corpus, inst, target, 2, 10000);
    if (oracle.states > 10000) continue;
    ++compared;
    CounterfactualOptions opts;
    opts.max_edits = 2;
    try {
      const auto cfs = DiverseCounterfactuals(rec, corpus, inst, target, opts);
      ASSERT_TRUE(oracle.min_edits) << "iteration " << iter;
      ASSERT_EQ(cfs.front().edit_distance, *oracle.min_edits) << "iteration " << iter;
    } catch (const Error& e) {
      ASSERT_EQ(e.code(), ErrorCode::kNoCounterfactualWithinBudget);
      ASSERT_FALSE(oracle.min_edits) << "iteration " << iter;
    }
  }
  EXPECT_GT(compared, 30);
}

TEST(Counterfactual, EvaluateScenarioMatchesRank) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegetarian_high_fiber.json"),
                              {"tomato", "onion", "cheese", "bell_pepper"}, "beef_stew", 3};
  const auto cf = EvaluateScenario(rec, corpus, inst, {{EditKind::kSetDiet, "omnivore"}});
  EXPECT_EQ(cf.profile.diet, "omnivore");
  EXPECT_NE(cf.resulting_outcome.status, OutcomeStatus::kExcluded);
}

// Monotone decision: kept weight must reach a threshold and no blocker
// (single or pair) may be added.
struct ToyDecision {
  std::map<std::string, int> weight;
  int threshold = 0;
  std::set<std::string> single_blockers;
  std::vector<std::pair<std::string, std::string>> pair_blockers;

  bool operator()(const std::set<std::string>& kept, const std::set<std::string>& added) const {
    int sum = 0;
    for (const auto& k : kept) sum += weight.at(k);
    if (sum < threshold) return false;
    for (const auto& a : added) {
      if (single_blockers.count(a)) return false;
    }
    for (const auto& [a, b] : pair_blockers) {
      if (added.count(a) && added.count(b)) return false;
    }
    return true;
  }
};

TEST(Contrastive, PropertyAgainstSubsetEnumeration) {
  Gen g(43);
  for (int iter = 0; iter < 300; ++iter) {
    ContrastiveProblem problem;
    ToyDecision d;
    const int np = g.Int(1, 7);
    int total = 0;
    for (int i = 0; i < np; ++i) {
      const std::string id = "p" + std::to_string(i);
      problem.present.push_back(id);
      d.weight[id] = g.Int(1, 5);
      total += d.weight[id];
    }
    d.threshold = g.Int(0, total);
    const int na = g.Int(0, 6);
    for (int i = 0; i < na; ++i) problem.absent.push_back("a" + std::to_string(i));
    for (const auto& a : problem.absent) {
      if (g.Coin(0.15)) d.single_blockers.insert(a);
    }
    for (int i = 0; i < 2 && na >= 2; ++i) {
      if (g.Coin(0.5)) d.pair_blockers.emplace_back(g.Pick(problem.absent), g.Pick(problem.absent));
    }
    problem.holds = d;
    const auto out = Contrastive(problem);

    const std::set<std::string> pp(out.pertinent_positives.begin(), out.pertinent_positives.end());
    ASSERT_TRUE(d(pp, {})) << "iteration " << iter;
    for (const auto& p : pp) {
      auto smaller = pp;
      smaller.erase(p);
      ASSERT_FALSE(d(smaller, {})) << "iteration " << iter << " redundant " << p;
    }

    const std::set<std::string> all(problem.present.begin(), problem.present.end());
    std::size_t best = 0;
    for (const auto& a : problem.absent) {
      if (!d(all, {a})) best = 1;
    }
    if (best == 0) {
      for (const auto& a : problem.absent) {
        for (const auto& b : problem.absent) {
          if (a < b && !d(all, {a, b})) best = 2;
        }
      }
    }
    ASSERT_EQ(out.pertinent_negatives.size(), best) << "iteration " << iter;
    if (best > 0) {
      const std::set<std::string> pn(out.pertinent_negatives.begin(), out.pertinent_negatives.end());
      ASSERT_FALSE(d(all, pn));
    }
  }
}

TEST(Contrastive, AllergenExclusionKeepsOnlyTheAllergen) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegan_peanut_allergy.json"),
                              {"tofu", "peanut"}, "peanut_satay", 3};
  const auto c = ContrastiveForRecipe(rec, corpus, inst);
  EXPECT_EQ(c.decision.status, OutcomeStatus::kExcluded);
  EXPECT_EQ(c.explanation.pertinent_positives, (std::vector<std::string>{"peanut"}));
  EXPECT_EQ(c.labels.at("peanut"), "peanut");
}

TEST(Contrastive, IncludedRecipeNamesFeaturesAndThreats) {
  const Corpus corpus(testing::SharedRecipes(), *SharedVocab());
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  CounterfactualInstance inst{testing::LoadProfile("vegetarian_high_fiber.json"),
                              {"tomato", "onion", "cheese", "bell_pepper"}, "stuffed_peppers", 3};
  const auto c = ContrastiveForRecipe(rec, corpus, inst);
  EXPECT_EQ(c.decision.status, OutcomeStatus::kIncluded);
  EXPECT_FALSE(c.explanation.pertinent_positives.empty());
  ASSERT_EQ(c.explanation.pertinent_negatives.size(), 1u);
  EXPECT_EQ(c.explanation.pertinent_negatives[0].rfind("tag:", 0), 0u);
}

}  // namespace
}  // namespace pilar
