#include "pilar/template.h"

#include <algorithm>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pilar/error.h"

namespace pilar {

namespace {

std::string Join(const std::vector<std::string>& parts, std::string_view sep) {
  return fmt::format("{}", fmt::join(parts, sep));
}

std::string Plural(std::size_t n, std::string_view one, std::string_view many) {
  return std::string(n == 1 ? one : many);
}

std::string Opening(const ExplanationContext& ctx, const Vocabulary& vocab) {
  const PromptSlots s = RenderSlots(SlotInputsOf(ctx), vocab);
  const std::string who =
      fmt::format("a user with a {} diet and a health goal of {}, considering available "
                  "ingredients: {}",
                  s.dietary_preference, s.health_goal, s.ingredient_list);
  switch (ctx.decision.status) {
    case OutcomeStatus::kIncluded:
      return fmt::format("The recipe {} was recommended to {}.", s.recipe_name, who);
    case OutcomeStatus::kBelowCutoff:
      return fmt::format("The recipe {} ranked {}, outside the top {}, for {}.", s.recipe_name,
                         ctx.decision.position, ctx.decision.k, who);
    case OutcomeStatus::kExcluded:
      return fmt::format("The recipe {} was not recommended to {}.", s.recipe_name, who);
  }
  return {};
}

std::string FeaturePhrase(std::size_t feature, const ExplanationContext& ctx) {
  switch (feature) {
    case kIngredientCoverage: {
      std::size_t have = 0;
      for (const auto& id : ctx.recipe.ingredients) have += ctx.detected.count(id);
      return fmt::format("{} of {} ingredients match what you have", have,
                         ctx.recipe.ingredients.size());
    }
    case kDietCompatibility:
      return fmt::format("it fits your {} diet", Humanize(ctx.profile.diet));
    case kGoalAlignment: {
      std::vector<std::string> hit;
      for (const auto& g : ctx.profile.health_goals) {
        if (ctx.recipe.tags.count(g)) hit.push_back(Humanize(g));
      }
      return fmt::format("it supports your {} {}", Join(hit, " and "),
                         Plural(hit.size(), "goal", "goals"));
    }
    case kCalorieFit:
      return fmt::format("its {} kcal per serving sits close to your calorie target",
                         ctx.recipe.calories);
  }
  return {};
}

std::string Blocker(const ExclusionReason& r, const ExplanationContext& ctx,
                    const Vocabulary& vocab) {
  const std::string diet = Humanize(ctx.profile.diet);
  if (r.kind == ExclusionReason::Kind::kAllergen) {
    if (r.ingredient == r.cause) {
      return fmt::format("The blocker is {}, which is on your allergen list.",
                         vocab.DisplayName(r.cause));
    }
    if (!r.ingredient.empty()) {
      return fmt::format("The blocker is {}, which carries the {} tag on your allergen list.",
                         vocab.DisplayName(r.ingredient), Humanize(r.cause));
    }
    return fmt::format("The blocker is the {} tag on your allergen list.", Humanize(r.cause));
  }
  if (!r.ingredient.empty()) {
    return fmt::format("The blocker is {}, which is {} and conflicts with your {} diet.",
                       vocab.DisplayName(r.ingredient), Humanize(r.cause), diet);
  }
  return fmt::format("The blocker is the {} tag, which conflicts with your {} diet.",
                     Humanize(r.cause), diet);
}

std::string DescribeEdits(const std::vector<Edit>& edits, const Vocabulary& vocab) {
  std::vector<std::string> parts;
  for (const auto& e : edits) parts.push_back(e.Describe(vocab));
  return Join(parts, " and ");
}

std::string TargetPhrase(const CounterfactualTarget& t) {
  switch (t.kind) {
    case CounterfactualTarget::Kind::kInclude: return "bring it into your recommendations";
    case CounterfactualTarget::Kind::kExclude: return "take it out of your recommendations";
    case CounterfactualTarget::Kind::kReachRank:
      return fmt::format("move it to rank {} or better", t.rank);
  }
  return {};
}

std::string OutcomePhrase(const Outcome& o, int k) {
  switch (o.status) {
    case OutcomeStatus::kIncluded: return fmt::format("recommended at rank {}", o.position);
    case OutcomeStatus::kBelowCutoff:
      return fmt::format("ranked {}, outside the top {}", o.position, k);
    case OutcomeStatus::kExcluded:
      return o.reason ? fmt::format("excluded because {}", o.reason->message) : "excluded";
  }
  return {};
}

std::string CounterfactualSentences(const CounterfactualMaterials& m, const Vocabulary& vocab) {
  const auto& cfs = m.counterfactuals;
  const std::string goal = TargetPhrase(m.target);
  if (cfs.empty()) {
    return fmt::format("No change of up to {} {} would {}.", m.max_edits,
                       Plural(m.max_edits, "edit", "edits"), goal);
  }
  if (cfs.front().edit_distance == 0) return "No change is needed for that.";
  std::string out = fmt::format("The smallest change that would {} is to {} ({} {}).", goal,
                                DescribeEdits(cfs.front().edits, vocab),
                                cfs.front().edit_distance,
                                Plural(cfs.front().edit_distance, "edit", "edits"));
  if (cfs.size() > 1) {
    std::vector<std::string> others;
    for (std::size_t i = 1; i < cfs.size(); ++i) others.push_back(DescribeEdits(cfs[i].edits, vocab));
    out += fmt::format(" Other options: {}.", Join(others, "; "));
  }
  return out;
}

std::string RealizeWhy(const WhyMaterials& m, const ExplanationContext& ctx,
                       const Vocabulary& vocab) {
  std::vector<std::string> out = {Opening(ctx, vocab)};
  if (ctx.decision.status == OutcomeStatus::kExcluded && ctx.decision.exclusion) {
    out.push_back(Blocker(*ctx.decision.exclusion, ctx, vocab));
  } else {
    std::vector<std::size_t> order(m.attributions.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return m.attributions[a].phi > m.attributions[b].phi;
    });
    std::vector<std::string> reasons;
    for (std::size_t i : order) {
      if (reasons.size() == 2 || m.attributions[i].phi <= 1e-12) break;
      if (auto f = FindFeature(m.attributions[i].feature)) {
        reasons.push_back(FeaturePhrase(*f, ctx));
      }
    }
    const std::string verb =
        ctx.decision.status == OutcomeStatus::kIncluded ? "It was recommended" : "It scored";
    if (reasons.empty()) {
      out.push_back(fmt::format("{} without any feature adding to its score.", verb));
    } else {
      out.push_back(fmt::format("{} because {}.", verb, Join(reasons, " and ")));
    }
    out.push_back(fmt::format("Its score is {:.2f}.", ctx.decision.score));
  }
  if (m.pdp.size() >= 2) {
    out.push_back(fmt::format("Sweeping {} from {:.2f} to {:.2f} moves the score from {:.2f} to "
                              "{:.2f}.",
                              Humanize(m.pdp_feature), m.pdp.front().value, m.pdp.back().value,
                              m.pdp.front().score, m.pdp.back().score));
  }
  out.push_back("Method: exact Shapley attribution of the recipe score with a partial-dependence "
                "sweep.");
  return Join(out, " ");
}

std::string RealizeFreeForm(const WhyMaterials& m, const ExplanationContext& ctx,
                            const Vocabulary& vocab) {
  std::vector<std::string> out = {Opening(ctx, vocab)};
  std::vector<std::string> parts;
  for (const auto& a : m.attributions) {
    parts.push_back(fmt::format("{} {:.2f}", Humanize(a.feature), a.actual_value));
  }
  out.push_back(fmt::format(
      "This question is outside the predefined explanation types, so here is the score "
      "breakdown instead: {}.",
      Join(parts, ", ")));
  out.push_back("Switch to LLM mode for an open-ended answer.");
  out.push_back("Method: exact Shapley attribution of the recipe score.");
  return Join(out, " ");
}

std::string RealizeCounterfactual(IntentKind intent, const CounterfactualMaterials& m,
                                  const ExplanationContext& ctx, const Vocabulary& vocab) {
  std::vector<std::string> out = {Opening(ctx, vocab)};
  if (intent == IntentKind::kWhyNot) {
    if (ctx.decision.status == OutcomeStatus::kExcluded && ctx.decision.exclusion) {
      out.push_back(Blocker(*ctx.decision.exclusion, ctx, vocab));
    } else if (ctx.decision.status == OutcomeStatus::kIncluded) {
      out.push_back(fmt::format("It was in fact recommended at rank {}.", ctx.decision.position));
    }
  }
  if (m.scenario) {
    out.push_back(fmt::format("If you {}, {} would be {}.", DescribeEdits(m.scenario->edits, vocab),
                              ctx.recipe.name,
                              OutcomePhrase(m.scenario->resulting_outcome, ctx.decision.k)));
    if (!m.scenario_top.empty()) {
      out.push_back(fmt::format("The top recommendation would then be {}.", m.scenario_top));
    }
  }
  out.push_back(CounterfactualSentences(m, vocab));
  out.push_back("Method: counterfactual search over your ingredients and profile.");
  return Join(out, " ");
}

std::string RealizeContrastive(const ContrastiveMaterials& m, const ExplanationContext& ctx,
                               const Vocabulary& vocab) {
  const auto& c = m.contrastive;
  auto labels = [&](const std::vector<std::string>& items) {
    std::vector<std::string> out;
    for (const auto& i : items) {
      auto it = c.labels.find(i);
      out.push_back(it == c.labels.end() ? i : it->second);
    }
    return Join(out, " and ");
  };
  const auto& pp = c.explanation.pertinent_positives;
  const auto& pn = c.explanation.pertinent_negatives;
  std::vector<std::string> out = {Opening(ctx, vocab)};
  switch (c.decision.status) {
    case OutcomeStatus::kExcluded:
      if (pp.empty()) {
        out.push_back("No single part of the recipe explains the exclusion.");
      } else {
        out.push_back(fmt::format("To adapt it, replace {}: {} the smallest set behind the "
                                  "exclusion.",
                                  labels(pp), Plural(pp.size(), "that item is", "those items are")));
      }
      break;
    case OutcomeStatus::kIncluded:
      if (pp.empty()) {
        out.push_back("None of its features is needed on its own to keep it recommended.");
      } else {
        out.push_back(fmt::format("It stays recommended as long as it keeps its {}.", labels(pp)));
      }
      if (pn.empty()) {
        out.push_back("No addition of up to two allergens or restricted items would remove it.");
      } else {
        out.push_back(fmt::format("Adding {} would take it out of your recommendations, so keep "
                                  "substitutions free of {}.",
                                  labels(pn), Plural(pn.size(), "it", "them")));
      }
      break;
    case OutcomeStatus::kBelowCutoff:
      if (pn.empty()) {
        out.push_back(fmt::format(
            "No improvement in up to two features would bring it into your top {}.",
            ctx.decision.k));
      } else {
        out.push_back(fmt::format("It would enter your top {} with full {}.", ctx.decision.k,
                                  labels(pn)));
      }
      break;
  }
  out.push_back("Method: contrastive explanation with pertinent positives and negatives.");
  return Join(out, " ");
}

[[noreturn]] void ThrowMissing(IntentKind intent, std::string_view expected) {
  throw Error(ErrorCode::kMaterialsMissing,
              fmt::format("{} needs {} materials", IntentName(intent), expected),
              {{"intent", IntentName(intent)}, {"expected", expected}});
}

}  // namespace

std::string FillTemplatePrompt(const ExplanationContext& ctx, const Vocabulary& vocab) {
  const PromptSlots s = RenderSlots(SlotInputsOf(ctx), vocab);
  return fmt::format(
      "Explain briefly why the recipe {} was recommended to a user with a {} diet and a health "
      "goal of {}, considering available ingredients: {}. Provide the key reason(s) based on "
      "matching dietary and nutritional features.",
      s.recipe_name, s.dietary_preference, s.health_goal, s.ingredient_list);
}

std::string RealizeTemplate(IntentKind intent, const Materials& materials,
                            const ExplanationContext& ctx, const Vocabulary& vocab) {
  switch (intent) {
    case IntentKind::kWhy:
    case IntentKind::kFreeForm: {
      const auto* m = std::get_if<WhyMaterials>(&materials);
      if (!m || m->attributions.empty()) ThrowMissing(intent, "attribution");
      return intent == IntentKind::kWhy ? RealizeWhy(*m, ctx, vocab)
                                        : RealizeFreeForm(*m, ctx, vocab);
    }
    case IntentKind::kWhyNot:
    case IntentKind::kWhatIf: {
      const auto* m = std::get_if<CounterfactualMaterials>(&materials);
      if (!m) ThrowMissing(intent, "counterfactual");
      return RealizeCounterfactual(intent, *m, ctx, vocab);
    }
    case IntentKind::kHowTo: {
      if (const auto* c = std::get_if<ContrastiveMaterials>(&materials)) {
        return RealizeContrastive(*c, ctx, vocab);
      }
      if (const auto* m = std::get_if<CounterfactualMaterials>(&materials)) {
        return RealizeCounterfactual(intent, *m, ctx, vocab);
      }
      ThrowMissing(intent, "contrastive or counterfactual");
    }
  }
  ThrowMissing(intent, "matching");
}

nlohmann::json ToJson(const Materials& m, const Vocabulary& vocab) {
  if (const auto* w = std::get_if<WhyMaterials>(&m)) {
    nlohmann::json attributions = nlohmann::json::array();
    for (const auto& a : w->attributions) attributions.push_back(ToJson(a));
    nlohmann::json pdp = nlohmann::json::array();
    for (const auto& p : w->pdp) pdp.push_back(ToJson(p));
    return {{"kind", "attribution"},
            {"attributions", attributions},
            {"pdp", {{"feature", w->pdp_feature}, {"points", pdp}}}};
  }
  if (const auto* c = std::get_if<CounterfactualMaterials>(&m)) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& cf : c->counterfactuals) list.push_back(ToJson(cf, vocab));
    nlohmann::json j = {{"kind", "counterfactual"},
                        {"target", c->target.Describe()},
                        {"max_edits", c->max_edits},
                        {"counterfactuals", list}};
    if (c->scenario) {
      j["scenario"] = ToJson(*c->scenario, vocab);
      j["scenario_top"] = c->scenario_top;
    }
    return j;
  }
  const auto& c = std::get<ContrastiveMaterials>(m).contrastive;
  return {{"kind", "contrastive"},
          {"decision", ToJson(c.decision)},
          {"pertinent_positives", c.explanation.pertinent_positives},
          {"pertinent_negatives", c.explanation.pertinent_negatives},
          {"labels", c.labels}};
}

}  // namespace pilar
