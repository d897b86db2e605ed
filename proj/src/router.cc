#include "pilar/router.h"

#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pilar/attribution.h"
#include "pilar/contrastive.h"
#include "pilar/error.h"

namespace pilar {

namespace {

constexpr double kPdpGrid[] = {0.0, 0.25, 0.5, 0.75, 1.0};

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool ContainsWord(std::string_view text, std::string_view phrase) {
  if (phrase.empty()) return false;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string_view::npos) {
    const std::size_t end = pos + phrase.size();
    const bool left = pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]));
    const bool right = end == text.size() || !std::isalnum(static_cast<unsigned char>(text[end]));
    if (left && right) return true;
    pos = end;
  }
  return false;
}

CounterfactualInstance InstanceOf(const RecommendationState& state, const std::string& recipe_id) {
  return {state.profile, state.detected, recipe_id, state.k};
}

WhyMaterials WhyFor(const ExplanationContext& ctx, const Recommender& rec) {
  WhyMaterials m;
  m.attributions = AttributeRecipeScore(ctx.decision.features, rec.weights());
  std::size_t best = 0;
  for (std::size_t i = 1; i < m.attributions.size(); ++i) {
    if (m.attributions[i].phi > m.attributions[best].phi) best = i;
  }
  m.pdp_feature = m.attributions[best].feature;
  m.pdp = RecipePartialDependence(ctx.decision.features, rec.weights(), m.pdp_feature, kPdpGrid);
  return m;
}

std::vector<Counterfactual> SearchOrEmpty(const ExplainDeps& deps,
                                          const CounterfactualInstance& instance,
                                          const CounterfactualTarget& target) {
  try {
    return DiverseCounterfactuals(deps.rec, deps.corpus, instance, target, deps.counterfactual);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kNoCounterfactualWithinBudget) throw;
    return {};
  }
}

Explanation DispatchTemplate(const ExplanationContext& ctx, const RecommendationState& state,
                             const ExplainDeps& deps) {
  const Vocabulary& vocab = deps.rec.vocab();
  const auto instance = InstanceOf(state, ctx.recipe.id);
  Explanation e;
  e.mode = ExplainMode::kTemplate;
  e.intent = ctx.intent;
  Materials materials;
  switch (ctx.intent.kind) {
    case IntentKind::kWhy:
      e.strategy = "shapley";
      materials = WhyFor(ctx, deps.rec);
      break;
    case IntentKind::kFreeForm:
      e.strategy = "shapley";
      e.limitation =
          "Template mode has no technique for open questions; it reports the score breakdown "
          "only.";
      materials = WhyFor(ctx, deps.rec);
      break;
    case IntentKind::kWhyNot: {
      e.strategy = "counterfactual";
      CounterfactualMaterials m;
      m.target = CounterfactualTarget::Include();
      m.max_edits = deps.counterfactual.max_edits;
      m.counterfactuals = SearchOrEmpty(deps, instance, m.target);
      materials = std::move(m);
      break;
    }
    case IntentKind::kWhatIf: {
      e.strategy = "counterfactual";
      CounterfactualMaterials m;
      m.target = ctx.decision.status == OutcomeStatus::kIncluded
                     ? CounterfactualTarget::Exclude()
                     : CounterfactualTarget::Include();
      m.max_edits = deps.counterfactual.max_edits;
      auto edits = ParseScenario(ctx.query, state.profile, state.detected, vocab);
      if (!edits.empty()) {
        m.scenario = EvaluateScenario(deps.rec, deps.corpus, instance, edits,
                                      deps.counterfactual.calorie_step_percent);
        const auto ranked =
            deps.rec.Rank(deps.corpus, m.scenario->profile, m.scenario->detected, state.k);
        if (!ranked.ranked.empty()) m.scenario_top = ranked.ranked.front().recipe.title;
      }
      m.counterfactuals = SearchOrEmpty(deps, instance, m.target);
      materials = std::move(m);
      break;
    }
    case IntentKind::kHowTo:
      e.strategy = "contrastive";
      materials = ContrastiveMaterials{ContrastiveForRecipe(deps.rec, deps.corpus, instance)};
      break;
  }
  e.text = RealizeTemplate(ctx.intent.kind, materials, ctx, vocab);
  e.materials = ToJson(materials, vocab);
  return e;
}

Explanation DispatchLlm(const ExplanationContext& ctx, const ExplainDeps& deps) {
  if (!deps.llm || !deps.icl) {
    throw Error(ErrorCode::kInvalidConfigValue, "llm mode is not configured",
                {{"key", "llm.provider"}, {"fallback_hint", "retry with mode=template"}});
  }
  const Vocabulary& vocab = deps.rec.vocab();
  Explanation e;
  e.mode = ExplainMode::kLlm;
  e.strategy = "llm_icl";
  e.intent = ctx.intent;
  const auto examples = deps.icl->ForIntent(ctx.intent.kind, deps.icl_k);
  LlmRequest req{SystemMessage(ctx), AssemblePrompt(ctx, examples, deps.icl_k, vocab),
                 deps.params};
  try {
    e.text = Generate(req, *deps.llm);
  } catch (const Error& err) {
    if (err.code() != ErrorCode::kEndpointTimeout && err.code() != ErrorCode::kEndpointError) {
      throw;
    }
    auto details = err.details();
    details["fallback_hint"] = "retry with mode=template";
    throw Error(err.code(), err.what(), details);
  }
  if (e.text.empty()) {
    throw Error(ErrorCode::kEndpointError, "endpoint returned an empty completion",
                {{"fallback_hint", "retry with mode=template"}});
  }
  e.flags = GroundednessCheck(e.text, ctx, vocab);
  return e;
}

}  // namespace

std::string_view ModeName(ExplainMode mode) {
  return mode == ExplainMode::kTemplate ? "template" : "llm";
}

std::optional<ExplainMode> ParseMode(std::string_view name) {
  if (name == "template") return ExplainMode::kTemplate;
  if (name == "llm") return ExplainMode::kLlm;
  return std::nullopt;
}

std::vector<Edit> ParseScenario(std::string_view query, const UserProfile& profile,
                                const std::set<IngredientId>& detected, const Vocabulary& vocab) {
  std::string q = NormalizeQuery(query);
  std::replace(q.begin(), q.end(), '-', ' ');
  std::vector<Edit> edits;

  // Longest diet name first so "gluten free" wins over shorter overlaps.
  std::vector<std::string> diets(vocab.diets().begin(), vocab.diets().end());
  std::stable_sort(diets.begin(), diets.end(),
                   [](const auto& a, const auto& b) { return a.size() > b.size(); });
  for (const auto& d : diets) {
    if (ContainsWord(q, Humanize(d))) {
      if (d != profile.diet) edits.push_back({EditKind::kSetDiet, d});
      break;
    }
  }
  for (const auto& g : vocab.health_goals()) {
    if (ContainsWord(q, Humanize(g)) && !profile.health_goals.count(g)) {
      edits.push_back({EditKind::kAddGoal, g});
      break;
    }
  }
  for (const auto& ing : vocab.ingredients()) {
    if (detected.count(ing.id)) continue;
    if (ContainsWord(q, Lower(ing.display_name))) {
      edits.push_back({EditKind::kAddIngredient, ing.id});
      break;
    }
  }
  return edits;
}

std::vector<std::string> TagDimensions(const Explanation& e, const ExplanationContext& ctx,
                                       const Vocabulary& vocab) {
  const std::string text = Lower(e.text);
  std::vector<std::string> tags;
  if (e.trigger == Trigger::kEvent) tags.push_back("when");
  tags.push_back("what");

  bool how = ContainsWord(text, "method");
  for (std::string_view word : {"shapley", "counterfactual", "contrastive", "in-context"}) {
    how = how || ContainsWord(text, word);
  }
  if (how) tags.push_back("how");

  bool who = ContainsWord(text, Humanize(ctx.profile.diet) + " diet") ||
             ContainsWord(text, "allergen") || ContainsWord(text, "calorie target") ||
             ContainsWord(text, "health goal");
  for (const auto& g : ctx.profile.health_goals) who = who || ContainsWord(text, Humanize(g));
  if (who) tags.push_back("who");

  bool where = false;
  for (const auto& id : ctx.detected) {
    where = where || ContainsWord(text, Lower(vocab.DisplayName(id)));
  }
  if (where) tags.push_back("where");
  return tags;
}

Explanation Dispatch(ExplainMode mode, const ExplanationContext& ctx,
                     const RecommendationState& state, const ExplainDeps& deps) {
  Explanation e = mode == ExplainMode::kTemplate ? DispatchTemplate(ctx, state, deps)
                                                 : DispatchLlm(ctx, deps);
  e.dimensions = TagDimensions(e, ctx, deps.rec.vocab());
  return e;
}

Explanation Explain(const IntentRules& rules, const RecommendationState& state,
                    const std::string& recipe_id, const std::string& query, ExplainMode mode,
                    const ExplainDeps& deps) {
  const Intent intent = rules.Classify(query);
  const auto ctx = BuildContext(state, recipe_id, query, intent, deps.rec);
  return Dispatch(mode, ctx, state, deps);
}

Explanation RecommendationNotice(const RecommendationState& state, const Vocabulary& vocab) {
  Explanation e;
  e.trigger = Trigger::kEvent;
  e.strategy = "notice";
  std::vector<std::string> names;
  for (const auto& s : state.result.ranked) {
    names.push_back(fmt::format("{}. {}", s.rank, s.recipe.title));
  }
  std::vector<std::string> have;
  for (const auto& id : state.detected) have.push_back(vocab.DisplayName(id));
  e.text = fmt::format(
      "New recommendations for your {} diet from the ingredients you have ({}): {}. {} {} left "
      "out by your restrictions.",
      Humanize(state.profile.diet), fmt::join(have, ", "),
      names.empty() ? std::string("none") : fmt::format("{}", fmt::join(names, ", ")),
      state.result.excluded.size(), state.result.excluded.size() == 1 ? "recipe was" : "recipes were");
  ExplanationContext ctx;
  ctx.detected = state.detected;
  ctx.profile = {state.profile.diet, state.profile.health_goals};
  e.dimensions = TagDimensions(e, ctx, vocab);
  return e;
}

nlohmann::json ToJson(const Explanation& e) {
  nlohmann::json j = {{"text", e.text},
                      {"mode", ModeName(e.mode)},
                      {"strategy", e.strategy},
                      {"intent", ToJson(e.intent)},
                      {"trigger", e.trigger == Trigger::kQuery ? "query" : "event"},
                      {"dimensions", e.dimensions},
                      {"flags", e.flags}};
  if (!e.limitation.empty()) j["limitation"] = e.limitation;
  if (!e.materials.is_null()) j["materials"] = e.materials;
  return j;
}

}  // namespace pilar
