#include "pilar/llm.h"

#include <algorithm>
#include <cctype>
#include <regex>
#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pilar/error.h"

namespace pilar {

namespace {

[[noreturn]] void BadExample(std::size_t index, const std::string& what) {
  throw Error(ErrorCode::kDataFile, fmt::format("icl example {}: {}", index, what),
              {{"index", index}});
}

std::string Lower(std::string_view s) {
  std::string out(s);
  for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool IsWordChar(char c) { return std::isalnum(static_cast<unsigned char>(c)) != 0; }

// Finds `phrase` as a whole word sequence in `text` and blanks every match.
bool FindAndMask(std::string& text, const std::string& phrase) {
  if (phrase.empty()) return false;
  bool found = false;
  std::size_t pos = 0;
  while ((pos = text.find(phrase, pos)) != std::string::npos) {
    const std::size_t end = pos + phrase.size();
    const bool left_ok = pos == 0 || !IsWordChar(text[pos - 1]);
    const bool right_ok = end == text.size() || !IsWordChar(text[end]);
    if (left_ok && right_ok) {
      std::fill(text.begin() + static_cast<std::ptrdiff_t>(pos),
                text.begin() + static_cast<std::ptrdiff_t>(end), ' ');
      found = true;
    }
    pos = end;
  }
  return found;
}

std::string LineValue(const std::string& text, std::string_view key) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind(key, 0) == 0) return line.substr(key.size());
  }
  return {};
}

}  // namespace

IclStore IclStore::FromJson(const nlohmann::json& j, const Vocabulary& vocab) {
  IclStore store;
  try {
    store.version_ = j.at("version").get<std::string>();
    std::size_t index = 0;
    for (const auto& e : j.at("examples")) {
      IclExample ex;
      const auto intent_name = e.at("intent").get<std::string>();
      auto kind = ParseIntentKind(intent_name);
      if (!kind) BadExample(index, "unknown intent " + intent_name);
      ex.intent = *kind;
      const auto& c = e.at("context");
      ex.context.diet = c.at("diet").get<std::string>();
      if (!vocab.IsDiet(ex.context.diet)) BadExample(index, "unknown diet " + ex.context.diet);
      for (const auto& g : c.at("health_goals")) {
        const auto goal = g.get<std::string>();
        if (!vocab.IsHealthGoal(goal)) BadExample(index, "unknown health goal " + goal);
        ex.context.health_goals.insert(goal);
      }
      for (const auto& i : c.at("ingredients")) {
        const auto id = i.get<std::string>();
        if (!vocab.IsIngredient(id)) BadExample(index, "unknown ingredient " + id);
        ex.context.ingredients.insert(id);
      }
      ex.context.recipe_name = c.at("recipe_name").get<std::string>();
      for (const auto& t : c.at("recipe_tags")) {
        const auto tag = t.get<std::string>();
        if (!vocab.IsTag(tag)) BadExample(index, "unknown tag " + tag);
        ex.context.recipe_tags.insert(tag);
      }
      ex.context.question = e.at("query").get<std::string>();
      ex.explanation = e.at("explanation").get<std::string>();
      if (ex.context.recipe_name.empty() || ex.context.question.empty() ||
          ex.explanation.empty() || ex.context.ingredients.empty()) {
        BadExample(index, "empty field");
      }
      store.examples_.push_back(std::move(ex));
      ++index;
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("icl examples: {}", e.what()));
  }
  return store;
}

IclStore IclStore::Load(const std::filesystem::path& path, const Vocabulary& vocab) {
  return FromJson(ReadJsonFile(path), vocab);
}

std::vector<IclExample> IclStore::ForIntent(IntentKind intent, std::size_t k) const {
  std::vector<IclExample> out;
  for (const auto& e : examples_) {
    if (out.size() == k) break;
    if (e.intent == intent) out.push_back(e);
  }
  if (out.size() < k) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("need {} examples for {}, store has {}", k, IntentName(intent),
                            out.size()),
                {{"intent", IntentName(intent)}, {"k", k}, {"available", out.size()}});
  }
  return out;
}

std::size_t IclStore::Count(IntentKind intent) const {
  return static_cast<std::size_t>(std::count_if(
      examples_.begin(), examples_.end(), [&](const IclExample& e) { return e.intent == intent; }));
}

std::string FillLlmPrompt(const PromptSlots& s) {
  return fmt::format(
      "Please provide a concise, logical, and personalized explanation tailored to a user with a "
      "{} diet and a health goal of {}. The user currently has these ingredients: {}. The "
      "suggested recipe is {}, labeled as {}. Clearly address the user's query: {}.",
      s.dietary_preference, s.health_goal, s.ingredient_list, s.recipe_name, s.recipe_tags,
      s.user_question);
}

std::string AssemblePrompt(const ExplanationContext& ctx, const std::vector<IclExample>& examples,
                           std::size_t k, const Vocabulary& vocab) {
  const PromptSlots slots = RenderSlots(SlotInputsOf(ctx), vocab);
  if (examples.size() < k) {
    throw Error(ErrorCode::kInvalidArgument,
                fmt::format("need {} examples, got {}", k, examples.size()));
  }
  std::string out;
  for (std::size_t i = 0; i < k; ++i) {
    out += fmt::format("Example {}:\n{}\nExplanation: {}\n\n", i + 1,
                       FillLlmPrompt(RenderSlots(examples[i].context, vocab)),
                       examples[i].explanation);
  }
  out += FillLlmPrompt(slots);
  return out;
}

std::string SystemMessage(const ExplanationContext& ctx) {
  std::string decision;
  switch (ctx.decision.status) {
    case OutcomeStatus::kIncluded:
      decision = fmt::format("included at rank {} of {}", ctx.decision.position, ctx.decision.k);
      break;
    case OutcomeStatus::kBelowCutoff:
      decision = fmt::format("ranked {}, outside the top {}", ctx.decision.position,
                             ctx.decision.k);
      break;
    case OutcomeStatus::kExcluded:
      decision = ctx.decision.exclusion
                     ? fmt::format("excluded ({})", ctx.decision.exclusion->message)
                     : "excluded";
      break;
  }
  const std::string top = ctx.decision.top_feature.empty() ? "none" : ctx.decision.top_feature;
  return fmt::format(
      "You are PILAR, a cooking assistant that explains recipe recommendations. Use only the "
      "facts in the user message and below.\nIntent: {}\nDecision: {}\nTop factor: {}",
      IntentName(ctx.intent.kind), decision, top);
}

nlohmann::json RequestBody(const LlmRequest& req) {
  return {{"model", req.params.model_id},
          {"messages",
           {{{"role", "system"}, {"content", req.system}},
            {{"role", "user"}, {"content", req.prompt}}}},
          {"temperature", req.params.temperature},
          {"max_tokens", req.params.max_tokens}};
}

std::string MockLlmClient::Complete(const LlmRequest& req) {
  ++calls_;
  {
    std::lock_guard lock(mu_);
    last_body_ = RequestBody(req);
  }
  constexpr std::string_view kOpen = "The suggested recipe is ";
  constexpr std::string_view kClose = ", labeled as ";
  std::string name = "unknown";
  if (auto start = req.prompt.rfind(kOpen); start != std::string::npos) {
    start += kOpen.size();
    if (auto end = req.prompt.find(kClose, start); end != std::string::npos) {
      name = req.prompt.substr(start, end - start);
    }
  }
  std::string top = LineValue(req.system, "Top factor: ");
  if (top.empty()) top = "none";
  std::string intent = LineValue(req.system, "Intent: ");
  if (intent.empty()) intent = "FREE_FORM";
  std::string decision = LineValue(req.system, "Decision: ");
  if (decision.empty()) decision = "unknown";
  return fmt::format("[mock] Recipe: {}. Intent: {}. Top factor: {}. Decision: {}.", name, intent,
                     Humanize(top), decision);
}

nlohmann::json MockLlmClient::last_body() const {
  std::lock_guard lock(mu_);
  return last_body_;
}

std::string TruncateToTokens(const std::string& text, int max_tokens) {
  std::istringstream in(text);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  if (max_tokens < 0 || words.size() <= static_cast<std::size_t>(max_tokens)) return text;
  words.resize(static_cast<std::size_t>(max_tokens));
  return fmt::format("{}", fmt::join(words, " "));
}

std::string Generate(const LlmRequest& req, LlmClient& client) {
  return TruncateToTokens(client.Complete(req), req.params.max_tokens);
}

std::vector<std::string> GroundednessCheck(const std::string& text, const ExplanationContext& ctx,
                                           const Vocabulary& vocab) {
  std::vector<std::string> flags;
  std::string lower = Lower(text);
  const std::string name = Lower(ctx.recipe.name);
  if (name.empty() || !FindAndMask(lower, name)) flags.push_back("missing recipe name");

  std::set<IngredientId> allowed(ctx.recipe.ingredients.begin(), ctx.recipe.ingredients.end());
  allowed.insert(ctx.detected.begin(), ctx.detected.end());
  std::vector<std::pair<std::string, IngredientId>> phrases;
  for (const auto& ing : vocab.ingredients()) {
    phrases.emplace_back(Lower(ing.display_name), ing.id);
    phrases.emplace_back(Humanize(ing.id), ing.id);
  }
  for (const auto& [alias, id] : vocab.synonyms()) phrases.emplace_back(Lower(Humanize(alias)), id);
  std::sort(phrases.begin(), phrases.end(), [](const auto& a, const auto& b) {
    if (a.first.size() != b.first.size()) return a.first.size() > b.first.size();
    return a < b;
  });
  std::set<IngredientId> flagged;
  for (const auto& [phrase, id] : phrases) {
    if (!FindAndMask(lower, phrase)) continue;
    if (!allowed.count(id) && flagged.insert(id).second) {
      flags.push_back(fmt::format("ungrounded ingredient: {}", vocab.DisplayName(id)));
    }
  }

  const auto& ex = ctx.decision.exclusion;
  if (ctx.decision.status == OutcomeStatus::kExcluded && ex &&
      ex->kind == ExclusionReason::Kind::kDietConflict) {
    const std::regex claim(
        fmt::format(R"(\b(fits|fit|suits|suit|suitable for|compatible with|works for|good for|)"
                    R"(perfect for|safe for|ideal for|matches)\b[^.!?]*\b{}\b)",
                    Lower(Humanize(ctx.profile.diet))),
        std::regex::ECMAScript | std::regex::icase);
    if (std::regex_search(text, claim)) flags.push_back("contradicts exclusion");
  }
  return flags;
}

}  // namespace pilar
