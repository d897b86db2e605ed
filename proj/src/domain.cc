#include "pilar/domain.h"

#include <algorithm>
#include <cctype>
#include <fstream>
#include <limits>
#include <sstream>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

bool IsCanonicalId(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_';
  });
}

bool IsProfileId(std::string_view s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-' || c == '.';
  });
}

std::vector<std::string> StringList(const nlohmann::json& j, const char* key) {
  std::vector<std::string> out;
  if (!j.contains(key)) return out;
  for (const auto& v : j.at(key)) out.push_back(v.get<std::string>());
  return out;
}

}  // namespace

Vocabulary Vocabulary::FromJson(const nlohmann::json& j) {
  Vocabulary v;
  try {
    v.version_ = j.value("version", "0");
    v.diets_ = StringList(j, "diets");
    v.health_goals_ = StringList(j, "health_goals");
    v.tags_ = StringList(j, "tags");
    if (j.contains("ingredients")) {
      for (const auto& item : j.at("ingredients")) {
        Ingredient ing;
        ing.id = item.at("id").get<std::string>();
        ing.display_name = item.value("display_name", Humanize(ing.id));
        for (const auto& t : item.value("tags", nlohmann::json::array())) {
          ing.tags.insert(t.get<std::string>());
        }
        v.ingredients_.push_back(std::move(ing));
      }
    }
    if (j.contains("diet_conflicts")) {
      for (const auto& [diet, tags] : j.at("diet_conflicts").items()) {
        TagSet set;
        for (const auto& t : tags) set.insert(t.get<std::string>());
        v.diet_conflicts_[diet] = std::move(set);
      }
    }
    if (j.contains("synonyms")) {
      for (const auto& [raw, id] : j.at("synonyms").items()) {
        v.synonyms_[CanonicalToken(raw)] = id.get<std::string>();
      }
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("malformed vocabulary: {}", e.what()));
  }

  std::vector<std::string> problems;
  for (std::size_t i = 0; i < v.ingredients_.size(); ++i) {
    const auto& ing = v.ingredients_[i];
    if (!IsCanonicalId(ing.id)) problems.push_back("bad ingredient id '" + ing.id + "'");
    if (!v.ingredient_index_.emplace(ing.id, i).second) {
      problems.push_back("duplicate ingredient id '" + ing.id + "'");
    }
    for (const auto& t : ing.tags) {
      if (!v.IsTag(t)) problems.push_back("ingredient " + ing.id + " has unknown tag " + t);
    }
  }
  for (const auto& g : v.health_goals_) {
    if (!v.IsTag(g)) problems.push_back("health goal " + g + " missing from tags");
  }
  for (const auto& [raw, id] : v.synonyms_) {
    // A synonym must not shadow a real id, or normalization stops being idempotent.
    if (v.IsIngredient(raw)) problems.push_back("synonym '" + raw + "' shadows an ingredient id");
    if (!v.IsIngredient(id)) problems.push_back("synonym '" + raw + "' targets unknown id " + id);
  }
  for (const auto& [diet, tags] : v.diet_conflicts_) {
    if (!v.IsDiet(diet)) problems.push_back("conflict table names unknown diet " + diet);
    for (const auto& t : tags) {
      if (!v.IsTag(t)) problems.push_back("conflict table names unknown tag " + t);
    }
  }
  if (!problems.empty()) {
    throw Error(ErrorCode::kDataFile, "invalid vocabulary: " + problems.front(),
                {{"problems", problems}});
  }
  return v;
}

Vocabulary Vocabulary::Load(const std::filesystem::path& path) {
  return FromJson(ReadJsonFile(path));
}

bool Vocabulary::IsDiet(std::string_view s) const {
  return std::find(diets_.begin(), diets_.end(), s) != diets_.end();
}

bool Vocabulary::IsHealthGoal(std::string_view s) const {
  return std::find(health_goals_.begin(), health_goals_.end(), s) != health_goals_.end();
}

bool Vocabulary::IsTag(std::string_view s) const {
  return std::find(tags_.begin(), tags_.end(), s) != tags_.end();
}

bool Vocabulary::IsIngredient(std::string_view s) const {
  return ingredient_index_.find(s) != ingredient_index_.end();
}

const Ingredient* Vocabulary::FindIngredient(std::string_view id) const {
  auto it = ingredient_index_.find(id);
  return it == ingredient_index_.end() ? nullptr : &ingredients_[it->second];
}

const TagSet& Vocabulary::DietConflicts(std::string_view diet) const {
  static const TagSet kEmpty;
  auto it = diet_conflicts_.find(diet);
  return it == diet_conflicts_.end() ? kEmpty : it->second;
}

std::string Vocabulary::DisplayName(std::string_view id) const {
  const Ingredient* ing = FindIngredient(id);
  return ing ? ing->display_name : std::string(id);
}

TagSet Vocabulary::EffectiveTags(const Recipe& recipe) const {
  TagSet out = recipe.tags;
  for (const auto& id : recipe.ingredients) {
    if (const Ingredient* ing = FindIngredient(id)) {
      out.insert(ing->tags.begin(), ing->tags.end());
    }
  }
  return out;
}

std::string CanonicalToken(std::string_view raw) {
  std::string out;
  out.reserve(raw.size());
  bool pending_sep = false;
  for (unsigned char c : raw) {
    if (std::isspace(c) || c == '-' || c == '_') {
      pending_sep = true;
      continue;
    }
    char lower = static_cast<char>(std::tolower(c));
    if (!((lower >= 'a' && lower <= 'z') || (lower >= '0' && lower <= '9'))) continue;
    if (pending_sep && !out.empty()) out.push_back('_');
    pending_sep = false;
    out.push_back(lower);
  }
  return out;
}

NameLookup NormalizeIngredientName(std::string_view raw, const Vocabulary& vocab) {
  std::string token = CanonicalToken(raw);
  if (token.empty()) {
    throw Error(ErrorCode::kEmptyInput, "ingredient name is empty");
  }
  if (vocab.IsIngredient(token)) return {token, true};
  auto it = vocab.synonyms().find(token);
  if (it != vocab.synonyms().end()) return {it->second, true};
  return {token, false};
}

ProfileValidation ValidateProfile(const ProfileDraft& draft, const Vocabulary& vocab) {
  ProfileValidation result;
  auto& out = result.violations;
  if (!IsProfileId(draft.id)) {
    out.push_back({"id", "id must be non-empty and use [A-Za-z0-9_.-]"});
  }
  if (!vocab.IsDiet(draft.diet)) {
    out.push_back({"diet", fmt::format("unknown diet: {}", draft.diet)});
  }
  for (const auto& g : draft.health_goals) {
    if (!vocab.IsHealthGoal(g)) {
      out.push_back({"health_goals", fmt::format("unknown health goal: {}", g)});
    }
  }
  for (const auto& a : draft.allergens) {
    if (!vocab.IsIngredient(a) && !vocab.IsTag(a)) {
      out.push_back({"allergens", fmt::format("unknown allergen: {}", a)});
    }
  }
  if (draft.calorie_target <= 0) {
    out.push_back({"calorie_target", "calorie_target must be > 0"});
  } else if (draft.calorie_target > std::numeric_limits<int>::max()) {
    out.push_back({"calorie_target", "calorie_target out of range"});
  }
  if (out.empty()) {
    UserProfile p;
    p.id = draft.id;
    p.diet = draft.diet;
    p.health_goals.insert(draft.health_goals.begin(), draft.health_goals.end());
    p.allergens.insert(draft.allergens.begin(), draft.allergens.end());
    p.calorie_target = static_cast<int>(draft.calorie_target);
    result.profile = std::move(p);
  }
  return result;
}

ProfileValidation ValidateProfileJson(const nlohmann::json& j, const Vocabulary& vocab) {
  if (!j.is_object()) {
    return {std::nullopt, {{"", "profile must be a JSON object"}}};
  }
  ProfileDraft draft;
  std::vector<Violation> shape;
  auto read_string = [&](const char* key, std::string& dst) {
    if (!j.contains(key)) {
      shape.push_back({key, fmt::format("{} is required", key)});
    } else if (!j.at(key).is_string()) {
      shape.push_back({key, fmt::format("{} must be a string", key)});
    } else {
      dst = j.at(key).get<std::string>();
    }
  };
  auto read_list = [&](const char* key, std::vector<std::string>& dst) {
    if (!j.contains(key)) return;
    const auto& arr = j.at(key);
    if (!arr.is_array() ||
        !std::all_of(arr.begin(), arr.end(), [](const auto& e) { return e.is_string(); })) {
      shape.push_back({key, fmt::format("{} must be an array of strings", key)});
      return;
    }
    for (const auto& e : arr) dst.push_back(e.get<std::string>());
  };
  read_string("id", draft.id);
  read_string("diet", draft.diet);
  read_list("health_goals", draft.health_goals);
  read_list("allergens", draft.allergens);
  if (!j.contains("calorie_target")) {
    shape.push_back({"calorie_target", "calorie_target is required"});
  } else if (!j.at("calorie_target").is_number_integer()) {
    shape.push_back({"calorie_target", "calorie_target must be an integer"});
  } else {
    draft.calorie_target = j.at("calorie_target").get<std::int64_t>();
  }

  ProfileValidation result = ValidateProfile(draft, vocab);
  if (!shape.empty()) {
    // Drop invariant messages for fields that already failed to parse.
    std::vector<Violation> merged = shape;
    for (auto& v : result.violations) {
      bool dup = std::any_of(shape.begin(), shape.end(),
                             [&](const Violation& s) { return s.field == v.field; });
      if (!dup) merged.push_back(std::move(v));
    }
    result.violations = std::move(merged);
    result.profile.reset();
  }
  return result;
}

std::vector<Violation> ValidateRecipe(const Recipe& recipe, const Vocabulary& vocab) {
  std::vector<Violation> out;
  if (!IsCanonicalId(recipe.id)) out.push_back({"id", "id must match [a-z0-9_]+"});
  if (recipe.title.empty()) out.push_back({"title", "title must be non-empty"});
  if (recipe.ingredients.empty()) {
    out.push_back({"ingredients", "ingredients must be non-empty"});
  }
  std::set<std::string> seen;
  for (const auto& id : recipe.ingredients) {
    if (!vocab.IsIngredient(id)) {
      out.push_back({"ingredients", fmt::format("unknown ingredient: {}", id)});
    }
    if (!seen.insert(id).second) {
      out.push_back({"ingredients", fmt::format("duplicate ingredient: {}", id)});
    }
  }
  for (const auto& t : recipe.tags) {
    if (!vocab.IsTag(t)) out.push_back({"tags", fmt::format("unknown tag: {}", t)});
  }
  if (recipe.calories_per_serving <= 0) {
    out.push_back({"calories_per_serving", "calories_per_serving must be > 0"});
  }
  // A diet label on the recipe must not contradict its own ingredients.
  const TagSet effective = vocab.EffectiveTags(recipe);
  for (const auto& t : recipe.tags) {
    if (!vocab.IsDiet(t)) continue;
    for (const auto& conflict : vocab.DietConflicts(t)) {
      if (effective.count(conflict)) {
        out.push_back({"tags", fmt::format("labelled {} but contains {}", t, conflict)});
      }
    }
  }
  return out;
}

std::vector<CorpusViolation> ValidateCorpusJson(const nlohmann::json& corpus,
                                                const Vocabulary& vocab) {
  std::vector<CorpusViolation> out;
  if (!corpus.is_array()) {
    out.push_back({"", 0, "corpus must be a JSON array of recipes"});
    return out;
  }
  std::map<std::string, std::size_t> first_index;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto& item = corpus[i];
    std::string rid = item.is_object() ? item.value("id", "") : "";
    Recipe recipe;
    try {
      recipe = item.get<Recipe>();
    } catch (const nlohmann::json::exception& e) {
      out.push_back({rid, i, fmt::format("malformed recipe: {}", e.what())});
      continue;
    }
    for (const auto& v : ValidateRecipe(recipe, vocab)) {
      out.push_back({rid, i, v.message});
    }
    auto [it, inserted] = first_index.emplace(rid, i);
    if (!inserted) {
      out.push_back({rid, i, fmt::format("duplicate recipe id (first at index {})", it->second)});
    }
  }
  return out;
}

std::vector<Recipe> CorpusFromJson(const nlohmann::json& j, const Vocabulary& vocab) {
  auto violations = ValidateCorpusJson(j, vocab);
  if (!violations.empty()) {
    nlohmann::json list = nlohmann::json::array();
    for (const auto& v : violations) {
      list.push_back({{"recipe_id", v.recipe_id}, {"index", v.index}, {"message", v.message}});
    }
    throw Error(ErrorCode::kDataFile,
                fmt::format("corpus has {} violation(s); first: {} ({})", violations.size(),
                            violations.front().message, violations.front().recipe_id),
                {{"violations", list}});
  }
  return j.get<std::vector<Recipe>>();
}

std::vector<Recipe> LoadCorpus(const std::filesystem::path& path, const Vocabulary& vocab) {
  return CorpusFromJson(ReadJsonFile(path), vocab);
}

nlohmann::json ReadJsonFile(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error(ErrorCode::kDataFile, fmt::format("cannot open {}", path.string()),
                {{"path", path.string()}});
  }
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("{}: {}", path.string(), e.what()),
                {{"path", path.string()}});
  }
}

void to_json(nlohmann::json& j, const Ingredient& v) {
  j = {{"id", v.id}, {"display_name", v.display_name}, {"tags", v.tags}};
}

void to_json(nlohmann::json& j, const UserProfile& v) {
  j = {{"id", v.id},
       {"diet", v.diet},
       {"health_goals", v.health_goals},
       {"allergens", v.allergens},
       {"calorie_target", v.calorie_target}};
}

void from_json(const nlohmann::json& j, UserProfile& v) {
  v.id = j.at("id").get<std::string>();
  v.diet = j.at("diet").get<std::string>();
  v.health_goals.clear();
  v.allergens.clear();
  for (const auto& g : j.value("health_goals", nlohmann::json::array())) {
    v.health_goals.insert(g.get<std::string>());
  }
  for (const auto& a : j.value("allergens", nlohmann::json::array())) {
    v.allergens.insert(a.get<std::string>());
  }
  v.calorie_target = j.at("calorie_target").get<int>();
}

void to_json(nlohmann::json& j, const Recipe& v) {
  j = {{"id", v.id},
       {"title", v.title},
       {"ingredients", v.ingredients},
       {"tags", v.tags},
       {"calories_per_serving", v.calories_per_serving},
       {"steps", v.steps}};
}

void from_json(const nlohmann::json& j, Recipe& v) {
  v.id = j.at("id").get<std::string>();
  v.title = j.at("title").get<std::string>();
  v.ingredients = j.at("ingredients").get<std::vector<std::string>>();
  v.tags.clear();
  for (const auto& t : j.value("tags", nlohmann::json::array())) {
    v.tags.insert(t.get<std::string>());
  }
  v.calories_per_serving = j.at("calories_per_serving").get<int>();
  v.steps = j.value("steps", std::vector<std::string>{});
}

void to_json(nlohmann::json& j, const Violation& v) {
  j = {{"field", v.field}, {"message", v.message}};
}

std::string Humanize(std::string_view id) {
  std::string out(id);
  std::replace(out.begin(), out.end(), '_', ' ');
  return out;
}

}  // namespace pilar
