#ifndef PILAR_DOMAIN_H_
#define PILAR_DOMAIN_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pilar {

using IngredientId = std::string;
using TagSet = std::set<std::string, std::less<>>;

struct Ingredient {
  IngredientId id;
  std::string display_name;
  TagSet tags;

  bool operator==(const Ingredient&) const = default;
};

struct UserProfile {
  std::string id;
  std::string diet;
  TagSet health_goals;
  TagSet allergens;
  int calorie_target = 0;

  bool operator==(const UserProfile&) const = default;
};

struct Recipe {
  std::string id;
  std::string title;
  std::vector<IngredientId> ingredients;
  TagSet tags;
  int calories_per_serving = 0;
  std::vector<std::string> steps;

  bool operator==(const Recipe&) const = default;
};

// One broken invariant. `field` names the offending member.
struct Violation {
  std::string field;
  std::string message;

  bool operator==(const Violation&) const = default;
};

// Closed vocabularies (diets, tags, goals, ingredient universe, synonyms and
// the diet conflict table). Loaded from a versioned JSON data file.
class Vocabulary {
 public:
  static Vocabulary FromJson(const nlohmann::json& j);
  static Vocabulary Load(const std::filesystem::path& path);

  const std::string& version() const { return version_; }
  const std::vector<std::string>& diets() const { return diets_; }
  const std::vector<std::string>& health_goals() const { return health_goals_; }
  const std::vector<std::string>& tags() const { return tags_; }
  const std::vector<Ingredient>& ingredients() const { return ingredients_; }
  const std::map<std::string, IngredientId, std::less<>>& synonyms() const {
    return synonyms_;
  }

  bool IsDiet(std::string_view s) const;
  bool IsHealthGoal(std::string_view s) const;
  bool IsTag(std::string_view s) const;
  bool IsIngredient(std::string_view s) const;
  const Ingredient* FindIngredient(std::string_view id) const;

  // Tags that disqualify a recipe for `diet`. Empty for unknown diets.
  const TagSet& DietConflicts(std::string_view diet) const;

  // Ingredient display name, or the id itself when unknown.
  std::string DisplayName(std::string_view id) const;

  // Recipe tags plus the tags of every ingredient in it.
  TagSet EffectiveTags(const Recipe& recipe) const;

 private:
  std::string version_;
  std::vector<std::string> diets_;
  std::vector<std::string> health_goals_;
  std::vector<std::string> tags_;
  std::vector<Ingredient> ingredients_;
  std::map<std::string, std::size_t, std::less<>> ingredient_index_;
  std::map<std::string, IngredientId, std::less<>> synonyms_;
  std::map<std::string, TagSet, std::less<>> diet_conflicts_;
};

// Lowercase, trim, and fold runs of whitespace/hyphens into '_'; drops
// anything outside [a-z0-9_]. Returns empty for input with no usable chars.
std::string CanonicalToken(std::string_view raw);

struct NameLookup {
  // Ingredient id when `known`, otherwise the canonical token as seen.
  std::string token;
  bool known = false;

  bool operator==(const NameLookup&) const = default;
};

// Maps a free-text detector/user label to an ingredient id. Unknown names are
// reported as such, never guessed. Throws Error(kEmptyInput).
NameLookup NormalizeIngredientName(std::string_view raw, const Vocabulary& vocab);

struct ProfileDraft {
  std::string id;
  std::string diet;
  std::vector<std::string> health_goals;
  std::vector<std::string> allergens;
  std::int64_t calorie_target = 0;
};

struct ProfileValidation {
  std::optional<UserProfile> profile;
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }
};

// Reports every violated invariant, not just the first.
ProfileValidation ValidateProfile(const ProfileDraft& draft, const Vocabulary& vocab);

// Like ValidateProfile but also reports missing/mistyped JSON fields.
ProfileValidation ValidateProfileJson(const nlohmann::json& j, const Vocabulary& vocab);

std::vector<Violation> ValidateRecipe(const Recipe& recipe, const Vocabulary& vocab);

struct CorpusViolation {
  std::string recipe_id;
  std::size_t index = 0;
  std::string message;
};

// Checks a raw corpus document (array of recipes) including id uniqueness.
std::vector<CorpusViolation> ValidateCorpusJson(const nlohmann::json& corpus,
                                                const Vocabulary& vocab);

// Throws Error(kDataFile) unless the corpus is clean.
std::vector<Recipe> LoadCorpus(const std::filesystem::path& path, const Vocabulary& vocab);
std::vector<Recipe> CorpusFromJson(const nlohmann::json& j, const Vocabulary& vocab);

nlohmann::json ReadJsonFile(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Ingredient& v);
void to_json(nlohmann::json& j, const UserProfile& v);
void from_json(const nlohmann::json& j, UserProfile& v);
void to_json(nlohmann::json& j, const Recipe& v);
void from_json(const nlohmann::json& j, Recipe& v);
void to_json(nlohmann::json& j, const Violation& v);

// "gluten_free" -> "gluten free".
std::string Humanize(std::string_view id);

}  // namespace pilar

#endif  // PILAR_DOMAIN_H_
