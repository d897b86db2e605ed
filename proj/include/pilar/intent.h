#ifndef PILAR_INTENT_H_
#define PILAR_INTENT_H_

#include <filesystem>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

namespace pilar {

enum class IntentKind { kWhy, kWhyNot, kWhatIf, kHowTo, kFreeForm };

std::string_view IntentName(IntentKind kind);
std::optional<IntentKind> ParseIntentKind(std::string_view name);

struct Intent {
  IntentKind kind = IntentKind::kFreeForm;
  // Id of the rule that fired; empty for FREE_FORM.
  std::string matched_pattern;

  bool operator==(const Intent&) const = default;
};

// Lowercase, straight apostrophes, single spaces, trimmed.
std::string NormalizeQuery(std::string_view query);

// Ordered pattern -> intent rules; the first match wins.
class IntentRules {
 public:
  struct Rule {
    std::string id;
    IntentKind intent;
    std::string pattern;
    std::regex regex;
  };

  static IntentRules FromJson(const nlohmann::json& j);
  static IntentRules Load(const std::filesystem::path& path);
  // Same rules as data/intent_rules.json, for callers without a data dir.
  static IntentRules Builtin();

  const std::string& version() const { return version_; }
  const std::vector<Rule>& rules() const { return rules_; }

  // Throws Error(kEmptyQuery) for blank input.
  Intent Classify(std::string_view query) const;

 private:
  std::string version_;
  std::vector<Rule> rules_;
};

nlohmann::json ToJson(const Intent& intent);

}  // namespace pilar

#endif  // PILAR_INTENT_H_
