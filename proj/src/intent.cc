#include "pilar/intent.h"

#include <array>
#include <cctype>

#include <fmt/format.h>

#include "pilar/domain.h"
#include "pilar/error.h"

namespace pilar {

namespace {

constexpr std::array<std::pair<IntentKind, std::string_view>, 5> kIntentNames = {{
    {IntentKind::kWhy, "WHY"},
    {IntentKind::kWhyNot, "WHY_NOT"},
    {IntentKind::kWhatIf, "WHAT_IF"},
    {IntentKind::kHowTo, "HOW_TO"},
    {IntentKind::kFreeForm, "FREE_FORM"},
}};

constexpr std::string_view kBuiltinRules = R"json({
  "version": "1.0.0",
  "rules": [
    {"id": "why_not.contraction", "intent": "WHY_NOT", "pattern": "\\bwhy\\b.*\\b(wasn'?t|isn'?t|didn'?t|doesn'?t|don'?t|weren'?t|aren'?t|won'?t|hasn'?t|haven'?t|can'?t|couldn'?t|wouldn'?t|shouldn'?t|cannot)\\b"},
    {"id": "why_not.explicit", "intent": "WHY_NOT", "pattern": "\\bwhy\\b.*\\b(not|never|no)\\b"},
    {"id": "why.plain", "intent": "WHY", "pattern": "\\bwhy\\b"},
    {"id": "what_if.phrase", "intent": "WHAT_IF", "pattern": "\\bwhat if\\b"},
    {"id": "what_if.alternative", "intent": "WHAT_IF", "pattern": "\\balternatives?\\b"},
    {"id": "what_if.instead", "intent": "WHAT_IF", "pattern": "\\binstead\\b"},
    {"id": "how_to.how_can_i", "intent": "HOW_TO", "pattern": "\\bhow (can|could|do|should) i\\b"},
    {"id": "how_to.modify", "intent": "HOW_TO", "pattern": "\\bmodify\\b"},
    {"id": "how_to.to_be", "intent": "HOW_TO", "pattern": "\\bto be\\b"}
  ]
})json";

}  // namespace

std::string_view IntentName(IntentKind kind) {
  for (const auto& [k, name] : kIntentNames) {
    if (k == kind) return name;
  }
  return "FREE_FORM";
}

std::optional<IntentKind> ParseIntentKind(std::string_view name) {
  for (const auto& [k, n] : kIntentNames) {
    if (n == name) return k;
  }
  return std::nullopt;
}

std::string NormalizeQuery(std::string_view query) {
  std::string out;
  out.reserve(query.size());
  bool pending_space = false;
  for (std::size_t i = 0; i < query.size(); ++i) {
    const auto c = static_cast<unsigned char>(query[i]);
    // U+2018 / U+2019 / U+02BC in UTF-8.
    if (c == 0xE2 && i + 2 < query.size() && static_cast<unsigned char>(query[i + 1]) == 0x80 &&
        (static_cast<unsigned char>(query[i + 2]) == 0x98 ||
         static_cast<unsigned char>(query[i + 2]) == 0x99)) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back('\'');
      i += 2;
      continue;
    }
    if (c == 0xCA && i + 1 < query.size() && static_cast<unsigned char>(query[i + 1]) == 0xBC) {
      if (pending_space && !out.empty()) out.push_back(' ');
      pending_space = false;
      out.push_back('\'');
      i += 1;
      continue;
    }
    if (std::isspace(c)) {
      pending_space = true;
      continue;
    }
    if (pending_space && !out.empty()) out.push_back(' ');
    pending_space = false;
    out.push_back(static_cast<char>(std::tolower(c)));
  }
  return out;
}

IntentRules IntentRules::FromJson(const nlohmann::json& j) {
  IntentRules out;
  try {
    out.version_ = j.at("version").get<std::string>();
    for (const auto& r : j.at("rules")) {
      Rule rule;
      rule.id = r.at("id").get<std::string>();
      const auto name = r.at("intent").get<std::string>();
      auto kind = ParseIntentKind(name);
      if (!kind || *kind == IntentKind::kFreeForm) {
        throw Error(ErrorCode::kDataFile, fmt::format("rule {}: bad intent {}", rule.id, name));
      }
      rule.intent = *kind;
      rule.pattern = r.at("pattern").get<std::string>();
      rule.regex = std::regex(rule.pattern, std::regex::ECMAScript | std::regex::icase |
                                                std::regex::optimize);
      out.rules_.push_back(std::move(rule));
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("intent rules: {}", e.what()));
  } catch (const std::regex_error& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("intent rules: bad pattern: {}", e.what()));
  }
  return out;
}

IntentRules IntentRules::Load(const std::filesystem::path& path) {
  return FromJson(ReadJsonFile(path));
}

IntentRules IntentRules::Builtin() {
  return FromJson(nlohmann::json::parse(kBuiltinRules));
}

Intent IntentRules::Classify(std::string_view query) const {
  const std::string q = NormalizeQuery(query);
  if (q.empty()) throw Error(ErrorCode::kEmptyQuery, "query must be non-empty");
  for (const auto& rule : rules_) {
    if (std::regex_search(q, rule.regex)) return {rule.intent, rule.id};
  }
  return {IntentKind::kFreeForm, ""};
}

nlohmann::json ToJson(const Intent& intent) {
  return {{"kind", IntentName(intent.kind)}, {"matched_pattern", intent.matched_pattern}};
}

}  // namespace pilar
