#include "pilar/config.h"

#include <cstdlib>
#include <set>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

namespace {

[[noreturn]] void Invalid(const std::string& key, const std::string& constraint) {
  throw Error(ErrorCode::kInvalidConfigValue, fmt::format("config {}: {}", key, constraint),
              {{"key", key}, {"constraint", constraint}});
}

void CheckKeys(const nlohmann::json& j, const std::string& prefix,
               std::initializer_list<std::string_view> allowed) {
  if (!j.is_object()) Invalid(prefix.empty() ? "<root>" : prefix, "must be an object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) Invalid(prefix.empty() ? key : prefix + "." + key, "unknown key");
  }
}

double Number(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number()) Invalid(key, "must be a number");
  return j.get<double>();
}

long long Integer(const nlohmann::json& j, const std::string& key) {
  if (!j.is_number_integer()) Invalid(key, "must be an integer");
  return j.get<long long>();
}

std::size_t Count(const nlohmann::json& j, const std::string& key, long long min) {
  const long long v = Integer(j, key);
  if (v < min) Invalid(key, fmt::format("must be >= {}", min));
  return static_cast<std::size_t>(v);
}

std::string String(const nlohmann::json& j, const std::string& key) {
  if (!j.is_string()) Invalid(key, "must be a string");
  return j.get<std::string>();
}

template <typename F>
void With(const nlohmann::json& j, std::string_view key, F&& f) {
  if (auto it = j.find(key); it != j.end()) f(*it);
}

}  // namespace

std::optional<std::string> ProcessEnv(const char* name) {
  if (const char* v = std::getenv(name)) return std::string(v);
  return std::nullopt;
}

void ApplyConfigJson(Config& c, const nlohmann::json& j) {
  CheckKeys(j, "", {"data_dir", "detection", "recommender", "llm", "icl", "counterfactual",
                    "server"});
  With(j, "data_dir", [&](auto& v) { c.data_dir = String(v, "data_dir"); });
  With(j, "detection", [&](auto& d) {
    CheckKeys(d, "detection", {"threshold", "window", "endpoint"});
    With(d, "threshold", [&](auto& v) { c.detection.threshold = Number(v, "detection.threshold"); });
    With(d, "window", [&](auto& v) { c.detection.window = Count(v, "detection.window", 1); });
    With(d, "endpoint", [&](auto& v) { c.detection.endpoint = String(v, "detection.endpoint"); });
  });
  With(j, "recommender", [&](auto& r) {
    CheckKeys(r, "recommender", {"weights", "k"});
    With(r, "weights", [&](auto& w) {
      CheckKeys(w, "recommender.weights", {"match", "diet", "goal", "calorie"});
      const char* names[] = {"match", "diet", "goal", "calorie"};
      for (std::size_t i = 0; i < kNumFeatures; ++i) {
        With(w, names[i], [&](auto& v) {
          c.recommender.weights.values[i] =
              Number(v, fmt::format("recommender.weights.{}", names[i]));
        });
      }
    });
    With(r, "k", [&](auto& v) {
      c.recommender.k = static_cast<int>(Count(v, "recommender.k", 1));
    });
  });
  With(j, "llm", [&](auto& l) {
    CheckKeys(l, "llm", {"provider", "endpoint", "api_key", "model", "temperature", "max_tokens",
                         "timeout_ms"});
    With(l, "provider", [&](auto& v) { c.llm.provider = String(v, "llm.provider"); });
    With(l, "endpoint", [&](auto& v) { c.llm.endpoint = String(v, "llm.endpoint"); });
    With(l, "api_key", [&](auto& v) { c.llm.api_key = String(v, "llm.api_key"); });
    With(l, "model", [&](auto& v) { c.llm.params.model_id = String(v, "llm.model"); });
    With(l, "temperature", [&](auto& v) { c.llm.params.temperature = Number(v, "llm.temperature"); });
    With(l, "max_tokens", [&](auto& v) {
      c.llm.params.max_tokens = static_cast<int>(Count(v, "llm.max_tokens", 1));
    });
    With(l, "timeout_ms", [&](auto& v) {
      c.llm.timeout_ms = static_cast<int>(Count(v, "llm.timeout_ms", 1));
    });
  });
  With(j, "icl", [&](auto& i) {
    CheckKeys(i, "icl", {"k"});
    With(i, "k", [&](auto& v) { c.icl_k = Count(v, "icl.k", 0); });
  });
  With(j, "counterfactual", [&](auto& cf) {
    CheckKeys(cf, "counterfactual", {"k", "max_edits"});
    With(cf, "k", [&](auto& v) { c.counterfactual.k = Count(v, "counterfactual.k", 1); });
    With(cf, "max_edits",
         [&](auto& v) { c.counterfactual.max_edits = Count(v, "counterfactual.max_edits", 1); });
  });
  With(j, "server", [&](auto& s) {
    CheckKeys(s, "server", {"host", "port", "state_dir", "snapshot_every", "static_dir"});
    With(s, "host", [&](auto& v) { c.server.host = String(v, "server.host"); });
    With(s, "port", [&](auto& v) { c.server.port = static_cast<int>(Integer(v, "server.port")); });
    With(s, "state_dir", [&](auto& v) { c.server.state_dir = String(v, "server.state_dir"); });
    With(s, "snapshot_every",
         [&](auto& v) { c.server.snapshot_every = Count(v, "server.snapshot_every", 1); });
    With(s, "static_dir", [&](auto& v) { c.server.static_dir = String(v, "server.static_dir"); });
  });
}

void ValidateConfig(const Config& c) {
  if (c.data_dir.empty()) Invalid("data_dir", "must be non-empty");
  if (!(c.detection.threshold >= 0.0 && c.detection.threshold <= 1.0)) {
    Invalid("detection.threshold", "must be in [0,1]");
  }
  if (c.detection.window < 1) Invalid("detection.window", "must be >= 1");
  if (auto problems = c.recommender.weights.Problems(); !problems.empty()) {
    Invalid("recommender.weights", problems.front());
  }
  if (c.recommender.k < 1) Invalid("recommender.k", "must be >= 1");
  if (c.llm.provider != "mock" && c.llm.provider != "http") {
    Invalid("llm.provider", "must be \"mock\" or \"http\"");
  }
  if (c.llm.provider == "http" && c.llm.endpoint.empty()) {
    Invalid("llm.endpoint", "required when llm.provider is \"http\"");
  }
  if (!(c.llm.params.temperature >= 0.0 && c.llm.params.temperature <= 2.0)) {
    Invalid("llm.temperature", "must be in [0,2]");
  }
  if (c.llm.params.max_tokens < 1) Invalid("llm.max_tokens", "must be >= 1");
  if (c.llm.params.model_id.empty()) Invalid("llm.model", "must be non-empty");
  if (c.llm.timeout_ms < 1) Invalid("llm.timeout_ms", "must be >= 1");
  if (c.counterfactual.k < 1) Invalid("counterfactual.k", "must be >= 1");
  if (c.counterfactual.max_edits < 1) Invalid("counterfactual.max_edits", "must be >= 1");
  if (c.server.port < 0 || c.server.port > 65535) Invalid("server.port", "must be in [0,65535]");
  if (c.server.snapshot_every < 1) Invalid("server.snapshot_every", "must be >= 1");
}

Config LoadConfig(const std::optional<std::filesystem::path>& file, const EnvLookup& env) {
  Config c;
  std::optional<std::filesystem::path> path = file;
  if (!path) {
    if (auto p = env("PILAR_CONFIG"); p && !p->empty()) path = *p;
  }
  if (path) ApplyConfigJson(c, ReadJsonFile(*path));
  if (auto v = env("PILAR_LLM_ENDPOINT")) c.llm.endpoint = *v;
  if (auto v = env("PILAR_LLM_API_KEY")) c.llm.api_key = *v;
  if (auto v = env("PILAR_DETECTOR_ENDPOINT")) c.detection.endpoint = *v;
  if (auto v = env("PILAR_DATA_DIR")) c.data_dir = *v;
  ValidateConfig(c);
  return c;
}

nlohmann::json ToJson(const Config& c, bool redact) {
  const auto& w = c.recommender.weights.values;
  return {
      {"data_dir", c.data_dir.string()},
      {"detection",
       {{"threshold", c.detection.threshold},
        {"window", c.detection.window},
        {"endpoint", c.detection.endpoint}}},
      {"recommender",
       {{"weights", {{"match", w[0]}, {"diet", w[1]}, {"goal", w[2]}, {"calorie", w[3]}}},
        {"k", c.recommender.k}}},
      {"llm",
       {{"provider", c.llm.provider},
        {"endpoint", c.llm.endpoint},
        {"api_key", redact && !c.llm.api_key.empty() ? "***" : c.llm.api_key},
        {"model", c.llm.params.model_id},
        {"temperature", c.llm.params.temperature},
        {"max_tokens", c.llm.params.max_tokens},
        {"timeout_ms", c.llm.timeout_ms}}},
      {"icl", {{"k", c.icl_k}}},
      {"counterfactual", {{"k", c.counterfactual.k}, {"max_edits", c.counterfactual.max_edits}}},
      {"server",
       {{"host", c.server.host},
        {"port", c.server.port},
        {"state_dir", c.server.state_dir.string()},
        {"snapshot_every", c.server.snapshot_every},
        {"static_dir", c.server.static_dir.string()}}},
  };
}

}  // namespace pilar
