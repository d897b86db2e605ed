#ifndef PILAR_CONFIG_H_
#define PILAR_CONFIG_H_

#include <filesystem>
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"
#include "pilar/llm.h"
#include "pilar/recommender.h"

namespace pilar {

struct Config {
  std::filesystem::path data_dir = "data";

  struct Detection {
    double threshold = 0.5;
    std::size_t window = 3;
    std::string endpoint;
  } detection;

  struct Recommend {
    ScoringWeights weights;
    int k = 3;
  } recommender;

  struct Llm {
    // "mock" or "http".
    std::string provider = "mock";
    std::string endpoint;
    std::string api_key;
    GenerationParams params;
    int timeout_ms = 10000;
  } llm;

  std::size_t icl_k = 3;

  struct Counterfactuals {
    std::size_t k = 3;
    std::size_t max_edits = 3;
  } counterfactual;

  struct Server {
    std::string host = "127.0.0.1";
    int port = 8080;
    // Empty keeps state in memory only.
    std::filesystem::path state_dir;
    std::size_t snapshot_every = 500;
    // Optional directory of static web assets served at "/".
    std::filesystem::path static_dir;
  } server;
};

using EnvLookup = std::function<std::optional<std::string>(const char* name)>;
std::optional<std::string> ProcessEnv(const char* name);

// Overlays the keys present in j. Throws Error(kInvalidConfigValue) naming
// the key and the constraint.
void ApplyConfigJson(Config& config, const nlohmann::json& j);
void ValidateConfig(const Config& config);

// Defaults, then the file (explicit path, else $PILAR_CONFIG), then
// PILAR_LLM_ENDPOINT, PILAR_LLM_API_KEY, PILAR_DETECTOR_ENDPOINT, PILAR_DATA_DIR.
Config LoadConfig(const std::optional<std::filesystem::path>& file = std::nullopt,
                  const EnvLookup& env = ProcessEnv);

// Secrets replaced by "***" unless redact is false.
nlohmann::json ToJson(const Config& config, bool redact = true);

}  // namespace pilar

#endif  // PILAR_CONFIG_H_
