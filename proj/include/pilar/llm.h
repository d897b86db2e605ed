#ifndef PILAR_LLM_H_
#define PILAR_LLM_H_

#include <atomic>
#include <chrono>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/context.h"

namespace pilar {

struct GenerationParams {
  double temperature = 0.2;
  int max_tokens = 1000;
  std::string model_id = "gpt-4o-mini";
};

struct IclExample {
  IntentKind intent = IntentKind::kWhy;
  SlotInputs context;
  std::string explanation;
};

class IclStore {
 public:
  // Throws Error(kDataFile) on malformed entries or unknown vocabulary ids.
  static IclStore FromJson(const nlohmann::json& j, const Vocabulary& vocab);
  static IclStore Load(const std::filesystem::path& path, const Vocabulary& vocab);

  // The first k examples for `intent` in store order. Throws
  // Error(kInvalidArgument) if the store holds fewer.
  std::vector<IclExample> ForIntent(IntentKind intent, std::size_t k) const;
  std::size_t Count(IntentKind intent) const;
  const std::string& version() const { return version_; }

 private:
  std::string version_;
  std::vector<IclExample> examples_;
};

// The personalized-explanation prompt with every slot filled.
std::string FillLlmPrompt(const PromptSlots& slots);

// k serialized examples followed by the filled prompt for ctx. Throws
// Error(kMissingSlot) and Error(kInvalidArgument) when fewer than k examples
// are given.
std::string AssemblePrompt(const ExplanationContext& ctx, const std::vector<IclExample>& examples,
                           std::size_t k, const Vocabulary& vocab);

// Decision facts for the system message; the prompt body never carries them.
std::string SystemMessage(const ExplanationContext& ctx);

struct LlmRequest {
  std::string system;
  std::string prompt;
  GenerationParams params;
};

// Chat-completions body: {model, messages, temperature, max_tokens}.
nlohmann::json RequestBody(const LlmRequest& req);

class LlmClient {
 public:
  virtual ~LlmClient() = default;
  // Returns the raw model text. Throws Error(kEndpointTimeout) or
  // Error(kEndpointError) with the HTTP status in details.
  virtual std::string Complete(const LlmRequest& req) = 0;
};

// Offline stand-in. Echoes recipe name, top factor and intent deterministically.
class MockLlmClient : public LlmClient {
 public:
  std::string Complete(const LlmRequest& req) override;
  std::size_t calls() const { return calls_.load(); }
  nlohmann::json last_body() const;

 private:
  std::atomic<std::size_t> calls_{0};
  mutable std::mutex mu_;
  nlohmann::json last_body_;
};

class HttpLlmClient : public LlmClient {
 public:
  HttpLlmClient(std::string endpoint, std::string api_key,
                std::chrono::milliseconds timeout = std::chrono::seconds(10));
  std::string Complete(const LlmRequest& req) override;

 private:
  std::string endpoint_;
  std::string api_key_;
  std::chrono::milliseconds timeout_;
};

// Keeps at most `max_tokens` whitespace-separated words.
std::string TruncateToTokens(const std::string& text, int max_tokens);

std::string Generate(const LlmRequest& req, LlmClient& client);

// Empty when the text passes.
std::vector<std::string> GroundednessCheck(const std::string& text, const ExplanationContext& ctx,
                                           const Vocabulary& vocab);

}  // namespace pilar

#endif  // PILAR_LLM_H_
