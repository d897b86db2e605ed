#ifndef PILAR_SERVICE_H_
#define PILAR_SERVICE_H_

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pilar/config.h"
#include "pilar/context.h"
#include "pilar/error.h"
#include "pilar/detection.h"
#include "pilar/event_log.h"
#include "pilar/intent.h"
#include "pilar/llm.h"
#include "pilar/recommender.h"

namespace pilar {

struct HistoryEntry {
  std::string recipe_id;
  std::string query;
  // Explanation body: text, mode, strategy, intent, dimensions, flags, ...
  nlohmann::json explanation;
  double latency_ms = 0;
};

struct DetectionSnapshot {
  // "fixture:<id>", "image" or "manual".
  std::string source;
  std::set<IngredientId> detected;
  std::vector<std::string> unknown_labels;
  nlohmann::json frames = nlohmann::json::array();
};

struct Session {
  std::string id;
  std::string profile_id;
  std::optional<DetectionSnapshot> detection;
  std::optional<RecommendationState> recommendation;
  std::vector<HistoryEntry> history;
};

struct ServiceState {
  std::map<std::string, UserProfile> profiles;
  std::map<std::string, Session> sessions;
  std::uint64_t last_seq = 0;
};

nlohmann::json ToJson(const ServiceState& state);
ServiceState StateFromJson(const nlohmann::json& j);

// Pure state transition shared by live requests and replay. Throws
// Error(kCorruptLogLine) for payloads it cannot apply.
void ApplyEvent(ServiceState& state, const EventRecord& event);
ServiceState Replay(const LogContents& log);

// Time sources. The logical clock advances 1 ms per reading so runs are
// reproducible byte for byte.
struct Clock {
  std::function<std::int64_t()> wall_ms;
  std::function<double()> monotonic_ms;

  static Clock System();
  static Clock Logical();
};

struct ServiceDeps {
  std::shared_ptr<const Vocabulary> vocab;
  std::shared_ptr<CorpusStore> corpus;
  std::shared_ptr<const IntentRules> rules;
  std::shared_ptr<const IclStore> icl;
  std::shared_ptr<FixtureDetector> fixtures;
  // Null unless detection.endpoint is configured.
  std::shared_ptr<RemoteDetector> remote_detector;
  std::shared_ptr<LlmClient> llm;
  Clock clock = Clock::System();
};

// Loads vocabulary, corpus, rules, ICL examples and fixtures from
// config.data_dir and builds the configured clients.
ServiceDeps LoadServiceDeps(const Config& config, Clock clock = Clock::System());

struct ApiResponse {
  int status = 200;
  nlohmann::json body;
};

int HttpStatusFor(ErrorCode code);
ApiResponse ErrorResponse(const Error& e);

class ServiceCore {
 public:
  // `log` may be null for an in-memory service.
  ServiceCore(Config config, ServiceDeps deps, std::unique_ptr<EventLog> log = nullptr);

  // Replays the event log into memory. Returns the truncated-tail warning, if
  // any. On a corrupt line the prior in-memory state is kept and the error
  // propagates.
  std::optional<std::string> Recover();

  // Routes one /v1 request. Never throws for domain errors.
  ApiResponse Handle(std::string_view method, std::string_view path, std::string_view body);

  nlohmann::json CreateProfile(const nlohmann::json& body);
  nlohmann::json GetProfile(const std::string& id) const;
  nlohmann::json PutProfile(const std::string& id, const nlohmann::json& body);
  nlohmann::json CreateSession(const nlohmann::json& body);
  nlohmann::json GetSession(const std::string& id) const;
  nlohmann::json Detect(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json Recommend(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json Explain(const std::string& session_id, const nlohmann::json& body);
  nlohmann::json History(const std::string& session_id) const;
  nlohmann::json ListFixtures() const;
  nlohmann::json ListRecipes() const;

  ServiceState Snapshot() const;
  const Config& config() const { return config_; }
  const ServiceDeps& deps() const { return deps_; }

 private:
  // Builds the payload and appends the event under one lock so seq order
  // matches application order.
  EventRecord Commit(std::string kind, const std::function<nlohmann::json()>& make_payload);
  std::shared_ptr<std::mutex> SessionMutex(const std::string& id);
  Session CopySession(const std::string& id) const;
  UserProfile ParseProfileBody(const nlohmann::json& body) const;

  Config config_;
  ServiceDeps deps_;
  Recommender recommender_;
  std::unique_ptr<EventLog> log_;

  mutable std::shared_mutex state_mu_;
  ServiceState state_;
  std::mutex commit_mu_;
  std::mutex session_mu_map_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> session_mu_;
};

// Standard base64; throws Error(kInvalidArgument) on malformed input.
std::string DecodeBase64(std::string_view text);

}  // namespace pilar

#endif  // PILAR_SERVICE_H_
