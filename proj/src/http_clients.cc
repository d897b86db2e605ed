// Outbound HTTP: remote detector, remote recipe search and the chat-completions
// client. Kept in one translation unit so httplib is compiled once.
#include <cmath>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "httplib.h"
#include "pilar/detection.h"
#include "pilar/error.h"
#include "pilar/llm.h"
#include "pilar/recommender.h"

namespace pilar {

namespace {

struct Url {
  std::string origin;  // scheme://host[:port]
  std::string path;    // starts with '/'
};

Url SplitUrl(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw Error(ErrorCode::kInvalidArgument, fmt::format("endpoint {} has no scheme", url),
                {{"endpoint", url}});
  }
  const auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

std::string JoinPath(const std::string& base, std::string_view tail) {
  if (!base.empty() && base.back() == '/') return base.substr(0, base.size() - 1) + std::string(tail);
  return base + std::string(tail);
}

void ConfigureTimeouts(httplib::Client& cli, std::chrono::milliseconds timeout) {
  const auto sec = static_cast<time_t>(timeout.count() / 1000);
  const auto usec = static_cast<time_t>((timeout.count() % 1000) * 1000);
  cli.set_connection_timeout(sec, usec);
  cli.set_read_timeout(sec, usec);
  cli.set_write_timeout(sec, usec);
}

bool IsTimeout(httplib::Error e) {
  return e == httplib::Error::ConnectionTimeout || e == httplib::Error::Read;
}

}  // namespace

// ---------------------------------------------------------------------------
// RemoteDetector

RemoteDetector::RemoteDetector(std::string endpoint, std::shared_ptr<const Vocabulary> vocab,
                               std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), vocab_(std::move(vocab)), timeout_(timeout) {}

std::vector<DetectedIngredient> RemoteDetector::Detect(const DetectionFrame& frame,
                                                       double threshold) {
  std::ifstream in(frame.source, std::ios::binary);
  if (!in) {
    throw Error(ErrorCode::kFixtureNotFound, fmt::format("cannot read image {}", frame.source),
                {{"source", frame.source}});
  }
  const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DetectImage(bytes, frame, threshold);
}

std::vector<DetectedIngredient> RemoteDetector::DetectImage(std::string_view image_bytes,
                                                            const DetectionFrame& frame,
                                                            double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    throw Error(ErrorCode::kInvalidArgument, "threshold must be in [0,1]",
                {{"threshold", threshold}});
  }
  const Url url = SplitUrl(endpoint_);
  httplib::Client cli(url.origin);
  ConfigureTimeouts(cli, timeout_);
  auto res = cli.Post(JoinPath(url.path, "/detect"), std::string(image_bytes),
                      "application/octet-stream");
  if (!res || res->status == 503 || res->status == 429) {
    long retry_ms = 1000;
    if (res && res->has_header("Retry-After")) {
      try {
        retry_ms = std::stol(res->get_header_value("Retry-After")) * 1000;
      } catch (const std::exception&) {
      }
    }
    const std::string why = res ? fmt::format("status {}", res->status)
                                : httplib::to_string(res.error());
    throw Error(ErrorCode::kRemoteDetectorUnavailable,
                fmt::format("detector at {} unavailable: {}", endpoint_, why),
                {{"retry_after_ms", retry_ms}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kRemoteDetectorUnavailable,
                fmt::format("detector at {} answered {}", endpoint_, res->status),
                {{"status", res->status}, {"retry_after_ms", 1000}});
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kRemoteDetectorUnavailable,
                fmt::format("detector sent malformed JSON: {}", e.what()),
                {{"retry_after_ms", 1000}});
  }
  auto frames = ParseFrames(body, *vocab_);
  if (frames.empty()) return {};
  const FrameDetections* pick = &frames.front();
  for (const auto& f : frames) {
    if (f.frame_id == frame.frame_id) pick = &f;
  }
  return FilterByThreshold(pick->detections, threshold);
}

// ---------------------------------------------------------------------------
// RemoteRecommender

RemoteRecommender::RemoteRecommender(std::string endpoint, std::shared_ptr<const Vocabulary> vocab,
                                     ScoringWeights weights, std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)),
      vocab_(vocab),
      local_(std::move(vocab), weights),
      timeout_(timeout) {}

std::string RemoteRecommender::BuildRequestTarget(const UserProfile& profile,
                                                  const std::set<IngredientId>& detected) const {
  const Url url = SplitUrl(endpoint_);
  std::string target = fmt::format("{}?ingredients={}&diet={}", url.path,
                                   fmt::join(detected, ","), profile.diet);
  if (!profile.health_goals.empty()) {
    target += fmt::format("&health={}", fmt::join(profile.health_goals, ","));
  }
  target += fmt::format("&calories={}", profile.calorie_target);
  return target;
}

std::vector<Recipe> RemoteRecommender::ParseHits(const nlohmann::json& body) const {
  std::vector<Recipe> out;
  if (!body.is_object() || !body.contains("hits") || !body["hits"].is_array()) {
    throw Error(ErrorCode::kEndpointError, "recipe search response has no hits array",
                {{"upstream", "recommender"}});
  }
  std::set<std::string> seen;
  for (const auto& hit : body["hits"]) {
    if (!hit.contains("recipe") || !hit["recipe"].is_object()) continue;
    const auto& r = hit["recipe"];
    Recipe recipe;
    recipe.title = r.value("label", "");
    recipe.id = CanonicalToken(r.value("id", recipe.title));
    if (recipe.id.empty() || !seen.insert(recipe.id).second) continue;
    for (const auto& ing : r.value("ingredients", nlohmann::json::array())) {
      const std::string food = ing.is_object() ? ing.value("food", "") : ing.get<std::string>();
      if (food.empty()) continue;
      auto lookup = NormalizeIngredientName(food, *vocab_);
      if (lookup.known && std::find(recipe.ingredients.begin(), recipe.ingredients.end(),
                                    lookup.token) == recipe.ingredients.end()) {
        recipe.ingredients.push_back(lookup.token);
      }
    }
    for (const char* key : {"dietLabels", "healthLabels"}) {
      for (const auto& label : r.value(key, nlohmann::json::array())) {
        const std::string tag = CanonicalToken(label.get<std::string>());
        if (vocab_->IsTag(tag)) recipe.tags.insert(tag);
      }
    }
    const double servings = std::max(1.0, r.value("yield", 1.0));
    recipe.calories_per_serving = static_cast<int>(std::lround(r.value("calories", 0.0) / servings));
    if (recipe.ingredients.empty() || recipe.calories_per_serving <= 0) continue;
    out.push_back(std::move(recipe));
  }
  return out;
}

RankResult RemoteRecommender::Rank(const UserProfile& profile,
                                   const std::set<IngredientId>& detected, int k) const {
  const Url url = SplitUrl(endpoint_);
  httplib::Client cli(url.origin);
  ConfigureTimeouts(cli, timeout_);
  auto res = cli.Get(BuildRequestTarget(profile, detected));
  if (!res) {
    const auto code = IsTimeout(res.error()) ? ErrorCode::kEndpointTimeout : ErrorCode::kEndpointError;
    throw Error(code, fmt::format("recipe search failed: {}", httplib::to_string(res.error())),
                {{"upstream", "recommender"}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kEndpointError, fmt::format("recipe search answered {}", res->status),
                {{"upstream", "recommender"}, {"status", res->status}});
  }
  nlohmann::json body;
  try {
    body = nlohmann::json::parse(res->body);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEndpointError, fmt::format("recipe search sent bad JSON: {}", e.what()),
                {{"upstream", "recommender"}});
  }
  // Hits are re-ranked locally so hard filters apply regardless of upstream.
  Corpus corpus(ParseHits(body), *vocab_);
  return local_.Rank(corpus, profile, detected, k);
}

// ---------------------------------------------------------------------------
// HttpLlmClient

HttpLlmClient::HttpLlmClient(std::string endpoint, std::string api_key,
                             std::chrono::milliseconds timeout)
    : endpoint_(std::move(endpoint)), api_key_(std::move(api_key)), timeout_(timeout) {}

std::string HttpLlmClient::Complete(const LlmRequest& req) {
  const Url url = SplitUrl(endpoint_);
  httplib::Client cli(url.origin);
  ConfigureTimeouts(cli, timeout_);
  httplib::Headers headers;
  if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);
  auto res = cli.Post(url.path, headers, RequestBody(req).dump(), "application/json");
  if (!res) {
    if (IsTimeout(res.error())) {
      throw Error(ErrorCode::kEndpointTimeout,
                  fmt::format("llm endpoint timed out after {} ms", timeout_.count()),
                  {{"timeout_ms", timeout_.count()}});
    }
    throw Error(ErrorCode::kEndpointError,
                fmt::format("llm endpoint unreachable: {}", httplib::to_string(res.error())),
                {{"status", 0}});
  }
  if (res->status != 200) {
    throw Error(ErrorCode::kEndpointError, fmt::format("llm endpoint answered {}", res->status),
                {{"status", res->status}});
  }
  try {
    const auto body = nlohmann::json::parse(res->body);
    return body.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEndpointError,
                fmt::format("llm endpoint sent an unexpected body: {}", e.what()),
                {{"status", res->status}});
  }
}

}  // namespace pilar
