#include "pilar/service.h"

#include <algorithm>
#include <atomic>
#include <chrono>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "pilar/attribution.h"
#include "pilar/error.h"
#include "pilar/router.h"

namespace pilar {

namespace {

using nlohmann::json;

[[noreturn]] void NotFound(std::string_view what, const std::string& id) {
  throw Error(ErrorCode::kNotFound, fmt::format("unknown {} {}", what, id),
              {{"kind", what}, {"id", id}});
}

[[noreturn]] void Corrupt(const EventRecord& e, const std::string& why) {
  throw Error(ErrorCode::kCorruptLogLine, fmt::format("event seq {}: {}", e.seq, why),
              {{"seq", e.seq}});
}

[[noreturn]] void BadBody(const std::string& message, json details = json::object()) {
  throw Error(ErrorCode::kInvalidArgument, message, std::move(details));
}

json ViolationsJson(const std::vector<Violation>& violations) {
  json out = json::array();
  for (const auto& v : violations) out.push_back(v);
  return out;
}

json ToJson(const RecommendationState& r) {
  json ranked = json::array();
  for (const auto& s : r.result.ranked) ranked.push_back(pilar::ToJson(s));
  json excluded = json::array();
  for (const auto& s : r.result.excluded) excluded.push_back(pilar::ToJson(s));
  return {{"profile", r.profile}, {"detected", r.detected}, {"k", r.k},
          {"ranked", ranked},     {"excluded", excluded},   {"passing", r.result.passing}};
}

RecommendationState RecommendationFromJson(const json& j) {
  RecommendationState r;
  r.profile = j.at("profile").get<UserProfile>();
  r.detected = j.at("detected").get<std::set<IngredientId>>();
  r.k = j.at("k");
  for (const auto& s : j.at("ranked")) r.result.ranked.push_back(ScoredRecipeFromJson(s));
  for (const auto& s : j.at("excluded")) r.result.excluded.push_back(ScoredRecipeFromJson(s));
  r.result.passing = j.at("passing");
  return r;
}

json ToJson(const DetectionSnapshot& d) {
  return {{"source", d.source},
          {"detected", d.detected},
          {"unknown_labels", d.unknown_labels},
          {"frames", d.frames}};
}

DetectionSnapshot DetectionFromJson(const json& j) {
  DetectionSnapshot d;
  d.source = j.at("source");
  d.detected = j.at("detected").get<std::set<IngredientId>>();
  d.unknown_labels = j.at("unknown_labels").get<std::vector<std::string>>();
  d.frames = j.at("frames");
  return d;
}

json ToJson(const HistoryEntry& h) {
  json j = h.explanation;
  j["recipe_id"] = h.recipe_id;
  j["query"] = h.query;
  j["latency_ms"] = h.latency_ms;
  return j;
}

json EntryPayload(const HistoryEntry& h) {
  return {{"recipe_id", h.recipe_id},
          {"query", h.query},
          {"explanation", h.explanation},
          {"latency_ms", h.latency_ms}};
}

HistoryEntry EntryFromPayload(const json& j) {
  return {j.at("recipe_id"), j.at("query"), j.at("explanation"), j.at("latency_ms")};
}

json ToJson(const Session& s) {
  json history = json::array();
  for (const auto& h : s.history) history.push_back(EntryPayload(h));
  json j = {{"id", s.id}, {"profile_id", s.profile_id}, {"history", history}};
  j["detection"] = s.detection ? ToJson(*s.detection) : json();
  j["recommendation"] = s.recommendation ? ToJson(*s.recommendation) : json();
  return j;
}

Session SessionFromJson(const json& j) {
  Session s;
  s.id = j.at("id");
  s.profile_id = j.at("profile_id");
  if (!j.at("detection").is_null()) s.detection = DetectionFromJson(j.at("detection"));
  if (!j.at("recommendation").is_null()) {
    s.recommendation = RecommendationFromJson(j.at("recommendation"));
  }
  for (const auto& h : j.at("history")) s.history.push_back(EntryFromPayload(h));
  return s;
}

std::string RequireString(const json& body, const char* key) {
  auto it = body.find(key);
  if (it == body.end() || !it->is_string()) {
    BadBody(fmt::format("{} is required and must be a string", key), {{"field", key}});
  }
  return it->get<std::string>();
}

std::set<IngredientId> ParseIngredientList(const json& list, const Vocabulary& vocab) {
  if (!list.is_array()) BadBody("ingredients must be an array of names", {{"field", "ingredients"}});
  std::set<IngredientId> out;
  std::vector<Violation> violations;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const auto field = fmt::format("ingredients[{}]", i);
    if (!list[i].is_string()) {
      violations.push_back({field, "must be a string"});
      continue;
    }
    try {
      auto lookup = NormalizeIngredientName(list[i].get<std::string>(), vocab);
      if (!lookup.known) {
        violations.push_back({field, fmt::format("unknown ingredient: {}", lookup.token)});
      } else {
        out.insert(lookup.token);
      }
    } catch (const Error& e) {
      violations.push_back({field, e.what()});
    }
  }
  if (!violations.empty()) {
    BadBody("invalid ingredient list", {{"violations", ViolationsJson(violations)}});
  }
  return out;
}

std::vector<std::string> SplitPath(std::string_view path) {
  std::vector<std::string> out;
  std::size_t pos = 0;
  while (pos < path.size()) {
    auto next = path.find('/', pos);
    if (next == std::string_view::npos) next = path.size();
    if (next > pos) out.emplace_back(path.substr(pos, next - pos));
    pos = next + 1;
  }
  return out;
}

}  // namespace

// ---------------------------------------------------------------------------
// State

json ToJson(const ServiceState& state) {
  json profiles = json::object();
  for (const auto& [id, p] : state.profiles) profiles[id] = p;
  json sessions = json::object();
  for (const auto& [id, s] : state.sessions) sessions[id] = ToJson(s);
  return {{"profiles", profiles}, {"sessions", sessions}, {"last_seq", state.last_seq}};
}

ServiceState StateFromJson(const json& j) {
  ServiceState state;
  for (const auto& [id, p] : j.at("profiles").items()) state.profiles[id] = p.get<UserProfile>();
  for (const auto& [id, s] : j.at("sessions").items()) state.sessions[id] = SessionFromJson(s);
  state.last_seq = j.at("last_seq");
  return state;
}

void ApplyEvent(ServiceState& state, const EventRecord& e) {
  try {
    const json& p = e.payload;
    auto session = [&]() -> Session& {
      const std::string id = p.at("session_id");
      auto it = state.sessions.find(id);
      if (it == state.sessions.end()) Corrupt(e, "unknown session " + id);
      return it->second;
    };
    if (e.kind == "profile_upsert") {
      auto profile = p.at("profile").get<UserProfile>();
      state.profiles[profile.id] = std::move(profile);
    } else if (e.kind == "session_create") {
      Session s;
      s.id = p.at("session_id");
      s.profile_id = p.at("profile_id");
      state.sessions[s.id] = std::move(s);
    } else if (e.kind == "detect") {
      session().detection = DetectionFromJson(p.at("detection"));
    } else if (e.kind == "recommend") {
      session().recommendation = RecommendationFromJson(p.at("recommendation"));
    } else if (e.kind == "explain") {
      session().history.push_back(EntryFromPayload(p.at("entry")));
    } else {
      Corrupt(e, "unknown event kind " + e.kind);
    }
  } catch (const json::exception& ex) {
    Corrupt(e, ex.what());
  }
  state.last_seq = e.seq;
}

ServiceState Replay(const LogContents& log) {
  ServiceState state = log.snapshot ? StateFromJson(*log.snapshot) : ServiceState{};
  for (const auto& e : log.events) ApplyEvent(state, e);
  return state;
}

// ---------------------------------------------------------------------------
// Clock

Clock Clock::System() {
  return {[] {
            return std::chrono::duration_cast<std::chrono::milliseconds>(
                       std::chrono::system_clock::now().time_since_epoch())
                .count();
          },
          [] {
            return std::chrono::duration<double, std::milli>(
                       std::chrono::steady_clock::now().time_since_epoch())
                .count();
          }};
}

Clock Clock::Logical() {
  auto wall = std::make_shared<std::atomic<std::int64_t>>(0);
  auto mono = std::make_shared<std::atomic<std::int64_t>>(0);
  return {[wall] { return (*wall)++; },
          [mono] { return static_cast<double>((*mono)++); }};
}

// ---------------------------------------------------------------------------
// Wiring

ServiceDeps LoadServiceDeps(const Config& config, Clock clock) {
  ServiceDeps deps;
  const auto& dir = config.data_dir;
  auto vocab = std::make_shared<Vocabulary>(Vocabulary::Load(dir / "vocabulary.json"));
  deps.vocab = vocab;
  deps.corpus = std::make_shared<CorpusStore>(
      std::make_shared<Corpus>(LoadCorpus(dir / "corpus.json", *vocab), *vocab));
  deps.rules = std::make_shared<IntentRules>(IntentRules::Load(dir / "intent_rules.json"));
  deps.icl = std::make_shared<IclStore>(IclStore::Load(dir / "icl_examples.json", *vocab));
  for (auto kind : {IntentKind::kWhy, IntentKind::kWhyNot, IntentKind::kWhatIf,
                    IntentKind::kHowTo, IntentKind::kFreeForm}) {
    if (deps.icl->Count(kind) < config.icl_k) {
      throw Error(ErrorCode::kInvalidConfigValue,
                  fmt::format("icl.k = {} but only {} {} examples exist", config.icl_k,
                              deps.icl->Count(kind), IntentName(kind)),
                  {{"key", "icl.k"}, {"constraint", "<= examples per intent"}});
    }
  }
  deps.fixtures = std::make_shared<FixtureDetector>(dir / "fixtures", vocab);
  const auto timeout = std::chrono::milliseconds(config.llm.timeout_ms);
  if (!config.detection.endpoint.empty()) {
    deps.remote_detector = std::make_shared<RemoteDetector>(config.detection.endpoint, vocab, timeout);
  }
  if (config.llm.provider == "http") {
    deps.llm = std::make_shared<HttpLlmClient>(config.llm.endpoint, config.llm.api_key, timeout);
  } else {
    deps.llm = std::make_shared<MockLlmClient>();
  }
  deps.clock = std::move(clock);
  return deps;
}

int HttpStatusFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput:
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kEmptyQuery:
    case ErrorCode::kUnknownFeature:
    case ErrorCode::kMissingSlot:
    case ErrorCode::kTooManyFeatures:
      return 400;
    case ErrorCode::kNotFound:
    case ErrorCode::kFixtureNotFound:
    case ErrorCode::kUnknownRecipe:
    case ErrorCode::kUnknownRecipeInSession:
      return 404;
    case ErrorCode::kPipelineOrder:
      return 409;
    case ErrorCode::kEmptyCorpus:
    case ErrorCode::kNoCounterfactualWithinBudget:
    case ErrorCode::kMaterialsMissing:
      return 422;
    case ErrorCode::kRemoteDetectorUnavailable:
    case ErrorCode::kEndpointTimeout:
    case ErrorCode::kEndpointError:
      return 502;
    case ErrorCode::kCorruptLogLine:
    case ErrorCode::kInvalidConfigValue:
    case ErrorCode::kDataFile:
      return 500;
  }
  return 500;
}

ApiResponse ErrorResponse(const Error& e) {
  ApiResponse r{HttpStatusFor(e.code()), e.ToJson()};
  if (r.status == 502) {
    std::string hint;
    if (e.details().contains("fallback_hint")) {
      hint = e.details()["fallback_hint"].get<std::string>();
    } else if (e.code() == ErrorCode::kRemoteDetectorUnavailable) {
      hint = "use a fixture_id or an explicit ingredients list";
    } else {
      hint = "retry with mode=template";
    }
    r.body["fallback_hint"] = hint;
  }
  return r;
}

std::string DecodeBase64(std::string_view text) {
  std::string clean;
  clean.reserve(text.size());
  for (char c : text) {
    if (c != '\n' && c != '\r' && c != ' ' && c != '\t') clean.push_back(c);
  }
  if (clean.size() % 4 != 0) BadBody("image is not valid base64", {{"field", "image"}});
  std::string out(clean.size() / 4 * 3, '\0');
  const int n = EVP_DecodeBlock(reinterpret_cast<unsigned char*>(out.data()),
                                reinterpret_cast<const unsigned char*>(clean.data()),
                                static_cast<int>(clean.size()));
  if (n < 0) BadBody("image is not valid base64", {{"field", "image"}});
  std::size_t pad = 0;
  for (auto it = clean.rbegin(); it != clean.rend() && *it == '=' && pad < 2; ++it) ++pad;
  out.resize(static_cast<std::size_t>(n) - pad);
  return out;
}

// ---------------------------------------------------------------------------
// ServiceCore

ServiceCore::ServiceCore(Config config, ServiceDeps deps, std::unique_ptr<EventLog> log)
    : config_(std::move(config)),
      deps_(std::move(deps)),
      recommender_(deps_.vocab, config_.recommender.weights),
      log_(std::move(log)) {}

std::optional<std::string> ServiceCore::Recover() {
  if (!log_) return std::nullopt;
  LogContents contents = log_->Load();
  ServiceState next = Replay(contents);
  std::unique_lock lock(state_mu_);
  state_ = std::move(next);
  return contents.warning;
}

EventRecord ServiceCore::Commit(std::string kind, const std::function<json()>& make_payload) {
  std::lock_guard commit(commit_mu_);
  json payload = make_payload();
  const auto now = deps_.clock.wall_ms();
  EventRecord rec;
  if (log_) {
    rec = log_->Append(std::move(kind), std::move(payload), now);
  } else {
    std::shared_lock lock(state_mu_);
    rec = {state_.last_seq + 1, now, std::move(kind), std::move(payload)};
  }
  {
    std::unique_lock lock(state_mu_);
    ApplyEvent(state_, rec);
  }
  if (log_ && rec.seq % config_.server.snapshot_every == 0) {
    std::shared_lock lock(state_mu_);
    log_->WriteSnapshot(ToJson(state_), rec.seq);
  }
  return rec;
}

std::shared_ptr<std::mutex> ServiceCore::SessionMutex(const std::string& id) {
  std::lock_guard lock(session_mu_map_mu_);
  auto& m = session_mu_[id];
  if (!m) m = std::make_shared<std::mutex>();
  return m;
}

Session ServiceCore::CopySession(const std::string& id) const {
  std::shared_lock lock(state_mu_);
  auto it = state_.sessions.find(id);
  if (it == state_.sessions.end()) NotFound("session", id);
  return it->second;
}

ServiceState ServiceCore::Snapshot() const {
  std::shared_lock lock(state_mu_);
  return state_;
}

UserProfile ServiceCore::ParseProfileBody(const json& body) const {
  auto v = ValidateProfileJson(body, *deps_.vocab);
  if (!v.ok()) {
    BadBody("profile validation failed", {{"violations", ViolationsJson(v.violations)}});
  }
  return *v.profile;
}

json ServiceCore::CreateProfile(const json& body) {
  UserProfile profile = ParseProfileBody(body);
  {
    std::shared_lock lock(state_mu_);
    if (state_.profiles.count(profile.id)) {
      BadBody(fmt::format("profile {} already exists; use PUT to update it", profile.id),
              {{"violations", json::array({{{"field", "id"}, {"message", "already exists"}}})}});
    }
  }
  Commit("profile_upsert", [&] { return json{{"profile", profile}}; });
  return profile;
}

json ServiceCore::GetProfile(const std::string& id) const {
  std::shared_lock lock(state_mu_);
  auto it = state_.profiles.find(id);
  if (it == state_.profiles.end()) NotFound("profile", id);
  return it->second;
}

json ServiceCore::PutProfile(const std::string& id, const json& body) {
  json with_id = body;
  if (with_id.is_object() && !with_id.contains("id")) with_id["id"] = id;
  UserProfile profile = ParseProfileBody(with_id);
  if (profile.id != id) {
    BadBody("profile id in body does not match the path",
            {{"violations", json::array({{{"field", "id"}, {"message", "must match path"}}})}});
  }
  Commit("profile_upsert", [&] { return json{{"profile", profile}}; });
  return profile;
}

json ServiceCore::CreateSession(const json& body) {
  const std::string profile_id = RequireString(body, "profile_id");
  GetProfile(profile_id);
  std::string id;
  Commit("session_create", [&] {
    std::shared_lock lock(state_mu_);
    id = fmt::format("s{:04d}", state_.sessions.size() + 1);
    return json{{"session_id", id}, {"profile_id", profile_id}};
  });
  return GetSession(id);
}

json ServiceCore::GetSession(const std::string& id) const {
  const Session s = CopySession(id);
  json j = {{"session_id", s.id},
            {"profile_id", s.profile_id},
            {"has_detection", s.detection.has_value()},
            {"has_recommendation", s.recommendation.has_value()},
            {"history_length", s.history.size()}};
  if (s.detection) j["detected"] = s.detection->detected;
  return j;
}

json ServiceCore::Detect(const std::string& session_id, const json& body) {
  auto mu = SessionMutex(session_id);
  std::lock_guard session_lock(*mu);
  CopySession(session_id);
  const Vocabulary& vocab = *deps_.vocab;

  double threshold = config_.detection.threshold;
  if (body.contains("threshold")) {
    if (!body["threshold"].is_number()) BadBody("threshold must be a number");
    threshold = body["threshold"].get<double>();
  }
  if (!(threshold >= 0.0 && threshold <= 1.0)) {
    BadBody("threshold must be in [0,1]", {{"field", "threshold"}});
  }
  DetectionSnapshot snap;
  std::vector<FrameDetections> frames;
  if (body.contains("fixture_id")) {
    const std::string fixture = RequireString(body, "fixture_id");
    std::size_t window = config_.detection.window;
    if (body.contains("window")) {
      if (!body["window"].is_number_integer() || body["window"].get<long long>() < 1) {
        BadBody("window must be an integer >= 1", {{"field", "window"}});
      }
      window = body["window"].get<std::size_t>();
    }
    frames = deps_.fixtures->DetectAll(fixture, threshold);
    snap.source = "fixture:" + fixture;
    for (const auto& label : Consolidate(frames, window, threshold)) {
      if (vocab.IsIngredient(label)) snap.detected.insert(label);
    }
  } else if (body.contains("image")) {
    const std::string bytes = DecodeBase64(RequireString(body, "image"));
    if (!deps_.remote_detector) {
      throw Error(ErrorCode::kRemoteDetectorUnavailable, "no detector endpoint is configured",
                  {{"retry_after_ms", nullptr}});
    }
    DetectionFrame frame{body.value("frame_id", std::string("image")), "image",
                         deps_.clock.wall_ms()};
    frames.push_back({frame.frame_id, deps_.remote_detector->DetectImage(bytes, frame, threshold)});
    snap.source = "image";
    for (const auto& d : frames.front().detections) {
      if (d.known) snap.detected.insert(d.label);
    }
  } else if (body.contains("ingredients")) {
    snap.source = "manual";
    snap.detected = ParseIngredientList(body["ingredients"], vocab);
  } else {
    BadBody("one of fixture_id, image or ingredients is required");
  }
  std::set<std::string> unknown;
  for (const auto& f : frames) {
    for (const auto& d : f.detections) {
      if (!d.known) unknown.insert(d.label);
    }
  }
  snap.unknown_labels.assign(unknown.begin(), unknown.end());
  snap.frames = FramesToJson(frames);

  Commit("detect", [&] { return json{{"session_id", session_id}, {"detection", ToJson(snap)}}; });
  json out = ToJson(snap);
  out["session_id"] = session_id;
  return out;
}

json ServiceCore::Recommend(const std::string& session_id, const json& body) {
  auto mu = SessionMutex(session_id);
  std::lock_guard session_lock(*mu);
  const Session session = CopySession(session_id);
  const UserProfile profile = GetProfile(session.profile_id).get<UserProfile>();

  int k = config_.recommender.k;
  if (body.contains("k")) {
    if (!body["k"].is_number_integer() || body["k"].get<long long>() < 1) {
      BadBody("k must be an integer >= 1", {{"field", "k"}});
    }
    k = body["k"].get<int>();
  }
  std::set<IngredientId> detected;
  if (body.contains("ingredients")) {
    detected = ParseIngredientList(body["ingredients"], *deps_.vocab);
  } else if (session.detection) {
    detected = session.detection->detected;
  } else {
    throw Error(ErrorCode::kPipelineOrder, "detect required first",
                {{"missing_step", "detect"}});
  }
  const auto corpus = deps_.corpus->Snapshot();
  RecommendationState rs{profile, detected, recommender_.Rank(*corpus, profile, detected, k), k};
  const Explanation notice = RecommendationNotice(rs, *deps_.vocab);
  Commit("recommend", [&] {
    return json{{"session_id", session_id}, {"recommendation", ToJson(rs)}};
  });

  json ranked = json::array();
  for (const auto& s : rs.result.ranked) {
    json item = pilar::ToJson(s);
    json attributions = json::array();
    for (const auto& a : AttributeRecipeScore(s.features, recommender_.weights())) {
      attributions.push_back(pilar::ToJson(a));
    }
    item["attributions"] = attributions;
    ranked.push_back(item);
  }
  json excluded = json::array();
  for (const auto& s : rs.result.excluded) excluded.push_back(pilar::ToJson(s));
  return {{"session_id", session_id}, {"k", k},
          {"detected", detected},     {"passing", rs.result.passing},
          {"ranked", ranked},         {"excluded", excluded},
          {"notice", pilar::ToJson(notice)}};
}

json ServiceCore::Explain(const std::string& session_id, const json& body) {
  auto mu = SessionMutex(session_id);
  std::lock_guard session_lock(*mu);
  const Session session = CopySession(session_id);
  const std::string recipe_id = RequireString(body, "recipe_id");
  const std::string query = RequireString(body, "query");
  const std::string mode_name = body.value("mode", std::string("template"));
  const auto mode = ParseMode(mode_name);
  if (!mode) BadBody("mode must be \"template\" or \"llm\"", {{"field", "mode"}});
  if (!session.recommendation) {
    throw Error(ErrorCode::kPipelineOrder, "recommend required first",
                {{"missing_step", "recommend"}});
  }
  const auto corpus = deps_.corpus->Snapshot();
  CounterfactualOptions cf;
  cf.k = config_.counterfactual.k;
  cf.max_edits = config_.counterfactual.max_edits;
  ExplainDeps explain_deps{recommender_,     *corpus,      deps_.icl.get(), deps_.llm.get(),
                           config_.llm.params, config_.icl_k, cf};
  const double t0 = deps_.clock.monotonic_ms();
  const Explanation e = pilar::Explain(*deps_.rules, *session.recommendation, recipe_id, query,
                                       *mode, explain_deps);
  const double latency = deps_.clock.monotonic_ms() - t0;

  HistoryEntry entry{recipe_id, query, pilar::ToJson(e), latency};
  Commit("explain", [&] {
    return json{{"session_id", session_id}, {"entry", EntryPayload(entry)}};
  });
  json out = ToJson(entry);
  out["session_id"] = session_id;
  return out;
}

json ServiceCore::History(const std::string& session_id) const {
  const Session s = CopySession(session_id);
  json entries = json::array();
  for (const auto& h : s.history) entries.push_back(ToJson(h));
  return {{"session_id", s.id}, {"entries", entries}};
}

json ServiceCore::ListFixtures() const { return {{"fixtures", deps_.fixtures->ListFixtures()}}; }

json ServiceCore::ListRecipes() const {
  const auto corpus = deps_.corpus->Snapshot();
  json out = json::array();
  for (const auto& r : corpus->recipes()) out.push_back(r);
  return {{"recipes", out}};
}

ApiResponse ServiceCore::Handle(std::string_view method, std::string_view path,
                                std::string_view body_text) {
  try {
    json body = json::object();
    if (!body_text.empty()) {
      try {
        body = json::parse(body_text);
      } catch (const json::exception& e) {
        BadBody(fmt::format("malformed JSON body: {}", e.what()));
      }
      if (!body.is_object()) BadBody("request body must be a JSON object");
    }
    const auto seg = SplitPath(path);
    if (seg.empty() || seg[0] != "v1") NotFound("route", std::string(path));
    const bool get = method == "GET";
    const bool post = method == "POST";
    const bool put = method == "PUT";
    const std::size_t n = seg.size();
    if (n == 2 && seg[1] == "health" && get) return {200, {{"status", "ok"}}};
    if (n == 2 && seg[1] == "fixtures" && get) return {200, ListFixtures()};
    if (n == 2 && seg[1] == "recipes" && get) return {200, ListRecipes()};
    if (n == 2 && seg[1] == "profiles" && post) return {201, CreateProfile(body)};
    if (n == 3 && seg[1] == "profiles" && get) return {200, GetProfile(seg[2])};
    if (n == 3 && seg[1] == "profiles" && put) return {200, PutProfile(seg[2], body)};
    if (n == 2 && seg[1] == "sessions" && post) return {201, CreateSession(body)};
    if (n == 3 && seg[1] == "sessions" && get) return {200, GetSession(seg[2])};
    if (n == 4 && seg[1] == "sessions") {
      const std::string& id = seg[2];
      const std::string& action = seg[3];
      if (action == "detect" && post) return {200, Detect(id, body)};
      if (action == "recommend" && post) return {200, Recommend(id, body)};
      if (action == "explain" && post) return {200, Explain(id, body)};
      if (action == "history" && get) return {200, History(id)};
    }
    NotFound("route", fmt::format("{} {}", method, path));
  } catch (const Error& e) {
    return ErrorResponse(e);
  } catch (const std::exception& e) {
    return {500, {{"error", "Internal"}, {"message", e.what()}, {"details", json::object()}}};
  }
}

}  // namespace pilar
