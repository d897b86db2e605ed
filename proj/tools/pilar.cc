// pilar: operator CLI for the recipe recommender and its explanations.
#include <csignal>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "pilar/bench.h"
#include "pilar/config.h"
#include "pilar/error.h"
#include "pilar/server.h"
#include "pilar/service.h"

namespace {

using nlohmann::json;
using pilar::Error;
using pilar::ErrorCode;

constexpr int kOk = 0;
constexpr int kDomainError = 1;
constexpr int kIoError = 2;

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDataFile:
    case ErrorCode::kInvalidConfigValue:
    case ErrorCode::kCorruptLogLine:
      return kIoError;
    default:
      return kDomainError;
  }
}

struct Globals {
  std::string config_path;
  std::string data_dir;
};

pilar::Config LoadEffectiveConfig(const Globals& g) {
  std::optional<std::filesystem::path> file;
  if (!g.config_path.empty()) file = g.config_path;
  pilar::Config c = pilar::LoadConfig(file);
  if (!g.data_dir.empty()) c.data_dir = g.data_dir;
  return c;
}

std::vector<std::string> SplitList(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

// Throws on a non-2xx response so every command shares one error path.
json Unwrap(const pilar::ApiResponse& r) {
  if (r.status >= 300) {
    const auto code = r.body.value("error", std::string("Internal"));
    ErrorCode ec = ErrorCode::kInvalidArgument;
    for (int i = 0; i <= static_cast<int>(ErrorCode::kPipelineOrder); ++i) {
      if (pilar::ErrorCodeName(static_cast<ErrorCode>(i)) == code) ec = static_cast<ErrorCode>(i);
    }
    throw Error(ec, r.body.value("message", std::string("request failed")),
                r.body.value("details", json::object()));
  }
  return r.body;
}

void Print(const json& j) { std::cout << j.dump(2) << '\n'; }

int CorpusValidate(const Globals& g, const std::string& file, const std::string& vocab_path,
                   bool as_json) {
  const pilar::Config config = LoadEffectiveConfig(g);
  const auto vocab = pilar::Vocabulary::Load(
      vocab_path.empty() ? config.data_dir / "vocabulary.json" : std::filesystem::path(vocab_path));
  const json doc = pilar::ReadJsonFile(file);
  const auto violations = pilar::ValidateCorpusJson(doc, vocab);
  if (as_json) {
    json list = json::array();
    for (const auto& v : violations) {
      list.push_back({{"recipe_id", v.recipe_id}, {"index", v.index}, {"message", v.message}});
    }
    Print({{"file", file}, {"clean", violations.empty()}, {"violations", list}});
  } else {
    for (const auto& v : violations) {
      std::cout << fmt::format("{} [{}]: {}\n", v.recipe_id.empty() ? "?" : v.recipe_id, v.index,
                               v.message);
    }
    std::cout << fmt::format("{}: {} violation(s)\n", file, violations.size());
  }
  return violations.empty() ? kOk : kDomainError;
}

struct ExplainArgs {
  std::string profile;
  std::string ingredients;
  std::string recipe;
  std::string query;
  std::string mode = "template";
  bool mock = false;
  int k = 0;
  std::string clock = "logical";
};

int RunExplain(const Globals& g, const ExplainArgs& a) {
  pilar::Config config = LoadEffectiveConfig(g);
  if (a.mode == "llm") {
    if (a.mock) {
      config.llm.provider = "mock";
    } else if (!config.llm.endpoint.empty()) {
      config.llm.provider = "http";
    } else {
      throw Error(ErrorCode::kInvalidConfigValue,
                  "llm mode needs an endpoint (PILAR_LLM_ENDPOINT or llm.endpoint) or --mock",
                  {{"key", "llm.endpoint"}, {"constraint", "required without --mock"}});
    }
  }
  pilar::ServiceCore core(config, pilar::LoadServiceDeps(
                                      config, a.clock == "wall" ? pilar::Clock::System()
                                                                : pilar::Clock::Logical()));
  if (!core.deps().corpus->Snapshot()->Find(a.recipe)) {
    throw Error(ErrorCode::kUnknownRecipe, fmt::format("unknown recipe {}", a.recipe),
                {{"recipe_id", a.recipe}});
  }
  json profile = pilar::ReadJsonFile(a.profile);
  const std::string id = profile.value("id", std::string("cli"));
  Unwrap(core.Handle("PUT", "/v1/profiles/" + id, profile.dump()));
  const std::string session =
      Unwrap(core.Handle("POST", "/v1/sessions", json{{"profile_id", id}}.dump())).at("session_id");
  json rec = {{"ingredients", SplitList(a.ingredients)}};
  if (a.k > 0) rec["k"] = a.k;
  Unwrap(core.Handle("POST", "/v1/sessions/" + session + "/recommend", rec.dump()));
  Print(Unwrap(core.Handle("POST", "/v1/sessions/" + session + "/explain",
                           json{{"recipe_id", a.recipe}, {"query", a.query}, {"mode", a.mode}}
                               .dump())));
  return kOk;
}

struct BenchArgs {
  std::string script;
  std::string mode = "template";
  int repeat = 1;
  std::string clock = "wall";
  std::string out;
  bool json_only = false;
};

int RunBenchCommand(const Globals& g, const BenchArgs& a) {
  pilar::Config config = LoadEffectiveConfig(g);
  pilar::BenchOptions options;
  options.mode = *pilar::ParseMode(a.mode);
  if (options.mode == pilar::ExplainMode::kLlm && config.llm.provider == "http" &&
      config.llm.endpoint.empty()) {
    config.llm.provider = "mock";
  }
  options.repeat = a.repeat;
  options.clock = a.clock;
  const json report = pilar::RunBench(pilar::LoadTaskScript(a.script), config, options);
  if (!a.out.empty()) {
    std::ofstream out(a.out);
    out << report.dump(2) << '\n';
    if (!out) throw Error(ErrorCode::kDataFile, "cannot write " + a.out);
  }
  if (a.json_only) {
    Print(report);
  } else {
    std::cout << pilar::RenderReportTable(report);
  }
  return kOk;
}

pilar::HttpServer* g_server = nullptr;

void HandleSignal(int) {
  if (g_server) g_server->Stop();
}

struct ServeArgs {
  std::string host;
  int port = -1;
  std::string state_dir;
  std::string static_dir;
};

int RunServe(const Globals& g, const ServeArgs& a) {
  pilar::Config config = LoadEffectiveConfig(g);
  if (!a.host.empty()) config.server.host = a.host;
  if (a.port >= 0) config.server.port = a.port;
  if (!a.state_dir.empty()) config.server.state_dir = a.state_dir;
  if (!a.static_dir.empty()) config.server.static_dir = a.static_dir;
  pilar::ValidateConfig(config);
  spdlog::info("effective config: {}", pilar::ToJson(config).dump());

  std::unique_ptr<pilar::EventLog> log;
  if (!config.server.state_dir.empty()) {
    log = std::make_unique<pilar::EventLog>(config.server.state_dir);
  }
  pilar::ServiceCore core(config, pilar::LoadServiceDeps(config), std::move(log));
  if (auto warning = core.Recover()) spdlog::warn("{}", *warning);
  spdlog::info("state: {} profile(s), {} session(s)", core.Snapshot().profiles.size(),
               core.Snapshot().sessions.size());

  pilar::HttpServer server(core, config.server.static_dir);
  const int port = server.Bind(config.server.host, config.server.port);
  if (port < 0) {
    spdlog::error("cannot bind {}:{}", config.server.host, config.server.port);
    return kIoError;
  }
  g_server = &server;
  std::signal(SIGINT, HandleSignal);
  std::signal(SIGTERM, HandleSignal);
  spdlog::info("listening on http://{}:{}/v1", config.server.host, port);
  server.Serve();
  g_server = nullptr;
  return kOk;
}

int RunRecommend(const Globals& g, const std::string& profile_path, const std::string& ingredients,
                 const std::string& fixture, int k) {
  const pilar::Config config = LoadEffectiveConfig(g);
  pilar::ServiceCore core(config, pilar::LoadServiceDeps(config, pilar::Clock::Logical()));
  json profile = pilar::ReadJsonFile(profile_path);
  const std::string id = profile.value("id", std::string("cli"));
  Unwrap(core.Handle("PUT", "/v1/profiles/" + id, profile.dump()));
  const std::string session =
      Unwrap(core.Handle("POST", "/v1/sessions", json{{"profile_id", id}}.dump())).at("session_id");
  json body = json::object();
  if (!fixture.empty()) {
    Unwrap(core.Handle("POST", "/v1/sessions/" + session + "/detect",
                       json{{"fixture_id", fixture}}.dump()));
  } else {
    body["ingredients"] = SplitList(ingredients);
  }
  if (k > 0) body["k"] = k;
  Print(Unwrap(core.Handle("POST", "/v1/sessions/" + session + "/recommend", body.dump())));
  return kOk;
}

int RunDetect(const Globals& g, const std::string& fixture, double threshold, int window,
              bool list) {
  const pilar::Config config = LoadEffectiveConfig(g);
  const pilar::ServiceDeps deps = pilar::LoadServiceDeps(config);
  if (list) {
    Print({{"fixtures", deps.fixtures->ListFixtures()}});
    return kOk;
  }
  const double t = threshold >= 0 ? threshold : config.detection.threshold;
  const std::size_t w = window > 0 ? static_cast<std::size_t>(window) : config.detection.window;
  const auto frames = deps.fixtures->DetectAll(fixture, t);
  std::set<std::string> known;
  std::set<std::string> unknown;
  for (const auto& label : pilar::Consolidate(frames, w, t)) {
    if (deps.vocab->IsIngredient(label)) known.insert(label);
  }
  for (const auto& f : frames) {
    for (const auto& d : f.detections) {
      if (!d.known) unknown.insert(d.label);
    }
  }
  Print({{"fixture_id", fixture},
         {"threshold", t},
         {"window", w},
         {"frames", pilar::FramesToJson(frames)},
         {"detected", known},
         {"unknown_labels", unknown}});
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"pilar: explainable recipe recommendations"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--config", g.config_path, "Config file (default: $PILAR_CONFIG)");
  app.add_option("--data-dir", g.data_dir, "Data directory (overrides config)");

  auto* corpus = app.add_subcommand("corpus", "Corpus tools");
  corpus->require_subcommand(1);
  auto* validate = corpus->add_subcommand("validate", "Check every recipe invariant");
  std::string corpus_file;
  std::string vocab_file;
  bool validate_json = false;
  validate->add_option("file", corpus_file, "Corpus JSON file")->required();
  validate->add_option("--vocab", vocab_file, "Vocabulary file (default: <data>/vocabulary.json)");
  validate->add_flag("--json", validate_json, "Machine-readable report");

  auto* explain = app.add_subcommand("explain", "One-shot recommend + explain, JSON to stdout");
  ExplainArgs ea;
  explain->add_option("--profile", ea.profile, "Profile JSON file")->required();
  explain->add_option("--ingredients", ea.ingredients, "Comma-separated ingredients")->required();
  explain->add_option("--recipe", ea.recipe, "Recipe id")->required();
  explain->add_option("--query", ea.query, "Question text")->required();
  explain->add_option("--mode", ea.mode, "template or llm")
      ->check(CLI::IsMember({"template", "llm"}));
  explain->add_flag("--mock", ea.mock, "Use the offline mock LLM");
  explain->add_option("--k", ea.k, "Recommendation list size");
  explain->add_option("--clock", ea.clock, "logical (reproducible latency) or wall")
      ->check(CLI::IsMember({"logical", "wall"}));

  auto* bench = app.add_subcommand("bench", "Benchmarks");
  bench->require_subcommand(1);
  auto* tasks = bench->add_subcommand("tasks", "Replay a task script and report latency");
  BenchArgs ba;
  tasks->add_option("--script", ba.script, "Task script JSON")->required();
  tasks->add_option("--mode", ba.mode, "template or llm")->check(CLI::IsMember({"template", "llm"}));
  tasks->add_option("--repeat", ba.repeat, "Runs per step")->check(CLI::PositiveNumber);
  tasks->add_option("--clock", ba.clock, "wall or logical")
      ->check(CLI::IsMember({"wall", "logical"}));
  tasks->add_option("--out", ba.out, "Also write the JSON report here");
  tasks->add_flag("--json", ba.json_only, "Print the JSON report instead of the table");

  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  ServeArgs sa;
  serve->add_option("--host", sa.host, "Bind address");
  serve->add_option("--port", sa.port, "Port (0 picks a free one)");
  serve->add_option("--state-dir", sa.state_dir, "Event log directory");
  serve->add_option("--static-dir", sa.static_dir, "Web assets served at /");

  auto* recommend = app.add_subcommand("recommend", "Rank recipes, JSON to stdout");
  std::string rec_profile;
  std::string rec_ingredients;
  std::string rec_fixture;
  int rec_k = 0;
  recommend->add_option("--profile", rec_profile, "Profile JSON file")->required();
  auto* rec_ing = recommend->add_option("--ingredients", rec_ingredients, "Comma-separated list");
  auto* rec_fix = recommend->add_option("--fixture", rec_fixture, "Detection fixture id");
  rec_ing->excludes(rec_fix);
  recommend->add_option("--k", rec_k, "List size");

  auto* detect = app.add_subcommand("detect", "Run the fixture detector");
  std::string det_fixture;
  double det_threshold = -1;
  int det_window = 0;
  bool det_list = false;
  detect->add_option("--fixture", det_fixture, "Fixture id");
  detect->add_option("--threshold", det_threshold, "Confidence threshold")
      ->check(CLI::Range(0.0, 1.0));
  detect->add_option("--window", det_window, "Consolidation window")->check(CLI::PositiveNumber);
  detect->add_flag("--list", det_list, "List fixtures");

  auto* config_cmd = app.add_subcommand("config", "Print the effective config (secrets redacted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? kOk : kIoError;
  }

  try {
    if (*validate) return CorpusValidate(g, corpus_file, vocab_file, validate_json);
    if (*explain) return RunExplain(g, ea);
    if (*tasks) return RunBenchCommand(g, ba);
    if (*serve) return RunServe(g, sa);
    if (*recommend) {
      if (rec_ingredients.empty() && rec_fixture.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "one of --ingredients or --fixture is required");
      }
      return RunRecommend(g, rec_profile, rec_ingredients, rec_fixture, rec_k);
    }
    if (*detect) {
      if (!det_list && det_fixture.empty()) {
        throw Error(ErrorCode::kInvalidArgument, "--fixture or --list is required");
      }
      return RunDetect(g, det_fixture, det_threshold, det_window, det_list);
    }
    if (*config_cmd) {
      Print(pilar::ToJson(LoadEffectiveConfig(g)));
      return kOk;
    }
  } catch (const Error& e) {
    Print(e.ToJson());
    return ExitCodeFor(e.code());
  } catch (const std::exception& e) {
    Print({{"error", "IO"}, {"message", e.what()}, {"details", json::object()}});
    return kIoError;
  }
  return kOk;
}
