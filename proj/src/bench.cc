#include "pilar/bench.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "pilar/error.h"

namespace pilar {

namespace {

using nlohmann::json;

constexpr std::string_view kActions[] = {"set_profile", "detect_fixture", "recommend", "explain"};
constexpr double kDimensionCount = 5.0;

[[noreturn]] void OrderError(std::size_t index, const ScriptTask& task, const ScriptStep& step,
                             std::string_view missing) {
  throw Error(ErrorCode::kPipelineOrder,
              fmt::format("step {} ({} {}) requires {} first", index, task.name, step.action,
                          missing),
              {{"step_index", index},
               {"task", task.name},
               {"action", step.action},
               {"missing_step", missing}});
}

struct StepRecord {
  std::vector<double> latencies;
  json detail;
};

}  // namespace

TaskScript ParseTaskScript(const json& j) {
  TaskScript script;
  try {
    script.name = j.at("name");
    script.version = j.at("version");
    std::size_t index = 0;
    for (const auto& t : j.at("tasks")) {
      ScriptTask task;
      task.name = t.at("name");
      for (const auto& s : t.at("steps")) {
        ScriptStep step;
        step.action = s.at("action");
        if (std::find(std::begin(kActions), std::end(kActions), step.action) ==
            std::end(kActions)) {
          throw Error(ErrorCode::kInvalidArgument,
                      fmt::format("step {}: unknown action {}", index, step.action),
                      {{"step_index", index}});
        }
        step.args = s.value("args", json::object());
        if (s.contains("expect_intent")) {
          step.expect_intent = ParseIntentKind(s["expect_intent"].get<std::string>());
          if (!step.expect_intent) {
            throw Error(ErrorCode::kInvalidArgument,
                        fmt::format("step {}: unknown intent {}", index,
                                    s["expect_intent"].get<std::string>()),
                        {{"step_index", index}});
          }
        }
        task.steps.push_back(std::move(step));
        ++index;
      }
      script.tasks.push_back(std::move(task));
    }
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kDataFile, fmt::format("task script: {}", e.what()));
  }
  return script;
}

TaskScript LoadTaskScript(const std::filesystem::path& path) {
  return ParseTaskScript(ReadJsonFile(path));
}

void ValidatePipelineOrder(const TaskScript& script) {
  bool profile = false;
  bool detected = false;
  bool recommended = false;
  std::size_t index = 0;
  for (const auto& task : script.tasks) {
    for (const auto& step : task.steps) {
      if (step.action == "set_profile") {
        profile = true;
      } else if (step.action == "detect_fixture") {
        if (!profile) OrderError(index, task, step, "set_profile");
        detected = true;
      } else if (step.action == "recommend") {
        if (!profile) OrderError(index, task, step, "set_profile");
        if (!detected && !step.args.contains("ingredients")) {
          OrderError(index, task, step, "detect_fixture");
        }
        recommended = true;
      } else if (step.action == "explain") {
        if (!recommended) OrderError(index, task, step, "recommend");
      }
      ++index;
    }
  }
}

LatencyStats ComputeStats(std::vector<double> samples) {
  if (samples.empty()) throw Error(ErrorCode::kInvalidArgument, "no samples");
  std::sort(samples.begin(), samples.end());
  LatencyStats s;
  s.mean = std::accumulate(samples.begin(), samples.end(), 0.0) /
           static_cast<double>(samples.size());
  const auto rank = static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(samples.size())));
  s.p95 = samples[std::max<std::size_t>(rank, 1) - 1];
  s.min = samples.front();
  s.max = samples.back();
  return s;
}

json ToJson(const LatencyStats& s) {
  return {{"mean", s.mean}, {"p95", s.p95}, {"min", s.min}, {"max", s.max}};
}

json RunBench(const TaskScript& script, const Config& config, const BenchOptions& options) {
  if (options.repeat < 1) throw Error(ErrorCode::kInvalidArgument, "repeat must be >= 1");
  if (options.clock != "wall" && options.clock != "logical") {
    throw Error(ErrorCode::kInvalidArgument, "clock must be \"wall\" or \"logical\"");
  }
  ValidatePipelineOrder(script);
  const ServiceDeps base = LoadServiceDeps(config);

  // records[task][step]
  std::vector<std::vector<StepRecord>> records(script.tasks.size());
  for (std::size_t t = 0; t < script.tasks.size(); ++t) {
    records[t].resize(script.tasks[t].steps.size());
  }
  std::vector<std::vector<double>> task_totals(script.tasks.size());

  for (int run = 0; run < options.repeat; ++run) {
    ServiceDeps deps = base;
    deps.clock = options.clock == "logical" ? Clock::Logical() : Clock::System();
    const Clock clock = deps.clock;
    ServiceCore core(config, std::move(deps));
    std::string session;
    std::string top;
    std::size_t index = 0;
    for (std::size_t t = 0; t < script.tasks.size(); ++t) {
      const auto& task = script.tasks[t];
      double total = 0;
      for (std::size_t s = 0; s < task.steps.size(); ++s, ++index) {
        const auto& step = task.steps[s];
        json detail = {{"index", index}, {"action", step.action}};
        const double t0 = clock.monotonic_ms();
        try {
          if (step.action == "set_profile") {
            const json& profile = step.args.at("profile");
            const std::string id = profile.at("id");
            core.PutProfile(id, profile);
            if (session.empty()) {
              session = core.CreateSession({{"profile_id", id}}).at("session_id");
            }
          } else if (step.action == "detect_fixture") {
            json body = {{"fixture_id", step.args.at("fixture_id")}};
            if (step.args.contains("threshold")) body["threshold"] = step.args["threshold"];
            const json out = core.Detect(session, body);
            detail["detected"] = out.at("detected");
          } else if (step.action == "recommend") {
            json body = step.args;
            const json out = core.Recommend(session, body);
            top = out.at("ranked").empty() ? "" : out["ranked"][0]["recipe"]["id"].get<std::string>();
            detail["top"] = top;
          } else {
            std::string recipe = step.args.at("recipe");
            if (recipe == "$top") recipe = top;
            const std::string query = step.args.at("query");
            const json out = core.Explain(session, {{"recipe_id", recipe},
                                                    {"query", query},
                                                    {"mode", ModeName(options.mode)}});
            const std::string intent = out.at("intent").at("kind");
            detail["recipe_id"] = recipe;
            detail["query"] = query;
            detail["intent"] = intent;
            if (step.expect_intent) {
              detail["expected_intent"] = IntentName(*step.expect_intent);
              detail["intent_ok"] = intent == IntentName(*step.expect_intent);
            }
            detail["strategy"] = out.at("strategy");
            detail["dimensions"] = out.at("dimensions");
            detail["dimension_coverage"] =
                static_cast<double>(out.at("dimensions").size()) / kDimensionCount;
            detail["groundedness_flags"] = out.at("flags").size();
          }
        } catch (const Error& e) {
          auto details = e.details();
          details["step_index"] = index;
          details["task"] = task.name;
          throw Error(e.code(), fmt::format("step {} ({} {}): {}", index, task.name, step.action,
                                            e.what()),
                      details);
        }
        const double elapsed = clock.monotonic_ms() - t0;
        total += elapsed;
        records[t][s].latencies.push_back(elapsed);
        records[t][s].detail = std::move(detail);
      }
      task_totals[t].push_back(total);
    }
  }

  json tasks = json::array();
  std::size_t explanations = 0;
  std::size_t mismatches = 0;
  std::size_t flags = 0;
  double coverage = 0;
  for (std::size_t t = 0; t < script.tasks.size(); ++t) {
    json steps = json::array();
    for (auto& rec : records[t]) {
      json step = rec.detail;
      step["latency_ms"] = ToJson(ComputeStats(rec.latencies));
      if (step.at("action") == "explain") {
        ++explanations;
        flags += step.at("groundedness_flags").get<std::size_t>();
        coverage += step.at("dimension_coverage").get<double>();
        if (step.contains("intent_ok") && !step["intent_ok"].get<bool>()) ++mismatches;
      }
      steps.push_back(std::move(step));
    }
    tasks.push_back({{"name", script.tasks[t].name},
                     {"total_ms", ToJson(ComputeStats(task_totals[t]))},
                     {"steps", steps}});
  }
  return {{"script", script.name},
          {"version", script.version},
          {"mode", ModeName(options.mode)},
          {"repeat", options.repeat},
          {"clock", options.clock},
          {"tasks", tasks},
          {"summary",
           {{"explanations", explanations},
            {"intent_mismatches", mismatches},
            {"groundedness_flags", flags},
            {"dimension_coverage_mean",
             explanations ? coverage / static_cast<double>(explanations) : 0.0}}}};
}

std::string RenderReportTable(const json& report) {
  std::string out = fmt::format("script {} ({}), mode {}, repeat {}, clock {}\n",
                                report.at("script").get<std::string>(),
                                report.at("version").get<std::string>(),
                                report.at("mode").get<std::string>(), report.at("repeat").get<int>(),
                                report.at("clock").get<std::string>());
  out += fmt::format("{:<5} {:>4}  {:<15} {:<10} {:<15} {:>10} {:>10}  {:<24} {:>5}\n", "task",
                     "step", "action", "intent", "strategy", "mean_ms", "p95_ms", "dimensions",
                     "flags");
  for (const auto& task : report.at("tasks")) {
    for (const auto& step : task.at("steps")) {
      std::string dims = "-";
      if (step.contains("dimensions")) {
        std::vector<std::string> d = step["dimensions"];
        dims = fmt::format("{}", fmt::join(d, ","));
      }
      std::string intent = step.value("intent", std::string("-"));
      if (step.contains("intent_ok") && !step["intent_ok"].get<bool>()) intent += "!";
      out += fmt::format("{:<5} {:>4}  {:<15} {:<10} {:<15} {:>10.3f} {:>10.3f}  {:<24} {:>5}\n",
                         task.at("name").get<std::string>(), step.at("index").get<int>(),
                         step.at("action").get<std::string>(), intent,
                         step.value("strategy", std::string("-")),
                         step.at("latency_ms").at("mean").get<double>(),
                         step.at("latency_ms").at("p95").get<double>(), dims,
                         step.contains("groundedness_flags")
                             ? std::to_string(step["groundedness_flags"].get<int>())
                             : std::string("-"));
    }
    out += fmt::format("{:<5} total {:>48.3f} {:>10.3f}\n", task.at("name").get<std::string>(),
                       task.at("total_ms").at("mean").get<double>(),
                       task.at("total_ms").at("p95").get<double>());
  }
  const auto& s = report.at("summary");
  out += fmt::format("explanations {}, intent mismatches {}, groundedness flags {}, mean dimension "
                     "coverage {:.2f}\n",
                     s.at("explanations").get<int>(), s.at("intent_mismatches").get<int>(),
                     s.at("groundedness_flags").get<int>(),
                     s.at("dimension_coverage_mean").get<double>());
  return out;
}

}  // namespace pilar
