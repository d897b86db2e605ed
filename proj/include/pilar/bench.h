#ifndef PILAR_BENCH_H_
#define PILAR_BENCH_H_

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "pilar/config.h"
#include "pilar/intent.h"
#include "pilar/router.h"
#include "pilar/service.h"

namespace pilar {

struct ScriptStep {
  // set_profile, detect_fixture, recommend, explain
  std::string action;
  nlohmann::json args = nlohmann::json::object();
  std::optional<IntentKind> expect_intent;
};

struct ScriptTask {
  std::string name;
  std::vector<ScriptStep> steps;
};

struct TaskScript {
  std::string name;
  std::string version;
  std::vector<ScriptTask> tasks;
};

TaskScript ParseTaskScript(const nlohmann::json& j);
TaskScript LoadTaskScript(const std::filesystem::path& path);

// Walks the steps in order across tasks. Throws Error(kPipelineOrder) with
// the 0-based global step index when a step runs before its prerequisite.
void ValidatePipelineOrder(const TaskScript& script);

struct LatencyStats {
  double mean = 0;
  double p95 = 0;
  double min = 0;
  double max = 0;
};

// Nearest-rank p95. Throws Error(kInvalidArgument) on empty input.
LatencyStats ComputeStats(std::vector<double> samples);

struct BenchOptions {
  ExplainMode mode = ExplainMode::kTemplate;
  int repeat = 1;
  // "wall" or "logical".
  std::string clock = "wall";
};

// Runs the script `repeat` times, each on a fresh in-memory service.
nlohmann::json RunBench(const TaskScript& script, const Config& config,
                        const BenchOptions& options);

std::string RenderReportTable(const nlohmann::json& report);

nlohmann::json ToJson(const LatencyStats& s);

}  // namespace pilar

#endif  // PILAR_BENCH_H_
