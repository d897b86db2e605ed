#include <gtest/gtest.h>

#include <fstream>
#include <map>

#include "pilar/config.h"
#include "pilar/error.h"
#include "support.h"

namespace pilar {
namespace {

EnvLookup FakeEnv(std::map<std::string, std::string> vars) {
  return [vars](const char* name) -> std::optional<std::string> {
    auto it = vars.find(name);
    if (it == vars.end()) return std::nullopt;
    return it->second;
  };
}

std::filesystem::path WriteConfig(const nlohmann::json& j) {
  const auto dir = testing::TempDir("config");
  const auto path = dir / "config.json";
  std::ofstream(path) << j.dump();
  return path;
}

ErrorCode CodeOf(const std::function<void()>& f, nlohmann::json* details = nullptr) {
  try {
    f();
  } catch (const Error& e) {
    if (details) *details = e.details();
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

TEST(Config, Defaults) {
  const Config c = LoadConfig(std::nullopt, FakeEnv({}));
  EXPECT_EQ(c.llm.provider, "mock");
  EXPECT_DOUBLE_EQ(c.llm.params.temperature, 0.2);
  EXPECT_EQ(c.llm.params.max_tokens, 1000);
  EXPECT_EQ(c.llm.params.model_id, "gpt-4o-mini");
  EXPECT_DOUBLE_EQ(c.detection.threshold, 0.5);
  EXPECT_EQ(c.detection.window, 3u);
  EXPECT_EQ(c.recommender.k, 3);
  EXPECT_EQ(c.recommender.weights, ScoringWeights::Default());
  EXPECT_EQ(c.icl_k, 3u);
  EXPECT_EQ(c.counterfactual.max_edits, 3u);
  EXPECT_EQ(c.server.port, 8080);
}

TEST(Config, ExampleFileLoads) {
  const Config c = LoadConfig(testing::DataDir() / "config.example.json", FakeEnv({}));
  EXPECT_EQ(c.llm.provider, "mock");
}

TEST(Config, EnvOverridesFile) {
  const auto path = WriteConfig({{"llm", {{"provider", "http"}, {"endpoint", "http://file"}}}});
  const Config c = LoadConfig(std::nullopt, FakeEnv({{"PILAR_CONFIG", path.string()},
                                                     {"PILAR_LLM_ENDPOINT", "http://env"},
                                                     {"PILAR_LLM_API_KEY", "secret"},
                                                     {"PILAR_DATA_DIR", "/tmp/d"}}));
  EXPECT_EQ(c.llm.endpoint, "http://env");
  EXPECT_EQ(c.llm.api_key, "secret");
  EXPECT_EQ(c.data_dir, "/tmp/d");
}

TEST(Config, ExplicitFileBeatsConfigEnv) {
  const auto a = WriteConfig({{"recommender", {{"k", 5}}}});
  const auto b = WriteConfig({{"recommender", {{"k", 7}}}});
  const Config c = LoadConfig(a, FakeEnv({{"PILAR_CONFIG", b.string()}}));
  EXPECT_EQ(c.recommender.k, 5);
}

TEST(Config, NegativeTemperatureRejected) {
  const auto path = WriteConfig({{"llm", {{"temperature", -1}}}});
  nlohmann::json details;
  EXPECT_EQ(CodeOf([&] { LoadConfig(path, FakeEnv({})); }, &details), ErrorCode::kInvalidConfigValue);
  EXPECT_EQ(details["key"], "llm.temperature");
  EXPECT_FALSE(details["constraint"].get<std::string>().empty());
}

TEST(Config, RejectsUnknownKeysAndTypes) {
  nlohmann::json details;
  Config c;
  EXPECT_EQ(CodeOf([&] { ApplyConfigJson(c, {{"llm", {{"temprature", 0.1}}}}); }, &details),
            ErrorCode::kInvalidConfigValue);
  EXPECT_EQ(details["key"], "llm.temprature");
  EXPECT_EQ(CodeOf([&] { ApplyConfigJson(c, {{"recommender", {{"k", "three"}}}}); }),
            ErrorCode::kInvalidConfigValue);
}

TEST(Config, HttpProviderNeedsEndpoint) {
  const auto path = WriteConfig({{"llm", {{"provider", "http"}}}});
  nlohmann::json details;
  EXPECT_EQ(CodeOf([&] { LoadConfig(path, FakeEnv({})); }, &details), ErrorCode::kInvalidConfigValue);
  EXPECT_EQ(details["key"], "llm.endpoint");
}

TEST(Config, WeightsMustSumToOne) {
  const auto path =
      WriteConfig({{"recommender", {{"weights", {{"match", 0.5}, {"diet", 0.5}, {"goal", 0.5}, {"calorie", 0}}}}}});
  EXPECT_EQ(CodeOf([&] { LoadConfig(path, FakeEnv({})); }), ErrorCode::kInvalidConfigValue);
}

TEST(Config, MissingFileIsDataFileError) {
  EXPECT_EQ(CodeOf([&] { LoadConfig("/nonexistent/pilar.json", FakeEnv({})); }), ErrorCode::kDataFile);
}

TEST(Config, RedactsApiKey) {
  Config c;
  c.llm.api_key = "sk-live";
  EXPECT_EQ(ToJson(c)["llm"]["api_key"], "***");
  EXPECT_EQ(ToJson(c, false)["llm"]["api_key"], "sk-live");
}

}  // namespace
}  // namespace pilar
