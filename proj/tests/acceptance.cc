// Acceptance checks: one PASS/FAIL line per criterion, exit status 1 if any fail.
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <thread>

#include <fmt/core.h>

#include "httplib.h"
#include "pilar/bench.h"
#include "pilar/context.h"
#include "pilar/error.h"
#include "pilar/event_log.h"
#include "pilar/intent.h"
#include "pilar/llm.h"
#include "pilar/server.h"
#include "pilar/service.h"
#include "pilar/template.h"
#include "stub_server.h"
#include "support.h"

namespace pilar {
namespace {

using nlohmann::json;
using testing::Gen;
using testing::SharedVocab;

struct Verdict {
  bool pass = false;
  std::string detail;
};

std::vector<std::string> Names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

// Weighted sum plus up to three pairwise products.
InstanceScoreFn RandomFunction(Gen& g, std::size_t n) {
  std::vector<double> w(n);
  for (auto& v : w) v = g.Real(-1, 1);
  std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
  for (int i = g.Int(0, 3); i > 0 && n > 1; --i) pairs.emplace_back(g.Index(n), g.Index(n), g.Real(-1, 1));
  const double bias = g.Real(-1, 1);
  return [w, pairs, bias](std::span<const double> x) {
    double s = bias;
    for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
    for (const auto& [a, b, c] : pairs) s += c * x[a] * x[b];
    return s;
  };
}

std::vector<double> RandomVector(Gen& g, std::size_t n) {
  std::vector<double> v(n);
  for (auto& x : v) x = g.Real(0, 1);
  return v;
}

Verdict ShapleyAxioms() {
  const auto t0 = std::chrono::steady_clock::now();
  Gen g(101);
  double worst_eff = 0;
  double worst_sym = 0;
  double worst_dummy = 0;
  for (int iter = 0; iter < 100; ++iter) {
    const auto n = static_cast<std::size_t>(g.Int(1, 12));
    const auto f = RandomFunction(g, n);
    const auto x = RandomVector(g, n);
    const std::vector<double> base(n, 0.0);
    double sum = 0;
    for (const auto& a : ShapleyValues(f, x, base, Names(n))) sum += a.phi;
    worst_eff = std::max(worst_eff, std::abs(sum - (f(x) - f(base))));
  }
  for (int iter = 0; iter < 100; ++iter) {
    const auto n = static_cast<std::size_t>(g.Int(3, 12));
    std::vector<double> w(n);
    for (auto& v : w) v = g.Real(-1, 1);
    w[1] = w[0];
    w[n - 1] = 0;
    const double c = g.Real(-1, 1);
    InstanceScoreFn f = [w, c](std::span<const double> x) {
      double s = c * x[0] * x[1];
      for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * x[i];
      return s;
    };
    auto x = RandomVector(g, n);
    x[1] = x[0];
    const auto phi = ShapleyValues(f, x, std::vector<double>(n, 0.0), Names(n));
    worst_sym = std::max(worst_sym, std::abs(phi[0].phi - phi[1].phi));
    worst_dummy = std::max(worst_dummy, std::abs(phi[n - 1].phi));
  }
  for (int iter = 0; iter < 100; ++iter) {
    // Dummy feature placed at a random index of a non-linear function.
    const auto n = static_cast<std::size_t>(g.Int(2, 12));
    const std::size_t dummy = g.Index(n);
    const auto inner = RandomFunction(g, n);
    InstanceScoreFn f = [inner, dummy](std::span<const double> x) {
      std::vector<double> z(x.begin(), x.end());
      z[dummy] = 0;
      return inner(z);
    };
    const auto phi = ShapleyValues(f, RandomVector(g, n), std::vector<double>(n, 0.0), Names(n));
    worst_dummy = std::max(worst_dummy, std::abs(phi[dummy].phi));
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  const double worst = std::max({worst_eff, worst_sym, worst_dummy});
  return {worst < 1e-9 && secs < 10.0,
          fmt::format("max error efficiency {:.1e} symmetry {:.1e} dummy {:.1e}, {:.2f} s", worst_eff,
                      worst_sym, worst_dummy, secs)};
}

Verdict ShapleyOracle() {
  Gen g(102);
  double worst = 0;
  for (int iter = 0; iter < 50; ++iter) {
    const auto f = RandomFunction(g, 4);
    const auto x = RandomVector(g, 4);
    const auto base = RandomVector(g, 4);
    const auto phi = ShapleyValues(f, x, base, Names(4));
    const auto oracle = testing::PermutationShapley(f, x, base);
    for (std::size_t i = 0; i < 4; ++i) worst = std::max(worst, std::abs(phi[i].phi - oracle[i]));
  }
  return {worst < 1e-9, fmt::format("50 functions, max |exact - permutation| {:.1e}", worst)};
}

Outcome RerankOutcome(const Recommender& rec, const Corpus& corpus, const CounterfactualInstance& inst,
                      const Counterfactual& cf) {
  UserProfile p = inst.profile;
  std::set<IngredientId> d = inst.detected;
  ApplyEdits(cf.edits, 25, p, d);
  const auto result = rec.Rank(corpus, p, d, inst.k);
  Outcome o;
  o.status = OutcomeStatus::kBelowCutoff;
  for (const auto& s : result.ranked) {
    if (s.recipe.id == inst.recipe_id) o = {OutcomeStatus::kIncluded, s.rank, s.score, std::nullopt};
  }
  for (const auto& s : result.excluded) {
    if (s.recipe.id == inst.recipe_id) o = {OutcomeStatus::kExcluded, 0, 0, s.excluded};
  }
  return o;
}

Verdict CounterfactualValidity() {
  const auto& vocab = *SharedVocab();
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  Gen g(103);
  int instances = 0;
  int returned = 0;
  int invalid = 0;
  int no_cf = 0;
  for (int iter = 0; instances < 200; ++iter) {
    const Corpus corpus(testing::RandomRecipes(g, vocab, 12, 5), vocab);
    CounterfactualInstance inst{testing::RandomProfile(g, vocab), testing::RandomDetected(g, vocab, 6),
                                corpus.recipes()[g.Index(corpus.size())].id, g.Int(1, 3)};
    const auto target = g.Coin(0.7) ? CounterfactualTarget::Include() : CounterfactualTarget::Exclude();
    ++instances;
    std::vector<Counterfactual> cfs;
    try {
      cfs = DiverseCounterfactuals(rec, corpus, inst, target);
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kNoCounterfactualWithinBudget) ++invalid;
      ++no_cf;
      continue;
    }
    for (const auto& cf : cfs) {
      ++returned;
      const Outcome o = RerankOutcome(rec, corpus, inst, cf);
      if (!target.SatisfiedBy(o) || o.status != cf.resulting_outcome.status) ++invalid;
    }
  }
  return {invalid == 0 && returned > 0,
          fmt::format("{} instances, {} counterfactuals re-ranked, {} invalid, {} without one in budget",
                      instances, returned, invalid, no_cf)};
}

Verdict CounterfactualMinimality() {
  const auto vocab = std::make_shared<const Vocabulary>(testing::SmallVocabulary());
  const Recommender rec(vocab, ScoringWeights::Default());
  Gen g(104);
  int compared = 0;
  int agree = 0;
  int skipped = 0;
  std::size_t max_states = 0;
  while (compared < 50) {
    const Corpus corpus(testing::RandomRecipes(g, *vocab, 4, 3), *vocab);
    CounterfactualInstance inst{testing::RandomProfile(g, *vocab), testing::RandomDetected(g, *vocab, 3),
                                corpus.recipes()[g.Index(corpus.size())].id, 1};
    const auto target = g.Coin(0.6) ? CounterfactualTarget::Include() : CounterfactualTarget::Exclude();
    const auto oracle = testing::ExhaustiveMinEdits(rec, corpus, inst, target, 2, 10000);
    if (oracle.states > 10000) {
      ++skipped;
      continue;
    }
    max_states = std::max(max_states, oracle.states);
    ++compared;
    CounterfactualOptions opts;
    opts.max_edits = 2;
    try {
      const auto cfs = DiverseCounterfactuals(rec, corpus, inst, target, opts);
      if (oracle.min_edits && cfs.front().edit_distance == *oracle.min_edits) ++agree;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoCounterfactualWithinBudget && !oracle.min_edits) ++agree;
    }
  }
  return {agree == compared,
          fmt::format("{}/{} cases match the exhaustive optimum (max {} states, {} skipped over cap)", agree,
                      compared, max_states, skipped)};
}

Verdict AllergenSafety() {
  const auto& vocab = *SharedVocab();
  const Recommender rec(SharedVocab(), ScoringWeights::Default());
  Gen g(105);
  int leaks = 0;
  int unnamed = 0;
  int exclusions = 0;
  for (int iter = 0; iter < 1000; ++iter) {
    const Corpus corpus(testing::RandomRecipes(g, vocab, 20), vocab);
    UserProfile p = testing::RandomProfile(g, vocab);
    p.allergens.insert(g.Pick(testing::IngredientIds(vocab)));
    const auto result = rec.Rank(corpus, p, testing::RandomDetected(g, vocab, 8), g.Int(1, 20));
    for (const auto& s : result.ranked) {
      for (const auto& i : s.recipe.ingredients) leaks += p.allergens.count(i) ? 1 : 0;
      for (const auto& t : vocab.EffectiveTags(s.recipe)) leaks += p.allergens.count(t) ? 1 : 0;
    }
    for (const auto& s : result.excluded) {
      ++exclusions;
      if (!s.excluded || s.excluded->cause.empty() || s.excluded->message.empty()) ++unnamed;
    }
  }
  return {leaks == 0 && unnamed == 0,
          fmt::format("1000 pairs, {} allergen leaks, {} of {} exclusions without a cause", leaks, unnamed,
                      exclusions)};
}

std::string RandomCase(Gen& g, std::string s) {
  for (auto& c : s) {
    if (g.Coin(0.2)) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  return s;
}

Verdict RouterFidelity() {
  const IntentRules rules = IntentRules::Load(testing::DataDir() / "intent_rules.json");
  const std::vector<std::pair<std::string, IntentKind>> tasks = {
      {"Why was this recipe recommended?", IntentKind::kWhy},
      {"Why wasn't this recipe recommended?", IntentKind::kWhyNot},
      {"How can I modify this recipe to better suit my dietary restrictions or preferences?",
       IntentKind::kHowTo},
      {"What are the health benefits of this recipe?", IntentKind::kFreeForm}};
  int task_ok = 0;
  for (const auto& [q, kind] : tasks) task_ok += rules.Classify(q).kind == kind ? 1 : 0;
  Gen g(106);
  const std::vector<std::string> openers = {"why", "but why", "so why", "and why", "ok why"};
  const std::vector<std::string> negations = {
      "wasn't", "isn't", "didn't", "doesn't", "don't", "weren't", "aren't", "won't", "hasn't",
      "haven't", "can't", "couldn't", "wouldn't", "shouldn't", "wasnt", "isnt", "didnt", "cannot",
      "wasn’t", "isn’t", "was ... not", "is ... not", "did you not", "was there no"};
  const std::vector<std::string> subjects = {"this recipe", "the beef stew", "a vegan option", "it",
                                             "Peanut Tofu Satay"};
  const std::vector<std::string> tails = {"recommended", "suggested", "shown", "picked", "in my list"};
  const std::vector<std::string> ends = {"?", "", "??", "."};
  int why = 0;
  int not_why_not = 0;
  const int total = 2000;
  for (int iter = 0; iter < total; ++iter) {
    const std::string neg = g.Pick(negations);
    std::string q;
    const auto dots = neg.find(" ... ");
    if (dots != std::string::npos) {
      q = g.Pick(openers) + " " + neg.substr(0, dots) + " " + g.Pick(subjects) + " " + neg.substr(dots + 5) +
          " " + g.Pick(tails) + g.Pick(ends);
    } else {
      q = g.Pick(openers) + " " + neg + " " + g.Pick(subjects) + " " + g.Pick(tails) + g.Pick(ends);
    }
    const auto kind = rules.Classify(RandomCase(g, q)).kind;
    why += kind == IntentKind::kWhy ? 1 : 0;
    not_why_not += kind != IntentKind::kWhyNot ? 1 : 0;
  }
  return {task_ok == 4 && why == 0,
          fmt::format("task queries {}/4 correct; {} why-not phrasings, {} as WHY, {} outside WHY_NOT", task_ok,
                      total, why, not_why_not)};
}

ExplanationContext TomatoSoupContext() {
  ExplanationContext ctx;
  ctx.detected = {"tomato", "onion"};
  ctx.recipe = {"tomato_soup", "Tomato Soup", {"vegan", "low_sugar"}, 220, {"tomato", "onion", "garlic", "basil"}};
  ctx.profile = {"vegan", {"high_fiber"}};
  ctx.query = "Why was this recipe recommended?";
  ctx.intent = {IntentKind::kWhy, "why.plain"};
  ctx.decision.status = OutcomeStatus::kIncluded;
  ctx.decision.position = 1;
  ctx.decision.k = 3;
  ctx.decision.score = 0.87;
  ctx.decision.top_feature = "ingredient_coverage";
  return ctx;
}

Verdict PromptGoldens() {
  const auto& vocab = *SharedVocab();
  const auto golden = [](const char* name) { return testing::ReadFile(testing::GoldenDir() / name); };
  const auto ctx = TomatoSoupContext();
  const IclStore icl = IclStore::Load(testing::DataDir() / "icl_examples.json", vocab);
  const bool tmpl = FillTemplatePrompt(ctx, vocab) == golden("prompt_template.txt");
  const bool llm0 = AssemblePrompt(ctx, {}, 0, vocab) == golden("prompt_llm_k0.txt");
  const bool llm3 = AssemblePrompt(ctx, icl.ForIntent(IntentKind::kWhy, 3), 3, vocab) == golden("prompt_llm_k3.txt");
  const json body = RequestBody({SystemMessage(ctx), AssemblePrompt(ctx, {}, 0, vocab), {}});
  const bool params = body["temperature"] == 0.2 && body["max_tokens"] == 1000;
  return {tmpl && llm0 && llm3 && params,
          fmt::format("template prompt {}, llm prompt {}, llm prompt with 3 examples {}, temperature {} max_tokens {}",
                      tmpl ? "identical" : "differs", llm0 ? "identical" : "differs",
                      llm3 ? "identical" : "differs", body["temperature"].dump(), body["max_tokens"].dump())};
}

Verdict OfflineDeterminism() {
  testing::StubServer stub;
  std::atomic<int> hits{0};
  const auto fail = [&](const httplib::Request&, httplib::Response& res) {
    ++hits;
    res.status = 500;
  };
  stub.server().Post(".*", fail);
  stub.server().Get(".*", fail);
  stub.Start();
  Config config;
  config.data_dir = testing::DataDir();
  config.llm.provider = "mock";
  config.llm.endpoint = stub.url("/v1/chat/completions");
  config.detection.endpoint = stub.url("/detect");
  const TaskScript script = LoadTaskScript(testing::DataDir() / "scripts" / "explanation_tasks.json");
  std::vector<std::string> notes;
  bool identical = true;
  for (const ExplainMode mode : {ExplainMode::kTemplate, ExplainMode::kLlm}) {
    BenchOptions o;
    o.mode = mode;
    o.clock = "logical";
    const std::string a = RunBench(script, config, o).dump(2);
    const std::string b = RunBench(script, config, o).dump(2);
    identical = identical && a == b;
    notes.push_back(fmt::format("{} {}", ModeName(mode), a == b ? "identical" : "differs"));
  }
  return {identical && hits == 0,
          fmt::format("{}, {}; endpoint contacts {}", notes[0], notes[1], hits.load())};
}

double P95(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  return xs[static_cast<std::size_t>(std::ceil(0.95 * static_cast<double>(xs.size()))) - 1];
}

Verdict Latency() {
  const auto dir = testing::TempDir("latency");
  for (const auto& entry : std::filesystem::directory_iterator(testing::DataDir())) {
    std::filesystem::copy(entry.path(), dir / entry.path().filename(),
                          std::filesystem::copy_options::recursive);
  }
  Gen g(107);
  const auto& vocab = *SharedVocab();
  json corpus = json::array();
  for (const auto& r : testing::RandomRecipes(g, vocab, 1000, 8)) corpus.push_back(r);
  std::ofstream(dir / "corpus.json") << corpus.dump();

  Config config;
  config.data_dir = dir;
  ServiceCore core(config, LoadServiceDeps(config));
  HttpServer server(core);
  const int port = server.Bind("127.0.0.1", 0);
  if (port <= 0) return {false, "cannot bind"};
  std::thread serve([&] { server.Serve(); });
  httplib::Client cli("127.0.0.1", port);
  cli.set_keep_alive(true);
  cli.set_tcp_nodelay(true);
  const json profile = {{"id", "alex"}, {"diet", "vegetarian"}, {"health_goals", {"high_fiber"}},
                        {"allergens", {"peanut"}}, {"calorie_target", 500}};
  cli.Post("/v1/profiles", profile.dump(), "application/json");
  const auto s = cli.Post("/v1/sessions", R"({"profile_id":"alex"})", "application/json");
  const std::string base = "/v1/sessions/" + json::parse(s->body)["session_id"].get<std::string>();
  cli.Post(base + "/detect", R"({"ingredients":["tomato","onion","rice","cheese","bell_pepper","garlic"]})",
           "application/json");
  std::vector<double> samples;
  int errors = 0;
  for (int i = 0; i < 200; ++i) {
    const auto t0 = std::chrono::steady_clock::now();
    const auto rec = cli.Post(base + "/recommend", R"({"k":3})", "application/json");
    if (!rec || rec->status != 200) {
      ++errors;
      continue;
    }
    const std::string top = json::parse(rec->body)["ranked"][0]["recipe"]["id"];
    const json body = {{"recipe_id", top}, {"query", "Why was this recipe recommended?"}, {"mode", "template"}};
    const auto ex = cli.Post(base + "/explain", body.dump(), "application/json");
    if (!ex || ex->status != 200) {
      ++errors;
      continue;
    }
    samples.push_back(std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count());
  }
  server.Stop();
  serve.join();
  if (samples.empty()) return {false, fmt::format("{} failed requests", errors)};
  const double p95 = P95(samples);
  double mean = 0;
  for (double x : samples) mean += x;
  mean /= static_cast<double>(samples.size());
  return {p95 < 100.0 && errors == 0,
          fmt::format("1000 recipes over HTTP, {} round trips, p95 {:.2f} ms, mean {:.2f} ms, {} errors",
                      samples.size(), p95, mean, errors)};
}

Verdict Persistence() {
  const auto dir = testing::TempDir("persist");
  Config config;
  config.data_dir = testing::DataDir();
  const auto deps = LoadServiceDeps(config, Clock::Logical());
  json before;
  std::uint64_t events = 0;
  {
    ServiceCore core(config, deps, std::make_unique<EventLog>(dir));
    core.Recover();
    Gen g(108);
    for (int p = 0; p < 10; ++p) {
      UserProfile profile = testing::RandomProfile(g, *SharedVocab());
      profile.id = "p" + std::to_string(p);
      core.Handle("PUT", "/v1/profiles/" + profile.id, json(profile).dump());
      const std::string sid =
          core.Handle("POST", "/v1/sessions", json{{"profile_id", profile.id}}.dump()).body["session_id"];
      core.Handle("POST", "/v1/sessions/" + sid + "/detect", R"({"fixture_id":"fridge_01"})");
      const auto rec = core.Handle("POST", "/v1/sessions/" + sid + "/recommend", R"({"k":3})");
      for (const auto& r : rec.body["ranked"]) {
        const json body = {{"recipe_id", r["recipe"]["id"]}, {"query", "Why was this recipe recommended?"}};
        core.Handle("POST", "/v1/sessions/" + sid + "/explain", body.dump());
        core.Handle("POST", "/v1/sessions/" + sid + "/explain",
                    json{{"recipe_id", r["recipe"]["id"]}, {"query", "What are the health benefits?"},
                         {"mode", "llm"}}
                        .dump());
      }
    }
    before = ToJson(core.Snapshot());
    events = core.Snapshot().last_seq;
  }
  ServiceCore restarted(config, deps, std::make_unique<EventLog>(dir));
  restarted.Recover();
  const bool equal = ToJson(restarted.Snapshot()) == before;

  {
    std::ofstream out(dir / "events.jsonl", std::ios::app | std::ios::binary);
    out << R"({"seq":)" << events + 1 << R"(,"timestamp":0,"kind":"profile_up)";
  }
  ServiceCore truncated(config, deps, std::make_unique<EventLog>(dir));
  const auto warning = truncated.Recover();
  const bool tail_ok = warning.has_value() && ToJson(truncated.Snapshot()) == before;
  const auto resumed = truncated.Handle("POST", "/v1/profiles",
                                        json{{"id", "late"}, {"diet", "vegan"}, {"health_goals", json::array()},
                                             {"allergens", json::array()}, {"calorie_target", 400}}
                                            .dump());
  ServiceCore after(config, deps, std::make_unique<EventLog>(dir));
  const auto clean = after.Recover();
  const bool append_ok = resumed.status == 201 && !clean && after.Snapshot().profiles.count("late") == 1;
  return {events >= 100 && equal && tail_ok && append_ok,
          fmt::format("{} events replayed {}; truncated tail {}; append after recovery {}", events,
                      equal ? "to an equal state" : "to a different state",
                      tail_ok ? "dropped with a warning" : "not handled", append_ok ? "clean" : "broken")};
}

}  // namespace
}  // namespace pilar

int main() {
  using Check = std::pair<const char*, std::function<pilar::Verdict()>>;
  const std::vector<Check> checks = {
      {"shapley-axioms", pilar::ShapleyAxioms},
      {"shapley-oracle", pilar::ShapleyOracle},
      {"counterfactual-validity", pilar::CounterfactualValidity},
      {"counterfactual-minimality", pilar::CounterfactualMinimality},
      {"allergen-safety", pilar::AllergenSafety},
      {"router-fidelity", pilar::RouterFidelity},
      {"prompt-goldens", pilar::PromptGoldens},
      {"offline-determinism", pilar::OfflineDeterminism},
      {"latency", pilar::Latency},
      {"persistence", pilar::Persistence},
  };
  int failed = 0;
  for (const auto& [name, run] : checks) {
    pilar::Verdict v;
    try {
      v = run();
    } catch (const std::exception& e) {
      v = {false, std::string("threw: ") + e.what()};
    }
    failed += v.pass ? 0 : 1;
    std::printf("%s %s: %s\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
