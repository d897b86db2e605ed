#include <gtest/gtest.h>

#include <chrono>

#include "pilar/attribution.h"
#include "pilar/error.h"
#include "support.h"

namespace pilar {
namespace {

using testing::Gen;

std::vector<std::string> Names(std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n; ++i) out.push_back("f" + std::to_string(i));
  return out;
}

// Random non-linear function: weighted sum plus a few pairwise products.
InstanceScoreFn RandomFunction(Gen& g, std::size_t n) {
  std::vector<double> w(n);
  for (auto& v : w) v = g.Real(-1, 1);
  std::vector<std::tuple<std::size_t, std::size_t, double>> pairs;
  for (int i = g.Int(0, 3); i > 0 && n > 1; --i) {
    pairs.emplace_back(g.Index(n), g.Index(n), g.Real(-1, 1));
  }
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

TEST(Shapley, MatchesPermutationOracle) {
  Gen g(31);
  for (int iter = 0; iter < 50; ++iter) {
    const std::size_t n = static_cast<std::size_t>(g.Int(1, 6));
    const auto f = RandomFunction(g, n);
    const auto x = RandomVector(g, n);
    const auto base = RandomVector(g, n);
    const auto names = Names(n);
    const auto phi = ShapleyValues(f, x, base, names);
    const auto oracle = testing::PermutationShapley(f, x, base);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(phi[i].phi, oracle[i], 1e-9);
  }
}

TEST(Shapley, Efficiency) {
  Gen g(32);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = static_cast<std::size_t>(g.Int(1, 12));
    const auto f = RandomFunction(g, n);
    const auto x = RandomVector(g, n);
    const std::vector<double> base(n, 0.0);
    double sum = 0;
    for (const auto& a : ShapleyValues(f, x, base, Names(n))) sum += a.phi;
    ASSERT_NEAR(sum, f(x) - f(base), 1e-9);
  }
}

TEST(Shapley, SymmetryAndDummy) {
  Gen g(33);
  for (int iter = 0; iter < 100; ++iter) {
    const std::size_t n = static_cast<std::size_t>(g.Int(3, 10));
    std::vector<double> w(n);
    for (auto& v : w) v = g.Real(-1, 1);
    // Features 0 and 1 are interchangeable; feature n-1 is ignored.
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
    const std::vector<double> base(n, 0.0);
    const auto phi = ShapleyValues(f, x, base, Names(n));
    ASSERT_NEAR(phi[0].phi, phi[1].phi, 1e-9);
    ASSERT_NEAR(phi[n - 1].phi, 0.0, 1e-9);
  }
}

TEST(Shapley, LinearRecipeScorerGivesWeightTimesValue) {
  FeatureVector f;
  f.values = {0.8, 1.0, 1.0, 0.96};
  const auto w = ScoringWeights::Default();
  const auto attrs = AttributeRecipeScore(f, w);
  ASSERT_EQ(attrs.size(), kNumFeatures);
  for (std::size_t i = 0; i < kNumFeatures; ++i) {
    EXPECT_EQ(attrs[i].feature, FeatureName(i));
    EXPECT_NEAR(attrs[i].phi, w.values[i] * f[i], 1e-12);
    EXPECT_EQ(attrs[i].actual_value, f[i]);
    EXPECT_EQ(attrs[i].baseline_value, 0.0);
  }
}

TEST(Shapley, TooManyFeatures) {
  const std::size_t n = 17;
  std::vector<double> x(n, 1.0), base(n, 0.0);
  try {
    ShapleyValues([](std::span<const double>) { return 0.0; }, x, base, Names(n));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kTooManyFeatures);
  }
}

TEST(PartialDependence, SweepsOneFeature) {
  FeatureVector f;
  f.values = {0.5, 1.0, 0.0, 0.5};
  const std::vector<double> grid = {0, 0.25, 0.5, 0.75, 1};
  const auto w = ScoringWeights::Default();
  const auto pdp = RecipePartialDependence(f, w, "ingredient_coverage", grid);
  ASSERT_EQ(pdp.size(), grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    FeatureVector g = f;
    g[kIngredientCoverage] = grid[i];
    EXPECT_NEAR(pdp[i].score, Score(g, w), 1e-12);
    EXPECT_EQ(pdp[i].value, grid[i]);
  }
}

TEST(PartialDependence, Errors) {
  FeatureVector f;
  const auto w = ScoringWeights::Default();
  const std::vector<double> grid = {0, 1};
  try {
    RecipePartialDependence(f, w, "sparkle", grid);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnknownFeature);
  }
  EXPECT_THROW(RecipePartialDependence(f, w, "calorie_fit", {}), Error);
}

}  // namespace
}  // namespace pilar
