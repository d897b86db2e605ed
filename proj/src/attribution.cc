#include "pilar/attribution.h"

#include <bit>
#include <cstdint>

#include <fmt/format.h>

#include "pilar/error.h"

namespace pilar {

std::vector<Attribution> ShapleyValues(const InstanceScoreFn& f, std::span<const double> x,
                                       std::span<const double> baseline,
                                       std::span<const std::string> names) {
  const std::size_t n = x.size();
  if (baseline.size() != n || names.size() != n) {
    throw Error(ErrorCode::kInvalidArgument, "instance, baseline and names differ in length");
  }
  if (n > kMaxExactShapleyFeatures) {
    throw Error(ErrorCode::kTooManyFeatures,
                fmt::format("exact Shapley supports at most {} features, got {}",
                            kMaxExactShapleyFeatures, n),
                {{"n", n}});
  }
  if (n == 0) return {};

  const std::uint32_t full = (1u << n);
  std::vector<double> value(full);
  std::vector<double> point(n);
  for (std::uint32_t mask = 0; mask < full; ++mask) {
    for (std::size_t i = 0; i < n; ++i) point[i] = (mask >> i) & 1u ? x[i] : baseline[i];
    value[mask] = f(point);
  }

  // weight[s] = s!(n-s-1)!/n! = 1 / (n * C(n-1, s))
  std::vector<double> weight(n);
  double binom = 1.0;
  for (std::size_t s = 0; s < n; ++s) {
    weight[s] = 1.0 / (static_cast<double>(n) * binom);
    binom = binom * static_cast<double>(n - 1 - s) / static_cast<double>(s + 1);
  }

  std::vector<Attribution> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint32_t bit = 1u << i;
    double phi = 0.0;
    for (std::uint32_t mask = 0; mask < full; ++mask) {
      if (mask & bit) continue;
      phi += weight[std::popcount(mask)] * (value[mask | bit] - value[mask]);
    }
    out[i] = {names[i], phi, baseline[i], x[i]};
  }
  return out;
}

std::vector<PdpPoint> PartialDependence(const InstanceScoreFn& f, std::span<const double> x,
                                        std::span<const std::string> names,
                                        std::string_view feature, std::span<const double> grid) {
  if (names.size() != x.size()) {
    throw Error(ErrorCode::kInvalidArgument, "instance and names differ in length");
  }
  std::size_t index = names.size();
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == feature) index = i;
  }
  if (index == names.size()) {
    throw Error(ErrorCode::kUnknownFeature, fmt::format("unknown feature {}", feature),
                {{"feature", feature}});
  }
  if (grid.empty()) throw Error(ErrorCode::kInvalidArgument, "grid must be non-empty");
  std::vector<double> point(x.begin(), x.end());
  std::vector<PdpPoint> out;
  out.reserve(grid.size());
  for (double v : grid) {
    point[index] = v;
    out.push_back({v, f(point)});
  }
  return out;
}

InstanceScoreFn LinearRecipeScorer(const ScoringWeights& weights) {
  return [weights](std::span<const double> v) {
    FeatureVector f;
    for (std::size_t i = 0; i < kNumFeatures; ++i) f[i] = v[i];
    return Score(f, weights);
  };
}

std::vector<Attribution> AttributeRecipeScore(const FeatureVector& features,
                                              const ScoringWeights& weights) {
  const std::array<double, kNumFeatures> zero{};
  return ShapleyValues(LinearRecipeScorer(weights), features.values, zero, FeatureNames());
}

std::vector<PdpPoint> RecipePartialDependence(const FeatureVector& features,
                                              const ScoringWeights& weights,
                                              std::string_view feature,
                                              std::span<const double> grid) {
  for (double v : grid) {
    if (!(v >= 0.0 && v <= 1.0)) {
      throw Error(ErrorCode::kInvalidArgument,
                  fmt::format("grid value {} outside the feature domain [0,1]", v));
    }
  }
  return PartialDependence(LinearRecipeScorer(weights), features.values, FeatureNames(), feature,
                           grid);
}

nlohmann::json ToJson(const Attribution& a) {
  return {{"feature", a.feature},
          {"phi", a.phi},
          {"baseline_value", a.baseline_value},
          {"actual_value", a.actual_value}};
}

nlohmann::json ToJson(const PdpPoint& p) { return {{"value", p.value}, {"score", p.score}}; }

}  // namespace pilar
