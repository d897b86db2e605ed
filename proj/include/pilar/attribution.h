#ifndef PILAR_ATTRIBUTION_H_
#define PILAR_ATTRIBUTION_H_

#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pilar/recommender.h"

namespace pilar {

// Black-box model over a dense feature instance.
using InstanceScoreFn = std::function<double(std::span<const double>)>;

struct Attribution {
  std::string feature;
  double phi = 0;
  double baseline_value = 0;
  double actual_value = 0;
};

inline constexpr std::size_t kMaxExactShapleyFeatures = 16;

// Exact Shapley values of `f` at `x` relative to `baseline`. Coalition S is
// scored on the instance taking x_i for i in S and baseline_i otherwise; all
// 2^n coalitions are evaluated once and combined with |S|!(n-|S|-1)!/n!.
// Throws Error(kTooManyFeatures) when n > 16.
std::vector<Attribution> ShapleyValues(const InstanceScoreFn& f, std::span<const double> x,
                                       std::span<const double> baseline,
                                       std::span<const std::string> names);

struct PdpPoint {
  double value = 0;
  double score = 0;
};

// Score with `feature` swept over `grid`, every other feature held at x.
// Throws Error(kUnknownFeature) or Error(kInvalidArgument) on an empty grid.
std::vector<PdpPoint> PartialDependence(const InstanceScoreFn& f, std::span<const double> x,
                                        std::span<const std::string> names,
                                        std::string_view feature, std::span<const double> grid);

// The linear recipe scorer as a black box.
InstanceScoreFn LinearRecipeScorer(const ScoringWeights& weights);

// Shapley attribution of a recipe score against the all-zero baseline.
std::vector<Attribution> AttributeRecipeScore(const FeatureVector& features,
                                              const ScoringWeights& weights);

// Recipe partial dependence; grid values must lie in [0,1].
std::vector<PdpPoint> RecipePartialDependence(const FeatureVector& features,
                                              const ScoringWeights& weights,
                                              std::string_view feature,
                                              std::span<const double> grid);

nlohmann::json ToJson(const Attribution& a);
nlohmann::json ToJson(const PdpPoint& p);

}  // namespace pilar

#endif  // PILAR_ATTRIBUTION_H_
