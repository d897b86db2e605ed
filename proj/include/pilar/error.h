#ifndef PILAR_ERROR_H_
#define PILAR_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

#include "json.hpp"

namespace pilar {

enum class ErrorCode {
  kEmptyInput,
  kInvalidArgument,
  kFixtureNotFound,
  kRemoteDetectorUnavailable,
  kEmptyCorpus,
  kUnknownRecipe,
  kTooManyFeatures,
  kUnknownFeature,
  kNoCounterfactualWithinBudget,
  kMaterialsMissing,
  kUnknownRecipeInSession,
  kMissingSlot,
  kEndpointTimeout,
  kEndpointError,
  kEmptyQuery,
  kCorruptLogLine,
  kInvalidConfigValue,
  kDataFile,
  kNotFound,
  kPipelineOrder,
};

std::string_view ErrorCodeName(ErrorCode code);

// Single exception type for domain failures. `details` carries the
// machine-readable payload (slot name, retry hint, budget, ...).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        nlohmann::json details = nlohmann::json::object())
      : std::runtime_error(message), code_(code), details_(std::move(details)) {}

  ErrorCode code() const { return code_; }
  const nlohmann::json& details() const { return details_; }

  nlohmann::json ToJson() const;

 private:
  ErrorCode code_;
  nlohmann::json details_;
};

}  // namespace pilar

#endif  // PILAR_ERROR_H_
