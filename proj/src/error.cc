#include "pilar/error.h"

namespace pilar {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kFixtureNotFound: return "FixtureNotFound";
    case ErrorCode::kRemoteDetectorUnavailable: return "RemoteDetectorUnavailable";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kUnknownRecipe: return "UnknownRecipe";
    case ErrorCode::kTooManyFeatures: return "TooManyFeatures";
    case ErrorCode::kUnknownFeature: return "UnknownFeature";
    case ErrorCode::kNoCounterfactualWithinBudget: return "NoCounterfactualWithinBudget";
    case ErrorCode::kMaterialsMissing: return "MaterialsMissing";
    case ErrorCode::kUnknownRecipeInSession: return "UnknownRecipeInSession";
    case ErrorCode::kMissingSlot: return "MissingSlot";
    case ErrorCode::kEndpointTimeout: return "EndpointTimeout";
    case ErrorCode::kEndpointError: return "EndpointError";
    case ErrorCode::kEmptyQuery: return "EmptyQuery";
    case ErrorCode::kCorruptLogLine: return "CorruptLogLine";
    case ErrorCode::kInvalidConfigValue: return "InvalidConfigValue";
    case ErrorCode::kDataFile: return "DataFile";
    case ErrorCode::kNotFound: return "NotFound";
    case ErrorCode::kPipelineOrder: return "PipelineOrder";
  }
  return "Unknown";
}

nlohmann::json Error::ToJson() const {
  return {{"error", std::string(ErrorCodeName(code_))},
          {"message", what()},
          {"details", details_}};
}

}  // namespace pilar
