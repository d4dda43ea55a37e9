#include "reverse/error.h"

namespace reverse {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUnbalancedMarkers: return "UnbalancedMarkers";
    case ErrorCode::kNestedSpan: return "NestedSpan";
    case ErrorCode::kTrailingContentAfterUN: return "TrailingContentAfterUN";
    case ErrorCode::kNoTaggableSpan: return "NoTaggableSpan";
    case ErrorCode::kExternalHookUnavailable: return "ExternalHookUnavailable";
    case ErrorCode::kInvalidSample: return "InvalidSample";
    case ErrorCode::kTemperatureNonPositive: return "TemperatureNonPositive";
    case ErrorCode::kDivergenceDetected: return "DivergenceDetected";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kMaxLengthExceeded: return "MaxLengthExceeded";
    case ErrorCode::kNoRuleAndNoFallback: return "NoRuleAndNoFallback";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kMissingSpecialTokenProbs: return "MissingSpecialTokenProbs";
    case ErrorCode::kEmptyMention: return "EmptyMention";
    case ErrorCode::kEmptyAnnotation: return "EmptyAnnotation";
    case ErrorCode::kAllEmptyMentions: return "AllEmptyMentions";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
  }
  return "UnknownError";
}

}  // namespace reverse
