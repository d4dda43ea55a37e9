#ifndef REVERSE_ERROR_H_
#define REVERSE_ERROR_H_

#include <stdexcept>
#include <string>

namespace reverse {

enum class ErrorCode {
  // token protocol
  kUnbalancedMarkers,
  kNestedSpan,
  kTrailingContentAfterUN,
  // curation
  kNoTaggableSpan,
  kExternalHookUnavailable,
  kInvalidSample,
  // model
  kTemperatureNonPositive,
  kDivergenceDetected,
  // decode / backends
  kBackendFailure,
  kMaxLengthExceeded,
  kNoRuleAndNoFallback,
  kTimeout,
  kMalformedResponse,
  kMissingSpecialTokenProbs,
  // metrics
  kEmptyMention,
  kEmptyAnnotation,
  kAllEmptyMentions,
  kEmptyInput,
  kLengthMismatch,
  // generic
  kInvalidArgument,
  kIoError,
};

const char* error_code_name(ErrorCode code);

/// All library failures are reported through this exception type; the code
/// tells callers which contract was violated.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace reverse

#endif  // REVERSE_ERROR_H_
