#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace websight {

enum class ErrorCode {
  kMalformedOutput,
  kUnknownAction,
  kBadArguments,
  kTooManyHotkeys,
  kBadDirection,
  kNonPositiveExtent,
  kSpaceMismatch,
  kOutOfOrderEntry,
  kInvalidArgument,
  kInvalidRequest,
  kTransportError,
  kBackendRefused,
  kEmptyResponse,
  kScriptExhausted,
  kNoStepsFound,
  kMalformedReasonerOutput,
  kLaunchFailure,
  kBadPageGraph,
  kSessionClosed,
  kPointOutOfViewport,
  kIncompleteRecord,
  kJudgeUnavailable,
  kMissingField,
  kNoApplicableTemplate,
  kIoFailure,
  kConfigError,
  kMalformedTrajectory,
};

std::string_view to_string(ErrorCode code);

// Every failure the library reports carries one of the codes above so callers
// can branch on the kind without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedOutput: return "MalformedOutput";
    case ErrorCode::kUnknownAction: return "UnknownAction";
    case ErrorCode::kBadArguments: return "BadArguments";
    case ErrorCode::kTooManyHotkeys: return "TooManyHotkeys";
    case ErrorCode::kBadDirection: return "BadDirection";
    case ErrorCode::kNonPositiveExtent: return "NonPositiveExtent";
    case ErrorCode::kSpaceMismatch: return "SpaceMismatch";
    case ErrorCode::kOutOfOrderEntry: return "OutOfOrderEntry";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidRequest: return "InvalidRequest";
    case ErrorCode::kTransportError: return "TransportError";
    case ErrorCode::kBackendRefused: return "BackendRefused";
    case ErrorCode::kEmptyResponse: return "EmptyResponse";
    case ErrorCode::kScriptExhausted: return "ScriptExhausted";
    case ErrorCode::kNoStepsFound: return "NoStepsFound";
    case ErrorCode::kMalformedReasonerOutput: return "MalformedReasonerOutput";
    case ErrorCode::kLaunchFailure: return "LaunchFailure";
    case ErrorCode::kBadPageGraph: return "BadPageGraph";
    case ErrorCode::kSessionClosed: return "SessionClosed";
    case ErrorCode::kPointOutOfViewport: return "PointOutOfViewport";
    case ErrorCode::kIncompleteRecord: return "IncompleteRecord";
    case ErrorCode::kJudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::kMissingField: return "MissingField";
    case ErrorCode::kNoApplicableTemplate: return "NoApplicableTemplate";
    case ErrorCode::kIoFailure: return "IoFailure";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kMalformedTrajectory: return "MalformedTrajectory";
  }
  return "Unknown";
}

}  // namespace websight
