#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace agentrag {

enum class Errc {
  MalformedTrajectory,
  TokenAlignmentMismatch,
  InvalidTokenProbability,
  MissingLogprobs,
  GroupTooSmall,
  InvalidGroup,
  InvalidConfig,
  JudgeUnavailable,
  NotARetrievalStep,
  NotANonSearchStep,
  ClientError,
  EmptyQuestion,
  ProtocolInjection,
  PolicyClientError,
  SearchClientError,
  MalformedGeneration,
  SchemaError,
  EmptyInput,
  MissingReference,
};

constexpr std::string_view errc_name(Errc code) {
  switch (code) {
    case Errc::MalformedTrajectory: return "MalformedTrajectory";
    case Errc::TokenAlignmentMismatch: return "TokenAlignmentMismatch";
    case Errc::InvalidTokenProbability: return "InvalidTokenProbability";
    case Errc::MissingLogprobs: return "MissingLogprobs";
    case Errc::GroupTooSmall: return "GroupTooSmall";
    case Errc::InvalidGroup: return "InvalidGroup";
    case Errc::InvalidConfig: return "InvalidConfig";
    case Errc::JudgeUnavailable: return "JudgeUnavailable";
    case Errc::NotARetrievalStep: return "NotARetrievalStep";
    case Errc::NotANonSearchStep: return "NotANonSearchStep";
    case Errc::ClientError: return "ClientError";
    case Errc::EmptyQuestion: return "EmptyQuestion";
    case Errc::ProtocolInjection: return "ProtocolInjection";
    case Errc::PolicyClientError: return "PolicyClientError";
    case Errc::SearchClientError: return "SearchClientError";
    case Errc::MalformedGeneration: return "MalformedGeneration";
    case Errc::SchemaError: return "SchemaError";
    case Errc::EmptyInput: return "EmptyInput";
    case Errc::MissingReference: return "MissingReference";
  }
  return "Unknown";
}

/// Every failure raised by the library. The code is stable and is what the
/// CLI and the reward service map to exit codes and HTTP statuses.
class Error : public std::runtime_error {
 public:
  Error(Errc code, const std::string& what)
      : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code), message_(what) {}

  Errc code() const noexcept { return code_; }
  /// The text without the code prefix.
  const std::string& message() const noexcept { return message_; }

 private:
  Errc code_;
  std::string message_;
};

// Client failures are the only retryable class.
inline bool is_client_failure(Errc code) {
  return code == Errc::ClientError || code == Errc::PolicyClientError ||
         code == Errc::SearchClientError;
}

}  // namespace agentrag
