#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace vgs {

// Every failure the toolkit reports carries one of these codes. Names match
// the error vocabulary used in traces and CLI diagnostics.
enum class ErrorCode {
  // model gateway
  TransportExhausted,
  BackendRejected,
  MissingBinding,
  UnknownTemplate,
  TranscriptExhausted,
  TranscriptMismatch,
  // browser session
  NavigationFailed,
  RenderTimeout,
  CaptureFailed,
  SessionClosed,
  XPathSyntax,
  OutOfBounds,
  NoElement,
  // overlay marker
  InjectionFailed,
  PreconditionViolation,
  // html tools
  UnparseableInput,
  AnchorNotFound,
  NegativeDistance,
  DetachedNode,
  // pipeline
  EmptyDecomposition,
  ModelParseFailure,
  UnknownRegionId,
  EmptyScan,
  NoCandidates,
  EmptySelection,
  SynthesisFailed,
  AllAttributesFailed,
  // baselines
  KeyMismatch,
  BudgetExhausted,
  PruneDeadEnd,
  // evaluation
  SchemaViolation,
  IoFailure,
  JudgeUnavailable,
  EmptyInput,
  // cli
  Usage,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace vgs
