#include "vgs/error.hpp"

namespace vgs {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::TransportExhausted: return "TransportExhausted";
    case ErrorCode::BackendRejected: return "BackendRejected";
    case ErrorCode::MissingBinding: return "MissingBinding";
    case ErrorCode::UnknownTemplate: return "UnknownTemplate";
    case ErrorCode::TranscriptExhausted: return "TranscriptExhausted";
    case ErrorCode::TranscriptMismatch: return "TranscriptMismatch";
    case ErrorCode::NavigationFailed: return "NavigationFailed";
    case ErrorCode::RenderTimeout: return "RenderTimeout";
    case ErrorCode::CaptureFailed: return "CaptureFailed";
    case ErrorCode::SessionClosed: return "SessionClosed";
    case ErrorCode::XPathSyntax: return "XPathSyntax";
    case ErrorCode::OutOfBounds: return "OutOfBounds";
    case ErrorCode::NoElement: return "NoElement";
    case ErrorCode::InjectionFailed: return "InjectionFailed";
    case ErrorCode::PreconditionViolation: return "PreconditionViolation";
    case ErrorCode::UnparseableInput: return "UnparseableInput";
    case ErrorCode::AnchorNotFound: return "AnchorNotFound";
    case ErrorCode::NegativeDistance: return "NegativeDistance";
    case ErrorCode::DetachedNode: return "DetachedNode";
    case ErrorCode::EmptyDecomposition: return "EmptyDecomposition";
    case ErrorCode::ModelParseFailure: return "ModelParseFailure";
    case ErrorCode::UnknownRegionId: return "UnknownRegionId";
    case ErrorCode::EmptyScan: return "EmptyScan";
    case ErrorCode::NoCandidates: return "NoCandidates";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::SynthesisFailed: return "SynthesisFailed";
    case ErrorCode::AllAttributesFailed: return "AllAttributesFailed";
    case ErrorCode::KeyMismatch: return "KeyMismatch";
    case ErrorCode::BudgetExhausted: return "BudgetExhausted";
    case ErrorCode::PruneDeadEnd: return "PruneDeadEnd";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::JudgeUnavailable: return "JudgeUnavailable";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

}  // namespace vgs
