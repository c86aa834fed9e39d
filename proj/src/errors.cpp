#include "occflow/errors.hpp"

namespace occflow {

const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::DimsOverflow: return "DimsOverflow";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::FrameDimMismatch: return "FrameDimMismatch";
    case ErrorCode::EmptySequence: return "EmptySequence";
    case ErrorCode::SizeMismatch: return "SizeMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::DimMismatch: return "DimMismatch";
    case ErrorCode::TooFewCorrespondences: return "TooFewCorrespondences";
    case ErrorCode::DegenerateConfiguration: return "DegenerateConfiguration";
    case ErrorCode::TooFewInliers: return "TooFewInliers";
    case ErrorCode::ProjectiveDivideByZero: return "ProjectiveDivideByZero";
    case ErrorCode::HistoryTooShort: return "HistoryTooShort";
    case ErrorCode::InvalidScenario: return "InvalidScenario";
    case ErrorCode::InvalidFeatureGrid: return "InvalidFeatureGrid";
    case ErrorCode::EmptyClassSet: return "EmptyClassSet";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ConfigInvalid: return "ConfigInvalid";
  }
  return "UnknownError";
}

}  // namespace occflow
