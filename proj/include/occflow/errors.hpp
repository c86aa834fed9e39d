#ifndef OCCFLOW_ERRORS_HPP
#define OCCFLOW_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace occflow {

// Stable error codes. The CLI prints these verbatim as
// "error: <code>: <detail>" and exits 2, so the names must not change.
enum class ErrorCode {
  BadMagic,
  TruncatedFile,
  LabelOutOfRange,
  DimsOverflow,
  IoFailure,
  FrameDimMismatch,
  EmptySequence,
  SizeMismatch,
  IndexOutOfRange,
  DimMismatch,
  TooFewCorrespondences,
  DegenerateConfiguration,
  TooFewInliers,
  ProjectiveDivideByZero,
  HistoryTooShort,
  InvalidScenario,
  InvalidFeatureGrid,
  EmptyClassSet,
  LengthMismatch,
  ConfigInvalid,
};

const char* error_code_name(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& detail)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + detail),
        code_(code) {}

  ErrorCode code() const { return code_; }
  const char* code_name() const { return error_code_name(code_); }

 private:
  ErrorCode code_;
};

}  // namespace occflow

#endif  // OCCFLOW_ERRORS_HPP
