#pragma once

#include <stdexcept>
#include <string>

namespace edgenet {

enum class ErrorCode {
  ShapeMismatch,
  MissingWeight,
  EmptyInput,
  NonFiniteInput,
  InvalidGraph,
  UnsupportedLayerKind,
  IoError,
  FormatVersionMismatch,
  ChecksumMismatch,
  GraphRewriteConflict,
  NonFiniteRange,
  EmptyCalibrationSet,
  PlanCoverageError,
  UnknownAttachPoint,
  AttachAtTerminal,
  EmptyTrainingSet,
  LabelOutOfRange,
  UntrainedHead,
  EmptyEvalSet,
  InvalidDistribution,
  EmptyRecords,
  LengthMismatch,
  ZeroSize,
  BadMagic,
  CountMismatch,
  TruncatedFile,
  ParseError,
};

const char* error_code_name(ErrorCode c);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& msg)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + msg),
        code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& msg) {
  throw Error(code, msg);
}

}  // namespace edgenet
