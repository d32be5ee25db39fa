#include "edgenet/tensor.hpp"

#include <cmath>
#include <sstream>

namespace edgenet {

const char* error_code_name(ErrorCode c) {
  switch (c) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::MissingWeight: return "MissingWeight";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::NonFiniteInput: return "NonFiniteInput";
    case ErrorCode::InvalidGraph: return "InvalidGraph";
    case ErrorCode::UnsupportedLayerKind: return "UnsupportedLayerKind";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorCode::GraphRewriteConflict: return "GraphRewriteConflict";
    case ErrorCode::NonFiniteRange: return "NonFiniteRange";
    case ErrorCode::EmptyCalibrationSet: return "EmptyCalibrationSet";
    case ErrorCode::PlanCoverageError: return "PlanCoverageError";
    case ErrorCode::UnknownAttachPoint: return "UnknownAttachPoint";
    case ErrorCode::AttachAtTerminal: return "AttachAtTerminal";
    case ErrorCode::EmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::UntrainedHead: return "UntrainedHead";
    case ErrorCode::EmptyEvalSet: return "EmptyEvalSet";
    case ErrorCode::InvalidDistribution: return "InvalidDistribution";
    case ErrorCode::EmptyRecords: return "EmptyRecords";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::ZeroSize: return "ZeroSize";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::CountMismatch: return "CountMismatch";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Error";
}

const char* dtype_name(DType d) { return d == DType::F32 ? "f32" : "u8"; }

DType dtype_from_name(const std::string& s) {
  if (s == "f32") return DType::F32;
  if (s == "u8") return DType::U8;
  fail(ErrorCode::ParseError, "unknown dtype '" + s + "'");
}

int64_t shape_numel(const std::vector<int64_t>& shape) {
  if (shape.empty()) return 0;
  int64_t n = 1;
  for (int64_t d : shape) {
    if (d <= 0) return 0;
    n *= d;
  }
  return n;
}

std::string shape_to_string(const std::vector<int64_t>& shape) {
  std::ostringstream os;
  os << "(";
  for (size_t i = 0; i < shape.size(); ++i) {
    if (i) os << ",";
    os << shape[i];
  }
  os << ")";
  return os.str();
}

Tensor Tensor::zeros_f32(std::vector<int64_t> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DType::F32;
  const int64_t n = shape_numel(t.shape);
  t.f32.assign(static_cast<size_t>(n), 0.0f);
  check_tensor(t, "zeros_f32");
  return t;
}

Tensor Tensor::from_f32(std::vector<int64_t> shape, std::vector<float> data) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DType::F32;
  t.f32 = std::move(data);
  check_tensor(t, "from_f32");
  return t;
}

Tensor Tensor::from_u8(std::vector<int64_t> shape, std::vector<uint8_t> data,
                       QuantParams qp) {
  Tensor t;
  t.shape = std::move(shape);
  t.dtype = DType::U8;
  t.u8 = std::move(data);
  t.quant = qp;
  check_tensor(t, "from_u8");
  return t;
}

int64_t Tensor::numel() const { return shape_numel(shape); }

size_t Tensor::byte_size() const {
  return static_cast<size_t>(numel()) * (dtype == DType::F32 ? 4 : 1);
}

void check_tensor(const Tensor& t, const std::string& what) {
  if (t.shape.empty()) fail(ErrorCode::EmptyInput, what + ": empty shape");
  for (int64_t d : t.shape) {
    if (d <= 0)
      fail(ErrorCode::ShapeMismatch,
           what + ": non-positive dim in " + shape_to_string(t.shape));
  }
  const size_t n = static_cast<size_t>(shape_numel(t.shape));
  const size_t have = t.dtype == DType::F32 ? t.f32.size() : t.u8.size();
  if (have != n)
    fail(ErrorCode::ShapeMismatch,
         what + ": buffer holds " + std::to_string(have) + " elements, shape " +
             shape_to_string(t.shape) + " needs " + std::to_string(n));
}

}  // namespace edgenet
