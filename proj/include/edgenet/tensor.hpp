#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/error.hpp"

namespace edgenet {

enum class DType { F32, U8 };

const char* dtype_name(DType d);
DType dtype_from_name(const std::string& s);

// Per-tensor asymmetric uint8 affine parameters: real = scale * (q - zero_point).
struct QuantParams {
  float scale = 1.0f;
  int zero_point = 0;

  bool operator==(const QuantParams&) const = default;
};

// Dense row-major tensor. Shapes use NCHW for images; 2-D (N, features) after
// Flatten; 1-D for per-channel parameters.
struct Tensor {
  std::vector<int64_t> shape;
  DType dtype = DType::F32;
  std::vector<float> f32;
  std::vector<uint8_t> u8;
  QuantParams quant;  // meaningful only when dtype == U8

  Tensor() = default;

  static Tensor zeros_f32(std::vector<int64_t> shape);
  static Tensor from_f32(std::vector<int64_t> shape, std::vector<float> data);
  static Tensor from_u8(std::vector<int64_t> shape, std::vector<uint8_t> data,
                        QuantParams qp);

  int64_t numel() const;
  size_t byte_size() const;
  bool same_shape(const Tensor& other) const { return shape == other.shape; }

  float* data_f32() { return f32.data(); }
  const float* data_f32() const { return f32.data(); }
  uint8_t* data_u8() { return u8.data(); }
  const uint8_t* data_u8() const { return u8.data(); }
};

int64_t shape_numel(const std::vector<int64_t>& shape);
std::string shape_to_string(const std::vector<int64_t>& shape);

// Throws ShapeMismatch if the buffer size does not match the shape product,
// EmptyInput on zero elements, or on non-positive dimensions.
void check_tensor(const Tensor& t, const std::string& what);

}  // namespace edgenet
