#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "edgenet/tensor.hpp"

namespace edgenet {

struct Dataset {
  std::vector<Tensor> inputs;  // one (1, C, H, W) tensor per sample
  std::vector<int> labels;
  int num_classes = 0;
  std::string provenance;  // idx:<path>, csv:<path>, or the synthetic spec

  size_t size() const { return inputs.size(); }
};

// IDX pair: big-endian dims, image magic 0x00000803, label magic 0x00000801.
// Pixels are normalized to [0, 1] as (1, 1, H, W) f32 tensors.
// Errors: IoError, BadMagic, CountMismatch, TruncatedFile.
Dataset load_idx(const std::string& images_path, const std::string& labels_path);
void save_idx(const Dataset& ds, const std::string& images_path,
              const std::string& labels_path);

// CSV: one sample per row, label first, then product(shape) floats.
// Errors: IoError, ParseError, LengthMismatch.
Dataset load_csv(const std::string& path, const std::vector<int64_t>& shape);
void save_csv(const Dataset& ds, const std::string& path);

struct SyntheticSpec {
  int num_classes = 4;
  int samples = 256;
  std::vector<int64_t> shape = {4, 8, 8};  // per-sample (C, H, W)
  uint64_t seed = 1;
  double noise_sigma = 0.05;
  // Fraction of samples drawn with hard_sigma noise instead of noise_sigma.
  double hard_fraction = 0.0;
  double hard_sigma = 0.35;
};

// Gaussian class blobs around deterministic per-class means. Class c raises
// its channel (c mod C) and a horizontal band by a fixed amplitude, so class
// means are separated far beyond 4 sigma at the default noise. Same spec,
// same bytes. Labels round-robin.
Dataset gen_synthetic(const SyntheticSpec& spec);

}  // namespace edgenet
