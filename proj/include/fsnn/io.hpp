#pragma once

#include <string>

#include "fsnn/model.hpp"
#include "fsnn/tensor.hpp"

namespace fsnn {

// Model file, little-endian:
//   magic "FSNN" | u32 version | model name (u32 len + bytes)
//   u32 input rank + dims | u32 class count | u32 hardening tag
//   notes (u32 len + bytes) | u32 layer count
//   per layer: u32 kind | name (u32 len + bytes)
//              f32 tau, lo, hi | u32 k, s, stride, pad | i32 src
//              u32 param count | per param: u32 rank, u32 dims[], f32 payload
// The FP32 payload is written raw, so save/load round-trips bit-exactly.
// Distinct errors: BadMagic, BadVersion, Truncated.
void save_model(const Model& m, const std::string& path);
Model load_model(const std::string& path);

// IDX exactly as published: big-endian header, magic 0x00000803 (images,
// u8 pixels) / 0x00000801 (labels). Pixels scaled to [0,1] by /255; image
// and label counts are cross-checked.
Dataset load_mnist_idx(const std::string& images_path, const std::string& labels_path);

// IDX writer (u8 payload); used by the synthetic dataset tool and tests.
void write_idx_images(const std::string& path, const Tensor& images);
void write_idx_labels(const std::string& path, const std::vector<uint32_t>& labels);

// CSV fallback: one sample per row, "label,p0,p1,...". Pixels in [0,255]
// or [0,1]; values > 1 are scaled by /255. Image side inferred (square).
Dataset load_csv_dataset(const std::string& path);

}  // namespace fsnn
