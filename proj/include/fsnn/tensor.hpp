#pragma once

#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "fsnn/util.hpp"

namespace fsnn {

// Dense FP32 n-d array, row-major. The unit of all numeric state: inputs,
// feature maps, weights, logits. Value semantics throughout; injections
// always work on copies.
struct Tensor {
  std::vector<uint32_t> shape;
  std::vector<float> data;

  Tensor() = default;
  explicit Tensor(std::vector<uint32_t> s) : shape(std::move(s)), data(count(shape), 0.0f) {}
  Tensor(std::vector<uint32_t> s, std::vector<float> d) : shape(std::move(s)), data(std::move(d)) {
    check(data.size() == count(shape), Err::ShapeMismatch, "tensor data length != product of dims");
  }

  static size_t count(const std::vector<uint32_t>& s) {
    size_t n = 1;
    for (uint32_t d : s) n *= d;
    return n;
  }

  size_t numel() const { return data.size(); }
  uint32_t dim(size_t i) const { return shape.at(i); }
  size_t rank() const { return shape.size(); }

  float& operator[](size_t i) { return data[i]; }
  float operator[](size_t i) const { return data[i]; }

  // Reshape keeps the payload; only the shape contract changes.
  Tensor reshaped(std::vector<uint32_t> s) const {
    check(count(s) == data.size(), Err::ShapeMismatch, "reshape changes element count");
    Tensor t;
    t.shape = std::move(s);
    t.data = data;
    return t;
  }

  bool same_shape(const Tensor& o) const { return shape == o.shape; }

  bool bitwise_equal(const Tensor& o) const;

  uint64_t bits_hash() const;

  std::string shape_str() const;
};

// Images plus labels for one split. N invariants are checked at construction.
struct Dataset {
  Tensor images;  // N x C x H x W
  std::vector<uint32_t> labels;
  uint32_t class_count = 0;
  std::string split;  // train | test | calibration

  size_t size() const { return labels.size(); }

  void validate() const;

  // View of sample i as C x H x W (copies the slice; desk-scale sizes).
  Tensor sample(size_t i) const;

  Dataset subset(size_t offset, size_t n) const;
};

}  // namespace fsnn
