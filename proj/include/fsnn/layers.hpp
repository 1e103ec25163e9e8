#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsnn/tensor.hpp"

namespace fsnn {

enum class LayerKind : uint32_t {
  Conv2d = 0,
  Linear = 1,
  BatchNorm2dFolded = 2,
  ReLU = 3,
  ReLU6 = 4,
  ClippedReLU = 5,
  RangeRestrict = 6,
  MaxPool2d = 7,
  AvgPool2d = 8,
  Flatten = 9,
  ResidualAdd = 10,
};

const char* layer_kind_name(LayerKind k);

// One layer of the graph. Which fields are live depends on kind:
//   Conv2d            weight (OC,IC,KH,KW), bias (OC), stride, pad
//   Linear            weight (I,O) input-major, bias (O)
//   BatchNorm2dFolded weight = per-channel scale (C), bias = shift (C)
//   ClippedReLU       tau > 0
//   RangeRestrict     lo <= hi
//   MaxPool2d/AvgPool2d  k (window), s (stride); valid windows only
//   ResidualAdd       src = index of the earlier layer whose output is added
//                     (-1 = model input)
struct Layer {
  LayerKind kind;
  std::string name;
  Tensor weight;
  Tensor bias;
  float tau = 0.0f;
  float lo = 0.0f;
  float hi = 0.0f;
  uint32_t k = 0;
  uint32_t s = 0;
  uint32_t stride = 1;
  uint32_t pad = 0;
  int32_t src = -2;  // -2 = unset

  bool has_params() const { return kind == LayerKind::Conv2d || kind == LayerKind::Linear; }
  bool is_activation() const {
    return kind == LayerKind::ReLU || kind == LayerKind::ReLU6 || kind == LayerKind::ClippedReLU;
  }
};

// Output shape of `layer` applied to `in`. Throws Err::ShapeMismatch on any
// incompatibility; model construction calls this for the whole chain so a
// bad graph never reaches forward().
std::vector<uint32_t> layer_out_shape(const Layer& layer, const std::vector<uint32_t>& in,
                                      const std::vector<std::vector<uint32_t>>& earlier,
                                      const std::vector<uint32_t>& model_in);

Layer make_conv2d(std::string name, uint32_t in_c, uint32_t out_c, uint32_t k, uint32_t stride,
                  uint32_t pad);
Layer make_linear(std::string name, uint32_t in_n, uint32_t out_n);
Layer make_bn_folded(std::string name, uint32_t c);
Layer make_act(std::string name, LayerKind kind);           // ReLU / ReLU6
Layer make_clipped_relu(std::string name, float tau);
Layer make_range_restrict(std::string name, float lo, float hi);
Layer make_pool(std::string name, LayerKind kind, uint32_t k, uint32_t s);
Layer make_flatten(std::string name);
Layer make_residual_add(std::string name, int32_t src);

}  // namespace fsnn
