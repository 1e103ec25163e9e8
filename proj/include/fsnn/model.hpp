#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fsnn/layers.hpp"
#include "fsnn/tensor.hpp"

namespace fsnn {

enum class HardeningTag : uint32_t {
  Baseline = 0,
  Ranger = 1,
  AdaptiveClipper = 2,
  SwapReLU6 = 3,
};

const char* hardening_name(HardeningTag t);

struct ModelMeta {
  std::string name;
  std::vector<uint32_t> input_shape;  // C x H x W
  uint32_t class_count = 0;
  HardeningTag hardening = HardeningTag::Baseline;
  std::string notes;  // free-form provenance: hyperparameters, thresholds
};

// Ordered layer graph. Immutable after construction from the campaign
// runner's perspective; forward() on a shared model is safe to call
// concurrently. validate() enforces the shape chain once, up front.
struct Model {
  std::vector<Layer> layers;
  ModelMeta meta;

  void validate() const;
  // Per-layer output shapes (validated chain).
  std::vector<std::vector<uint32_t>> layer_shapes() const;
  size_t param_count() const;
  uint64_t weights_hash() const;
};

// Structure-only fingerprint (kinds, shapes, attrs; not weights). Used to
// match range profiles to architectures and to rebind forward workspaces.
uint64_t arch_hash(const Model& m);

// Reusable per-thread forward scratch: one tensor per layer output. Kept
// across calls so campaign loops do not allocate; rebinding to another
// model reshapes it.
struct Workspace {
  std::vector<Tensor> outs;
  uint64_t bound_arch = 0;
};

// Optional instrumentation for one forward pass.
struct ForwardHook {
  // After layer `corrupt_layer`'s output is produced, mutate it in place
  // (feature-map injection path).
  int corrupt_layer = -1;
  std::function<void(Tensor&)> corrupt;
  // Called with every layer's output after it is final (post-corruption).
  std::function<void(size_t layer, const Tensor&)> observe;
};

// Single-sample forward (C x H x W) producing logits. Deterministic and
// bit-identical across repeated calls on identical bits.
const Tensor& forward_sample(const Model& m, const Tensor& x, Workspace& ws,
                             const ForwardHook* hook = nullptr);

// Batch forward: returns {logits (N x classes), confidences (N x classes)}.
// confidences = softmax(logits) per row.
struct ForwardResult {
  Tensor logits;
  Tensor confidences;
};
ForwardResult forward(const Model& m, const Tensor& batch);

// Row-wise softmax with max-subtraction; fixed summation order.
Tensor softmax_rows(const Tensor& logits);

// argmax with ties broken by lowest class index (deterministic under
// fault-induced ties).
uint32_t argmax_row(const float* row, uint32_t n);

// Top-1 accuracy over the dataset. Errors on an empty dataset.
double accuracy(const Model& m, const Dataset& ds);

// Model builders used by the tools and tests.
Model build_lenet_desk(uint64_t seed);       // the acceptance-gating workload
Model build_micro_linear(uint64_t seed);     // Flatten + Linear(784 -> 10)
Model build_micro_conv(uint64_t seed);       // tiny conv net for ISA sweeps
Model build_resnet_mini(uint64_t seed);      // residual stand-in (not gating)
Model build_dwnet_mini(uint64_t seed);       // depthwise-style stand-in (not gating)
Model build_model(const std::string& arch, uint64_t seed);

}  // namespace fsnn
