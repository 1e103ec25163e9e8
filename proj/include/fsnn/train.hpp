#pragma once

#include "fsnn/model.hpp"
#include "fsnn/tensor.hpp"

namespace fsnn {

struct TrainHyper {
  float lr = 0.1f;
  uint32_t epochs = 5;
  uint32_t batch_size = 32;
  uint64_t seed = 1;
  float lr_decay = 1.0f;  // multiplied into lr after each epoch
};

// Per-layer parameter gradients; empty tensors for parameter-free layers.
struct Gradients {
  std::vector<Tensor> dw;
  std::vector<Tensor> db;
  double loss = 0.0;  // mean cross-entropy over the batch
};

// Mean softmax cross-entropy loss + gradients for one batch. Exposed so the
// finite-difference oracle in the tests can check every parameter.
Gradients compute_gradients(const Model& m, const Tensor& batch,
                            const std::vector<uint32_t>& labels);

double mean_loss(const Model& m, const Dataset& ds);

// Plain SGD with seed-derived shuffling, single-threaded, deterministic:
// same (model, ds, hyper) gives a bit-identical result. 0 epochs returns the
// model unchanged. Errors with NonDifferentiable if the graph contains a
// RangeRestrict layer (saturation guards are reliability devices, not
// training components).
Model train(const Model& m, const Dataset& ds, const TrainHyper& hyper);

// Squared-error variant over explicit float targets (N x outputs); same
// backward stack and determinism contract. Used for regression toys.
Model train_regression(const Model& m, const Tensor& inputs, const Tensor& targets,
                       const TrainHyper& hyper);
double mean_squared_error(const Model& m, const Tensor& inputs, const Tensor& targets);

}  // namespace fsnn
