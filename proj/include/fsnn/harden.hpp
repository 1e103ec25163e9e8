#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fsnn/model.hpp"
#include "fsnn/train.hpp"

namespace fsnn {

// One profiled activation site: the output of an activation layer or a
// residual add ("convolutional block level" granularity). Bounds are scalar
// per site.
struct RangeSite {
  uint32_t layer_index;
  std::string layer_name;
  float lo;
  float hi;
};

struct RangeProfile {
  std::string model_name;
  uint64_t arch_hash = 0;  // structure fingerprint the profile was built for
  std::string calib_id;
  std::vector<RangeSite> sites;
};

// lo/hi = min/max of each site's outputs over the calibration set.
// Errors: EmptyCalibration.
RangeProfile profile_ranges(const Model& m, const Dataset& calib);

// Inserts a RangeRestrict layer after every profiled site. On data within
// the profiled ranges the hardened model is bit-identical to the baseline
// (clamp is the identity there). Errors: ProfileMismatch, AlreadyHardened.
Model apply_ranger(const Model& m, const RangeProfile& prof);

// Replaces every ReLU with ReLU6. Errors: NoRelu (transform would be
// vacuous), AlreadyHardened.
Model apply_swap_relu6(const Model& m, const std::optional<TrainHyper>& finetune,
                       const Dataset* train_ds);

// Replaces every ReLU with ClippedReLU, tau = nearest-rank p-th percentile
// of that site's post-activation calibration values. All-zero sites fall
// back to the smallest positive calibration value seen anywhere, or 1.0
// (recorded in model notes). Errors: EmptyCalibration, BadArgument,
// AlreadyHardened, NoRelu.
Model apply_adaptive_clipper(const Model& m, const Dataset& calib, double percentile,
                             const std::optional<TrainHyper>& finetune, const Dataset* train_ds);

// Sidecar text manifest of thresholds/bounds for a hardened model.
std::string hardening_manifest(const Model& m);

}  // namespace fsnn
