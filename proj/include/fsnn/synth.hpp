#pragma once

#include <cstdint>
#include <string>

#include "fsnn/tensor.hpp"

namespace fsnn {

// Deterministic synthetic digit dataset: 5x7 glyphs rendered into 28x28
// through seeded affine distortions (rotation, scale, shear, shift), stroke
// intensity jitter and pixel noise. Stands in for MNIST when the real IDX
// files are not on disk; emitted through the same IDX writer/loader so the
// whole pipeline is exercised either way.
Dataset synth_digits(uint32_t n, uint64_t seed, const std::string& split);

}  // namespace fsnn
