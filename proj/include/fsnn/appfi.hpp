#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "fsnn/evaluate.hpp"
#include "fsnn/model.hpp"

namespace fsnn::app {

enum class Target { Weight, Neuron };
enum class Mode { SBF, MBF };

// One application-level injection description. Weight faults flip stored
// parameter bits; neuron faults corrupt one layer's output feature map
// during inference (BlER fraction of channel-plane blocks, NER fraction of
// neurons inside each chosen block, one bit position).
struct AppFaultSpec {
  Target target = Target::Weight;
  Mode mode = Mode::SBF;
  uint32_t bit = 0;       // 0..31, 31 = sign
  double ber = 0.0;       // MBF only
  double bler = 0.0;      // Neuron only
  double ner = 0.0;       // Neuron only
  int layer_filter = -1;  // -1 = any eligible layer
  uint64_t seed = 0;

  std::string describe() const;
};

// One flipped parameter bit. param = 0 (weight tensor) or 1 (bias tensor);
// biases are part of the weight-bit population.
struct FaultSite {
  uint32_t layer;
  uint32_t param;
  uint64_t flat_index;
  uint32_t bit;
};

struct StatSizing {
  uint64_t population = 0;
  double confidence = 0.95;
  double margin = 0.005;  // the paper's "error margin=0.5" read as 0.5%
  double p = 0.5;         // worst-case prior
};

// Two-sided normal quantile for the given central probability mass.
double normal_quantile_two_sided(double confidence);

// n = ceil(N / (1 + e^2 (N-1) / (t^2 p (1-p)))), capped at N.
uint64_t stat_sample_size(uint64_t population, double confidence, double margin, double p);

// Total faultable parameter bits (weights + biases, 32 per element).
uint64_t weight_bit_population(const Model& m);

// SBF: one site; MBF: round(ber * population) distinct sites sampled
// without replacement from the spec seed. The input model is untouched.
// Errors: BerBelowResolution when rounding gives zero flips.
std::pair<Model, std::vector<FaultSite>> flip_weight_bits(const Model& m,
                                                          const AppFaultSpec& spec);

// Flip one chosen bit at explicit sites (used for replaying recorded runs).
Model flip_sites(const Model& m, const std::vector<FaultSite>& sites);

// Feature-map corruption: blocks are channel planes (axis 0 of a CxHxW map;
// N*C planes for a rank-4 map). ceil(BlER * blocks) blocks, ceil(NER *
// block_size) neurons per chosen block, each gets `bit` flipped. Flipping
// twice with the same seed restores the input bitwise.
Tensor corrupt_feature_map(const Tensor& fm, double bler, double ner, uint32_t bit,
                           uint64_t seed);

// Layers whose outputs are eligible neuron targets: every layer with a
// channel dimension in its output (BlER blocks are channel planes), except
// RangeRestrict guards and the final classifier layer.
std::vector<uint32_t> neuron_target_layers(const Model& m);

struct CampaignParams {
  std::vector<double> mbf_bers;  // one MBF run per value
  uint32_t neuron_runs = 200;    // runs for the neuron campaign
  uint64_t seed = 1;
  size_t eval_subset = 1000;
};

// Statistical SBF / MBF-per-BER / neuron campaign over a fixed evaluation
// subset. Every run gets a fresh model copy and an RNG stream derived from
// (seed, run index); per-run failures are recorded in-band, never thrown.
// APP runs always Complete, so no outcome can be DUE.
std::vector<eval::RunOutcome> run_app_campaign(const Model& m, const Dataset& ds,
                                               const AppFaultSpec& spec,
                                               const StatSizing& sizing,
                                               const CampaignParams& params);

}  // namespace fsnn::app
