#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "fsnn/tensor.hpp"

namespace fsnn::eval {

enum class Termination { Completed, Trap, Timeout };
enum class Label { Masked, SafeSDC, CriticalSDC, DUE };

const char* label_name(Label l);
const char* termination_name(Termination t);

// One injection run's result. `excitations`/`uses`/`induced_ber` are only
// meaningful for ISA runs; `app_ber` only for MBF runs.
struct RunOutcome {
  std::string run_id;
  std::string cell;        // injector matrix cell, e.g. "isa-regs"
  std::string model;
  std::string hardening;
  std::string fault;       // printable fault spec
  Termination termination = Termination::Completed;
  Label label = Label::Masked;
  double acc_golden = 0.0;
  double acc_faulty = 0.0;   // NaN for DUE runs (no completed inference)
  uint64_t excitations = 0;
  uint64_t uses = 0;
  double induced_ber = 0.0;
  bool never_used = false;   // latent site: uses == 0, reported Masked
  double app_ber = -1.0;
  uint64_t golden_conf_digest = 0;  // fnv over the confidence matrix bits
  uint64_t faulty_conf_digest = 0;  // 0 for DUE runs (no completed inference)
  std::string sites;         // "layer:param:index:bit;..." for weight faults
  std::string error;         // per-run evaluation failure, recorded in-band
};

// Per-sample rule: bitwise-equal confidence vectors -> Masked; same top-1
// -> Safe-SDC; different top-1 -> Critical-SDC. Run label = worst sample
// label. Trap/Timeout -> DUE regardless of confidences.
Label classify(const Tensor& golden_conf, const Tensor& faulty_conf, Termination term);

// (acc_golden - acc_faulty) / acc_golden. Negative when the fault helps;
// recorded, never clamped. Errors when acc_golden == 0.
double rad(double acc_golden, double acc_faulty);

struct BerBridge {
  double ber_min = 0.0;
  double ber_max = 0.0;
  std::array<double, 10> samples{};
  std::string rule;  // sampling rule tag recorded for provenance
};

// [ber_min, ber_max] over ISA outcomes with uses >= 1; 10 log-uniform
// samples in [max(ber_min, smallest positive BER), ber_max], deterministic
// from seed. Degenerate range -> all samples equal. Errors when every site
// is never-used.
BerBridge build_ber_bridge(const std::vector<RunOutcome>& isa_outcomes, uint64_t seed);

struct Distribution {
  double masked_pct = 0, safe_sdc_pct = 0, critical_sdc_pct = 0, due_pct = 0;
  size_t runs = 0;
};

// Errors on empty input. Percentages sum to 100 up to representation.
Distribution aggregate(const std::vector<Label>& labels);

// Grouped report rows.
struct DistributionRow {
  std::string injector, target, model, hardening;
  Distribution dist;
};
struct AccuracyRow {
  std::string model, hardening, target, ber_bin;
  double mean_accuracy;  // over non-DUE runs in the bin
  size_t runs;
};

std::string distribution_csv(const std::vector<DistributionRow>& rows);
std::string accuracy_csv(const std::vector<AccuracyRow>& rows);

// BER bin edges mirroring the accuracy table layout: [0,1e-6), [1e-6,1e-5],
// plus an overflow bin for anything above.
std::string ber_bin_of(double ber);

}  // namespace fsnn::eval
