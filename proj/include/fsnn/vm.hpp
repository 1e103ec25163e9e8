#pragma once

#include <functional>

#include "fsnn/evaluate.hpp"
#include "fsnn/isa.hpp"

namespace fsnn::isa {

// Excitation/use statistics are defined on the FAULT-FREE execution trace:
// a use is every read or write of a register (every dispatched op for an FU
// port), and an excitation is a use where the fault-free bit value differs
// from the stuck value. Counting against the golden trace keeps the numbers
// well-defined for runs that trap or hang, makes the trace-replay oracle
// exact, and preserves zero-excitation => Masked. (The alternative of
// counting pre-force values inside the faulty run agrees until the faulty
// run diverges and is not used here.)
struct ExcitationCounter {
  uint64_t excitations = 0;
  uint64_t uses = 0;
};

double induced_ber(const ExcitationCounter& c);  // excitations/uses, in [0,1]

// Per-site tallies from golden executions; one pass covers the whole fault
// space (uses plus per-bit ones-counts determine excitations for any spec).
struct SiteStats {
  std::array<uint64_t, kNumRegs> reg_uses{};
  std::array<std::array<uint64_t, 32>, kNumRegs> reg_ones{};
  uint64_t fu_uses[4][3] = {};
  uint64_t fu_ones[4][3][32] = {};
  uint64_t icount = 0;

  void accumulate(const SiteStats& o);
  ExcitationCounter counter_for(const IsaFaultSpec& spec) const;
};

enum class TrapKind : uint8_t { OutOfBounds, Misaligned };
const char* trap_name(TrapKind t);

struct ExecResult {
  eval::Termination termination = eval::Termination::Completed;
  TrapKind trap = TrapKind::OutOfBounds;
  std::vector<float> output;  // program output region (logits) when Completed
  ExcitationCounter counter;  // filled when a fault was injected
  uint64_t icount = 0;
};

// Per-cycle site-use record stream for the excitation oracle (--trace).
// kind: 'r' register read, 'w' register write, 'a'/'b'/'o' FU ports.
using TraceFn =
    std::function<void(uint64_t cycle, char kind, uint8_t site, uint8_t fu, uint32_t bits)>;

// Reusable executor: owns the preloaded memory image (params + zeroed
// scratch); each run copies the template and patches the input region, so
// executions are independent and a campaign can keep one Machine per thread.
class Machine {
public:
  explicit Machine(const Program& p);

  void set_input(const Tensor& input);

  // Fault-free run; no stats. Watchdog 0 = unlimited.
  ExecResult run_plain(uint64_t watchdog = 0);

  // Fault-free run collecting per-site statistics (the golden pass).
  ExecResult run_golden(SiteStats& stats, uint64_t watchdog = 0);

  // Stuck-at run. The counter is NOT filled here (it is a golden-trace
  // quantity); callers combine with SiteStats::counter_for.
  ExecResult run_fault(const IsaFaultSpec& fault, uint64_t watchdog);

  // Fault-free run emitting trace records (slow; tests and --trace only).
  ExecResult run_traced(const TraceFn& fn, uint64_t watchdog = 0);

private:
  const Program* prog_;
  std::vector<uint32_t> mem_template_;
  std::vector<uint32_t> mem_;
  template <int MODE>
  ExecResult run_impl(const IsaFaultSpec* fault, uint64_t watchdog, SiteStats* stats,
                      const TraceFn* trace);
};

// One-call form matching the spec surface: golden pass (for the counter and
// the auto watchdog = 10x fault-free icount) followed by the faulty run
// when a fault is given. watchdog_mult scales the auto watchdog.
ExecResult execute(const Program& p, const Tensor& input,
                   const std::optional<IsaFaultSpec>& fault, uint64_t watchdog_mult = 10);

}  // namespace fsnn::isa
