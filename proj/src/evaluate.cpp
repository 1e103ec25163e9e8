#include "fsnn/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

#include "fsnn/model.hpp"
#include "fsnn/rng.hpp"

namespace fsnn::eval {

const char* label_name(Label l) {
  switch (l) {
    case Label::Masked: return "Masked";
    case Label::SafeSDC: return "SafeSDC";
    case Label::CriticalSDC: return "CriticalSDC";
    case Label::DUE: return "DUE";
  }
  return "?";
}

const char* termination_name(Termination t) {
  switch (t) {
    case Termination::Completed: return "Completed";
    case Termination::Trap: return "Trap";
    case Termination::Timeout: return "Timeout";
  }
  return "?";
}

Label classify(const Tensor& golden_conf, const Tensor& faulty_conf, Termination term) {
  if (term != Termination::Completed) return Label::DUE;
  check(golden_conf.shape == faulty_conf.shape, Err::ShapeMismatch,
        "confidence tensors differ in shape");
  check(golden_conf.rank() == 2, Err::ShapeMismatch, "confidences must be N x classes");
  const uint32_t n = golden_conf.dim(0), c = golden_conf.dim(1);
  Label worst = Label::Masked;
  for (uint32_t s = 0; s < n; ++s) {
    const float* g = golden_conf.data.data() + static_cast<size_t>(s) * c;
    const float* f = faulty_conf.data.data() + static_cast<size_t>(s) * c;
    if (std::memcmp(g, f, c * sizeof(float)) == 0) continue;  // Masked sample
    const Label sample = argmax_row(g, c) == argmax_row(f, c) ? Label::SafeSDC
                                                              : Label::CriticalSDC;
    if (sample > worst) worst = sample;
    if (worst == Label::CriticalSDC) break;  // already the worst possible here
  }
  return worst;
}

double rad(double acc_golden, double acc_faulty) {
  check(acc_golden > 0.0, Err::BadArgument, "RAD undefined for zero golden accuracy");
  return (acc_golden - acc_faulty) / acc_golden;
}

BerBridge build_ber_bridge(const std::vector<RunOutcome>& isa_outcomes, uint64_t seed) {
  BerBridge b;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  double smallest_pos = std::numeric_limits<double>::infinity();
  size_t usable = 0;
  for (const RunOutcome& o : isa_outcomes) {
    if (o.uses == 0) continue;  // latent sites excluded from the range
    ++usable;
    lo = std::min(lo, o.induced_ber);
    hi = std::max(hi, o.induced_ber);
    if (o.induced_ber > 0.0) smallest_pos = std::min(smallest_pos, o.induced_ber);
  }
  check(usable > 0, Err::BadArgument, "no ISA outcome with uses >= 1; bridge undefined");
  b.ber_min = lo;
  b.ber_max = hi;

  if (lo == hi) {
    b.samples.fill(lo);
    b.rule = "degenerate-range";
    return b;
  }
  // log-uniform needs a positive floor; an all-zero lower end floors at the
  // smallest positive BER observed.
  const double floor = lo > 0.0 ? lo : (std::isinf(smallest_pos) ? hi : smallest_pos);
  if (floor >= hi) {
    b.samples.fill(hi);
    b.rule = "degenerate-range";
    return b;
  }
  Rng rng(seed ^ 0xbe55a3b1d6e01ull);
  const double llo = std::log(floor), lhi = std::log(hi);
  for (auto& s : b.samples) s = std::exp(rng.uniform(llo, lhi));
  std::sort(b.samples.begin(), b.samples.end());
  b.rule = "log-uniform[" + std::to_string(floor) + "," + std::to_string(hi) + "]";
  return b;
}

Distribution aggregate(const std::vector<Label>& labels) {
  check(!labels.empty(), Err::BadArgument, "aggregate over zero outcomes");
  size_t counts[4] = {0, 0, 0, 0};
  for (Label l : labels) ++counts[static_cast<size_t>(l)];
  const double n = static_cast<double>(labels.size());
  Distribution d;
  d.masked_pct = 100.0 * counts[0] / n;
  d.safe_sdc_pct = 100.0 * counts[1] / n;
  d.critical_sdc_pct = 100.0 * counts[2] / n;
  d.due_pct = 100.0 * counts[3] / n;
  d.runs = labels.size();
  return d;
}

static std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string distribution_csv(const std::vector<DistributionRow>& rows) {
  std::ostringstream os;
  os << "injector,target,model,hardening,masked_pct,safe_sdc_pct,critical_sdc_pct,due_pct,runs\n";
  for (const auto& r : rows) {
    os << r.injector << ',' << r.target << ',' << r.model << ',' << r.hardening << ','
       << fmt(r.dist.masked_pct) << ',' << fmt(r.dist.safe_sdc_pct) << ','
       << fmt(r.dist.critical_sdc_pct) << ',' << fmt(r.dist.due_pct) << ',' << r.dist.runs
       << '\n';
  }
  return os.str();
}

std::string accuracy_csv(const std::vector<AccuracyRow>& rows) {
  std::ostringstream os;
  os << "model,hardening,target,ber_bin,mean_accuracy,runs\n";
  for (const auto& r : rows) {
    os << r.model << ',' << r.hardening << ',' << r.target << ',' << r.ber_bin << ','
       << fmt(r.mean_accuracy) << ',' << r.runs << '\n';
  }
  return os.str();
}

std::string ber_bin_of(double ber) {
  if (ber < 1e-6) return "[0,1e-6)";
  if (ber <= 1e-5) return "[1e-6,1e-5]";
  return "(1e-5,inf)";
}

}  // namespace fsnn::eval
