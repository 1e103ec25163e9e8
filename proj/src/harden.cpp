#include "fsnn/harden.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <sstream>

namespace fsnn {

static bool is_range_site(const Layer& l) {
  return l.is_activation() || l.kind == LayerKind::ResidualAdd;
}

static void require_baseline(const Model& m) {
  check(m.meta.hardening == HardeningTag::Baseline, Err::AlreadyHardened,
        "model already hardened (" + std::string(hardening_name(m.meta.hardening)) +
            "); transforms apply to baseline models only");
}

RangeProfile profile_ranges(const Model& m, const Dataset& calib) {
  require_baseline(m);
  check(calib.size() > 0, Err::EmptyCalibration, "calibration set is empty");
  RangeProfile prof;
  prof.model_name = m.meta.name;
  prof.arch_hash = arch_hash(m);
  prof.calib_id = calib.split + ":" + std::to_string(calib.size());

  std::vector<size_t> site_layers;
  for (size_t i = 0; i < m.layers.size(); ++i)
    if (is_range_site(m.layers[i])) site_layers.push_back(i);
  prof.sites.reserve(site_layers.size());
  for (size_t li : site_layers)
    prof.sites.push_back({static_cast<uint32_t>(li), m.layers[li].name,
                          std::numeric_limits<float>::infinity(),
                          -std::numeric_limits<float>::infinity()});

  Workspace ws;
  Tensor x({calib.images.dim(1), calib.images.dim(2), calib.images.dim(3)});
  const size_t per = calib.images.numel() / calib.images.dim(0);
  for (size_t s = 0; s < calib.size(); ++s) {
    std::memcpy(x.data.data(), calib.images.data.data() + s * per, per * sizeof(float));
    forward_sample(m, x, ws);
    for (size_t si = 0; si < site_layers.size(); ++si) {
      const Tensor& out = ws.outs[site_layers[si]];
      float lo = prof.sites[si].lo, hi = prof.sites[si].hi;
      for (float v : out.data) {
        lo = v < lo ? v : lo;
        hi = v > hi ? v : hi;
      }
      prof.sites[si].lo = lo;
      prof.sites[si].hi = hi;
    }
  }
  return prof;
}

Model apply_ranger(const Model& m, const RangeProfile& prof) {
  require_baseline(m);
  check(prof.arch_hash == arch_hash(m), Err::ProfileMismatch,
        "range profile was built for a different architecture");
  size_t expected = 0;
  for (const Layer& l : m.layers)
    if (is_range_site(l)) ++expected;
  check(prof.sites.size() == expected, Err::ProfileMismatch,
        "profile does not cover every activation site");

  Model out;
  out.meta = m.meta;
  out.meta.hardening = HardeningTag::Ranger;
  size_t si = 0;
  // Layer indices shift as guards are inserted; residual sources must be
  // remapped onto the new indices.
  std::vector<int32_t> remap(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i) {
    Layer l = m.layers[i];
    if (l.kind == LayerKind::ResidualAdd && l.src >= 0)
      l.src = remap[static_cast<size_t>(l.src)];
    out.layers.push_back(std::move(l));
    remap[i] = static_cast<int32_t>(out.layers.size() - 1);
    if (is_range_site(m.layers[i])) {
      const RangeSite& site = prof.sites[si++];
      out.layers.push_back(
          make_range_restrict("guard_" + m.layers[i].name, site.lo, site.hi));
      // the guard output is what downstream consumers see
      remap[i] = static_cast<int32_t>(out.layers.size() - 1);
    }
  }
  out.meta.notes += "ranger: sites=" + std::to_string(prof.sites.size()) +
                    " calib=" + prof.calib_id + "\n";
  out.validate();
  return out;
}

static size_t count_relu(const Model& m) {
  size_t n = 0;
  for (const Layer& l : m.layers)
    if (l.kind == LayerKind::ReLU) ++n;
  return n;
}

Model apply_swap_relu6(const Model& m, const std::optional<TrainHyper>& finetune,
                       const Dataset* train_ds) {
  require_baseline(m);
  check(count_relu(m) > 0, Err::NoRelu, "no ReLU layers to swap");
  Model out = m;
  for (Layer& l : out.layers)
    if (l.kind == LayerKind::ReLU) l.kind = LayerKind::ReLU6;
  out.meta.hardening = HardeningTag::SwapReLU6;
  out.meta.notes += "swap_relu6: swapped=" + std::to_string(count_relu(m)) + "\n";
  if (finetune) {
    check(train_ds != nullptr, Err::BadArgument, "fine-tune requested without a train set");
    out = train(out, *train_ds, *finetune);
    out.meta.notes += "swap_relu6: finetuned epochs=" + std::to_string(finetune->epochs) +
                      " lr=" + std::to_string(finetune->lr) + "\n";
  }
  return out;
}

Model apply_adaptive_clipper(const Model& m, const Dataset& calib, double percentile,
                             const std::optional<TrainHyper>& finetune,
                             const Dataset* train_ds) {
  require_baseline(m);
  check(calib.size() > 0, Err::EmptyCalibration, "calibration set is empty");
  check(percentile > 0.0 && percentile <= 100.0, Err::BadArgument,
        "percentile must be in (0, 100]");
  check(count_relu(m) > 0, Err::NoRelu, "no ReLU layers to clip");

  std::vector<size_t> relu_layers;
  for (size_t i = 0; i < m.layers.size(); ++i)
    if (m.layers[i].kind == LayerKind::ReLU) relu_layers.push_back(i);

  // Collect post-activation values per site over the calibration set.
  std::vector<std::vector<float>> site_vals(relu_layers.size());
  Workspace ws;
  Tensor x({calib.images.dim(1), calib.images.dim(2), calib.images.dim(3)});
  const size_t per = calib.images.numel() / calib.images.dim(0);
  for (size_t s = 0; s < calib.size(); ++s) {
    std::memcpy(x.data.data(), calib.images.data.data() + s * per, per * sizeof(float));
    forward_sample(m, x, ws);
    for (size_t si = 0; si < relu_layers.size(); ++si) {
      const Tensor& out = ws.outs[relu_layers[si]];
      site_vals[si].insert(site_vals[si].end(), out.data.begin(), out.data.end());
    }
  }

  float smallest_positive = std::numeric_limits<float>::infinity();
  for (const auto& vals : site_vals)
    for (float v : vals)
      if (v > 0.0f && v < smallest_positive) smallest_positive = v;

  Model out = m;
  std::ostringstream notes;
  notes << "clipper: p=" << percentile;
  for (size_t si = 0; si < relu_layers.size(); ++si) {
    auto& vals = site_vals[si];
    // nearest-rank percentile, rounding the fractional index up:
    // tau = sorted[ceil(p/100 * (n-1))], so p=100 is the observed maximum
    const size_t n = vals.size();
    size_t idx = static_cast<size_t>(std::ceil(percentile / 100.0 * (n - 1)));
    if (idx >= n) idx = n - 1;
    std::nth_element(vals.begin(), vals.begin() + idx, vals.end());
    float tau = vals[idx];
    if (!(tau > 0.0f)) {
      tau = std::isinf(smallest_positive) ? 1.0f : smallest_positive;
      notes << " [site " << m.layers[relu_layers[si]].name << " degenerate, fallback tau="
            << tau << "]";
    }
    Layer& l = out.layers[relu_layers[si]];
    l.kind = LayerKind::ClippedReLU;
    l.tau = tau;
    notes << " " << l.name << ":tau=" << tau;
  }
  notes << "\n";
  out.meta.hardening = HardeningTag::AdaptiveClipper;
  out.meta.notes += notes.str();
  if (finetune) {
    check(train_ds != nullptr, Err::BadArgument, "fine-tune requested without a train set");
    out = train(out, *train_ds, *finetune);
    out.meta.notes += "clipper: finetuned epochs=" + std::to_string(finetune->epochs) + "\n";
  }
  return out;
}

std::string hardening_manifest(const Model& m) {
  std::ostringstream os;
  os << "model: " << m.meta.name << "\n";
  os << "hardening: " << hardening_name(m.meta.hardening) << "\n";
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    if (l.kind == LayerKind::RangeRestrict)
      os << "layer " << i << " " << l.name << " range_restrict lo=" << l.lo << " hi=" << l.hi
         << "\n";
    if (l.kind == LayerKind::ClippedReLU)
      os << "layer " << i << " " << l.name << " clipped_relu tau=" << l.tau << "\n";
    if (l.kind == LayerKind::ReLU6)
      os << "layer " << i << " " << l.name << " relu6 bound=6\n";
  }
  if (!m.meta.notes.empty()) os << "notes:\n" << m.meta.notes;
  return os.str();
}

}  // namespace fsnn
