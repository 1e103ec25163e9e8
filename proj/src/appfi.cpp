#include "fsnn/appfi.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <sstream>

#include "fsnn/rng.hpp"

namespace fsnn::app {

std::string AppFaultSpec::describe() const {
  std::ostringstream os;
  os << (target == Target::Weight ? "weights" : "neurons");
  if (target == Target::Weight) {
    os << (mode == Mode::SBF ? ":sbf" : ":mbf");
    if (mode == Mode::MBF) os << ":ber=" << ber;
  } else {
    os << ":bler=" << bler << ":ner=" << ner << ":bit=" << bit;
    if (layer_filter >= 0) os << ":layer=" << layer_filter;
  }
  return os.str();
}

double normal_quantile_two_sided(double confidence) {
  check(confidence > 0.0 && confidence < 1.0, Err::BadArgument,
        "confidence must be in (0,1)");
  const double p = (1.0 + confidence) / 2.0;
  // Acklam's rational approximation, then one Halley step against erfc.
  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};
  const double plow = 0.02425, phigh = 1 - plow;
  double x;
  if (p < plow) {
    const double q = std::sqrt(-2 * std::log(p));
    x = (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  } else if (p <= phigh) {
    const double q = p - 0.5, r = q * q;
    x = (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
        (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
  } else {
    const double q = std::sqrt(-2 * std::log(1 - p));
    x = -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
        ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  const double e = 0.5 * std::erfc(-x / std::sqrt(2.0)) - p;
  const double u = e * std::sqrt(2 * M_PI) * std::exp(x * x / 2);
  x = x - u / (1 + x * u / 2);
  return x;
}

uint64_t stat_sample_size(uint64_t population, double confidence, double margin, double p) {
  check(population >= 1, Err::BadArgument, "population must be >= 1");
  check(margin > 0.0 && margin < 1.0, Err::BadArgument, "margin must be in (0,1)");
  const double t = normal_quantile_two_sided(confidence);
  const double denom = 1.0 + margin * margin * static_cast<double>(population - 1) /
                                 (t * t * p * (1.0 - p));
  const double n = std::ceil(static_cast<double>(population) / denom);
  const uint64_t ni = static_cast<uint64_t>(n);
  return ni > population ? population : (ni < 1 ? 1 : ni);
}

uint64_t weight_bit_population(const Model& m) {
  uint64_t elems = 0;
  for (const Layer& l : m.layers) elems += l.weight.numel() + l.bias.numel();
  return elems * 32;
}

namespace {

struct ParamRef {
  uint32_t layer;
  uint32_t param;  // 0 weight, 1 bias
  uint64_t offset; // global element offset of this tensor
  uint64_t count;
};

std::vector<ParamRef> param_map(const Model& m, int layer_filter = -1) {
  std::vector<ParamRef> refs;
  uint64_t off = 0;
  for (uint32_t li = 0; li < m.layers.size(); ++li) {
    const Layer& l = m.layers[li];
    if (layer_filter >= 0 && li != static_cast<uint32_t>(layer_filter)) continue;
    if (l.weight.numel()) {
      refs.push_back({li, 0, off, l.weight.numel()});
      off += l.weight.numel();
    }
    if (l.bias.numel()) {
      refs.push_back({li, 1, off, l.bias.numel()});
      off += l.bias.numel();
    }
  }
  return refs;
}

uint64_t bit_population(const std::vector<ParamRef>& refs) {
  uint64_t elems = 0;
  for (const ParamRef& r : refs) elems += r.count;
  return elems * 32;
}

FaultSite site_of_global_bit(const std::vector<ParamRef>& refs, uint64_t bit_index) {
  const uint64_t elem = bit_index / 32;
  const uint32_t bit = static_cast<uint32_t>(bit_index % 32);
  for (const ParamRef& r : refs) {
    if (elem >= r.offset && elem < r.offset + r.count)
      return {r.layer, r.param, elem - r.offset, bit};
  }
  fail(Err::BadArgument, "bit index outside parameter population");
}

void flip_bit(float& v, uint32_t bit) {
  uint32_t bits = std::bit_cast<uint32_t>(v);
  bits ^= (1u << bit);
  v = std::bit_cast<float>(bits);
}

}  // namespace

Model flip_sites(const Model& m, const std::vector<FaultSite>& sites) {
  Model out = m;
  for (const FaultSite& s : sites) {
    check(s.bit <= 31, Err::BadBitIndex, "bit index must be 0..31");
    Layer& l = out.layers.at(s.layer);
    Tensor& t = s.param == 0 ? l.weight : l.bias;
    check(s.flat_index < t.numel(), Err::BadArgument, "fault site index out of range");
    flip_bit(t.data[s.flat_index], s.bit);
  }
  return out;
}

std::pair<Model, std::vector<FaultSite>> flip_weight_bits(const Model& m,
                                                          const AppFaultSpec& spec) {
  check(spec.target == Target::Weight, Err::BadArgument, "spec targets neurons");
  const auto refs = param_map(m, spec.layer_filter);
  check(!refs.empty(), Err::BadArgument, "no parameters to corrupt in the selected layers");
  const uint64_t population = bit_population(refs);

  Rng rng(spec.seed ^ 0x77626974ull);
  std::vector<uint64_t> picks;
  if (spec.mode == Mode::SBF) {
    picks.push_back(rng.below(population));
  } else {
    const uint64_t k = static_cast<uint64_t>(std::llround(spec.ber * static_cast<double>(population)));
    check(k >= 1, Err::BerBelowResolution,
          "BER below resolution: round(BER * " + std::to_string(population) + ") = 0");
    picks = rng.sample_distinct(population, k);
  }
  std::vector<FaultSite> sites;
  sites.reserve(picks.size());
  for (uint64_t p : picks) sites.push_back(site_of_global_bit(refs, p));
  return {flip_sites(m, sites), std::move(sites)};
}

Tensor corrupt_feature_map(const Tensor& fm, double bler, double ner, uint32_t bit,
                           uint64_t seed) {
  check(bit <= 31, Err::BadBitIndex, "bit index must be 0..31");
  check(bler > 0.0 && bler <= 1.0, Err::BadArgument, "BlER must be in (0,1]");
  check(ner > 0.0 && ner <= 1.0, Err::BadArgument, "NER must be in (0,1]");
  check(fm.rank() == 3 || fm.rank() == 4, Err::ShapeMismatch,
        "feature map must have a channel dimension (CxHxW or NxCxHxW)");
  const uint64_t planes = fm.rank() == 3 ? fm.dim(0)
                                         : static_cast<uint64_t>(fm.dim(0)) * fm.dim(1);
  const uint64_t plane_size = fm.numel() / planes;

  const uint64_t nb = static_cast<uint64_t>(std::ceil(bler * static_cast<double>(planes)));
  const uint64_t nn = static_cast<uint64_t>(std::ceil(ner * static_cast<double>(plane_size)));

  Tensor out = fm;
  Rng block_rng(seed ^ 0x626c6f636b73ull);
  const auto blocks = block_rng.sample_distinct(planes, nb);
  for (uint64_t b : blocks) {
    // per-block stream: site choice is independent of block iteration order
    Rng nrng = Rng::stream(seed, b + 1);
    const auto neurons = nrng.sample_distinct(plane_size, nn);
    float* plane = out.data.data() + b * plane_size;
    for (uint64_t n : neurons) flip_bit(plane[n], bit);
  }
  return out;
}

std::vector<uint32_t> neuron_target_layers(const Model& m) {
  // feature maps need a channel dimension (BlER blocks are channel planes),
  // so rank-1 outputs after Flatten are not injectable; guards and the
  // final classifier layer are excluded as well
  const auto shapes = m.layer_shapes();
  std::vector<uint32_t> out;
  for (uint32_t i = 0; i + 1 < m.layers.size(); ++i) {
    const LayerKind k = m.layers[i].kind;
    if (k == LayerKind::RangeRestrict || k == LayerKind::Flatten) continue;
    if (shapes[i].size() < 3) continue;
    out.push_back(i);
  }
  return out;
}

namespace {

double subset_accuracy(const Tensor& logits, const std::vector<uint32_t>& labels) {
  const uint32_t n = logits.dim(0), c = logits.dim(1);
  size_t correct = 0;
  for (uint32_t i = 0; i < n; ++i)
    if (argmax_row(logits.data.data() + static_cast<size_t>(i) * c, c) == labels[i]) ++correct;
  return static_cast<double>(correct) / n;
}

// Forward with one layer's output corrupted; returns logits over the subset.
ForwardResult forward_corrupted(const Model& m, const Dataset& subset, int layer,
                                double bler, double ner, uint32_t bit, uint64_t seed) {
  ForwardResult r;
  const uint32_t n = static_cast<uint32_t>(subset.size());
  r.logits = Tensor({n, m.meta.class_count});
  Workspace ws;
  ForwardHook hook;
  hook.corrupt_layer = layer;
  hook.corrupt = [&](Tensor& fm) { fm = corrupt_feature_map(fm, bler, ner, bit, seed); };
  Tensor x({subset.images.dim(1), subset.images.dim(2), subset.images.dim(3)});
  const size_t per = subset.images.numel() / n;
  for (uint32_t i = 0; i < n; ++i) {
    std::memcpy(x.data.data(), subset.images.data.data() + static_cast<size_t>(i) * per,
                per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws, &hook);
    std::memcpy(r.logits.data.data() + static_cast<size_t>(i) * m.meta.class_count,
                logits.data.data(), m.meta.class_count * sizeof(float));
  }
  r.confidences = softmax_rows(r.logits);
  return r;
}

std::string sites_string(const std::vector<FaultSite>& sites) {
  std::ostringstream os;
  for (size_t i = 0; i < sites.size(); ++i) {
    if (i) os << ';';
    os << sites[i].layer << ':' << (sites[i].param == 0 ? 'w' : 'b') << ':'
       << sites[i].flat_index << ':' << sites[i].bit;
  }
  return os.str();
}

}  // namespace

std::vector<eval::RunOutcome> run_app_campaign(const Model& m, const Dataset& ds,
                                               const AppFaultSpec& spec,
                                               const StatSizing& sizing,
                                               const CampaignParams& params) {
  ds.validate();
  const size_t n_eval = std::min(params.eval_subset, ds.size());
  const Dataset subset = ds.subset(0, n_eval);
  const ForwardResult golden = forward(m, subset.images);
  const double acc_golden = subset_accuracy(golden.logits, subset.labels);

  std::vector<eval::RunOutcome> outcomes;
  auto base_outcome = [&](uint64_t run_idx) {
    eval::RunOutcome o;
    o.model = m.meta.name;
    o.hardening = hardening_name(m.meta.hardening);
    o.acc_golden = acc_golden;
    o.run_id = hex64(fnv1a64(spec.describe()) ^ run_idx);
    return o;
  };

  const uint64_t golden_digest = golden.confidences.bits_hash();
  auto eval_faulty = [&](eval::RunOutcome& o, const ForwardResult& faulty) {
    o.termination = eval::Termination::Completed;
    o.label = eval::classify(golden.confidences, faulty.confidences, o.termination);
    o.acc_faulty = subset_accuracy(faulty.logits, subset.labels);
    o.golden_conf_digest = golden_digest;
    o.faulty_conf_digest = faulty.confidences.bits_hash();
  };

  if (spec.target == Target::Weight && spec.mode == Mode::SBF) {
    const uint64_t population = weight_bit_population(m);
    const uint64_t n = stat_sample_size(population, sizing.confidence, sizing.margin, sizing.p);
    // distinct sites across the whole campaign, sampled once
    Rng rng(params.seed ^ 0x736266ull);
    const auto picks = rng.sample_distinct(population, n);
    const auto refs = param_map(m);
    for (uint64_t i = 0; i < n; ++i) {
      eval::RunOutcome o = base_outcome(i);
      o.cell = "app-weights-sbf";
      try {
        const FaultSite site = site_of_global_bit(refs, picks[i]);
        const Model faulty = flip_sites(m, {site});
        o.fault = "sbf " + sites_string({site});
        o.sites = sites_string({site});
        eval_faulty(o, forward(faulty, subset.images));
      } catch (const Error& e) {
        o.error = e.what();
      }
      outcomes.push_back(std::move(o));
    }
  } else if (spec.target == Target::Weight && spec.mode == Mode::MBF) {
    for (size_t i = 0; i < params.mbf_bers.size(); ++i) {
      eval::RunOutcome o = base_outcome(i + 0x4d4246ull);
      o.cell = "app-weights-mbf";
      AppFaultSpec s = spec;
      s.ber = params.mbf_bers[i];
      s.seed = params.seed ^ (0x6d6266ull + i);
      o.app_ber = s.ber;
      try {
        auto [faulty, sites] = flip_weight_bits(m, s);
        // index-qualified so equal bridge BERs still make distinct runs
        o.fault = s.describe() + "#" + std::to_string(i) +
                  " k=" + std::to_string(sites.size());
        o.sites = sites_string(sites);
        eval_faulty(o, forward(faulty, subset.images));
      } catch (const Error& e) {
        o.error = e.what();
        o.fault = s.describe() + "#" + std::to_string(i);
      }
      outcomes.push_back(std::move(o));
    }
  } else {
    // neuron campaign
    const auto eligible = neuron_target_layers(m);
    check(!eligible.empty(), Err::BadArgument, "no eligible neuron target layers");
    const auto shapes = m.layer_shapes();
    // effective corrupted-bit fraction of a layer's FM: one flipped bit per
    // chosen neuron over numel * 32 bits; lets neuron runs join the
    // accuracy-by-BER table
    auto neuron_ber = [&](uint32_t layer) {
      const auto& s = shapes[layer];
      uint64_t numel = 1;
      for (uint32_t d : s) numel *= d;
      if (s.size() < 3) return -1.0;
      const uint64_t planes = s.size() == 3 ? s[0] : static_cast<uint64_t>(s[0]) * s[1];
      const uint64_t plane = numel / planes;
      const uint64_t nb = static_cast<uint64_t>(std::ceil(spec.bler * planes));
      const uint64_t nn = static_cast<uint64_t>(std::ceil(spec.ner * plane));
      return static_cast<double>(nb * nn) / (static_cast<double>(numel) * 32.0);
    };
    for (uint32_t i = 0; i < params.neuron_runs; ++i) {
      eval::RunOutcome o = base_outcome(i + 0x4e55ull);
      o.cell = "app-neurons";
      Rng rng = Rng::stream(params.seed ^ 0x6e6575726f6eull, i);
      int layer = spec.layer_filter;
      if (layer < 0) layer = static_cast<int>(eligible[rng.below(eligible.size())]);
      const uint64_t fm_seed = rng.next();
      std::ostringstream fs;
      fs << spec.describe() << " layer=" << layer << " fmseed=" << fm_seed;
      o.fault = fs.str();
      o.app_ber = neuron_ber(static_cast<uint32_t>(layer));
      try {
        eval_faulty(o, forward_corrupted(m, subset, layer, spec.bler, spec.ner, spec.bit,
                                         fm_seed));
      } catch (const Error& e) {
        o.error = e.what();
      }
      outcomes.push_back(std::move(o));
    }
  }
  return outcomes;
}

}  // namespace fsnn::app
