#include "fsnn/model.hpp"

#include <cmath>
#include <cstring>
#include <limits>

#include "fsnn/kernels.hpp"
#include "fsnn/rng.hpp"

namespace fsnn {

const char* hardening_name(HardeningTag t) {
  switch (t) {
    case HardeningTag::Baseline: return "baseline";
    case HardeningTag::Ranger: return "ranger";
    case HardeningTag::AdaptiveClipper: return "clipper";
    case HardeningTag::SwapReLU6: return "relu6";
  }
  return "?";
}

std::vector<std::vector<uint32_t>> Model::layer_shapes() const {
  std::vector<std::vector<uint32_t>> shapes;
  shapes.reserve(layers.size());
  std::vector<uint32_t> cur = meta.input_shape;
  for (const Layer& l : layers) {
    cur = layer_out_shape(l, cur, shapes, meta.input_shape);
    shapes.push_back(cur);
  }
  return shapes;
}

void Model::validate() const {
  check(!meta.input_shape.empty(), Err::ShapeMismatch, "model input shape unset");
  auto shapes = layer_shapes();
  if (!shapes.empty()) {
    const auto& out = shapes.back();
    uint32_t n = 1;
    for (uint32_t d : out) n *= d;
    check(n == meta.class_count, Err::ShapeMismatch,
          "final layer output size != class count");
  }
  for (const Layer& l : layers)
    for (float v : l.weight.data)
      check(!std::isnan(v), Err::BadFormat, "NaN in parameters of layer " + l.name);
}

size_t Model::param_count() const {
  size_t n = 0;
  for (const Layer& l : layers) n += l.weight.numel() + l.bias.numel();
  return n;
}

uint64_t arch_hash(const Model& m) {
  uint64_t h = fnv1a64(m.meta.input_shape.data(), m.meta.input_shape.size() * 4);
  for (const Layer& l : m.layers) {
    const uint32_t k = static_cast<uint32_t>(l.kind);
    h = fnv1a64(&k, 4, h);
    h = fnv1a64(l.weight.shape.data(), l.weight.shape.size() * 4, h);
    const uint32_t attrs[4] = {l.k, l.s, l.stride, l.pad};
    h = fnv1a64(attrs, sizeof(attrs), h);
  }
  return h;
}

uint64_t Model::weights_hash() const {
  uint64_t h = 0xcbf29ce484222325ull;
  for (const Layer& l : layers) {
    h = fnv1a64(l.weight.data.data(), l.weight.data.size() * sizeof(float), h);
    h = fnv1a64(l.bias.data.data(), l.bias.data.size() * sizeof(float), h);
  }
  return h;
}

static void apply_layer(const Layer& l, const Tensor& in, Tensor& out,
                        const std::vector<Tensor>& earlier, const Tensor& model_in) {
  const auto& K = kern::active();
  switch (l.kind) {
    case LayerKind::Conv2d: {
      kern::Conv2dDims d{in.dim(0), in.dim(1), in.dim(2), l.weight.dim(0),
                         l.weight.dim(2), l.weight.dim(3), l.stride, l.pad};
      K.conv2d(out.data.data(), in.data.data(), l.weight.data.data(), l.bias.data.data(), d);
      break;
    }
    case LayerKind::Linear:
      K.linear(out.data.data(), in.data.data(), l.weight.data.data(), l.bias.data.data(),
               l.weight.dim(0), l.weight.dim(1));
      break;
    case LayerKind::BatchNorm2dFolded:
      K.affine_channel(out.data.data(), in.data.data(), l.weight.data.data(),
                       l.bias.data.data(), in.dim(0), static_cast<size_t>(in.dim(1)) * in.dim(2));
      break;
    case LayerKind::ReLU:
      K.clamp(out.data.data(), in.data.data(), in.numel(), 0.0f,
              std::numeric_limits<float>::infinity());
      break;
    case LayerKind::ReLU6:
      K.clamp(out.data.data(), in.data.data(), in.numel(), 0.0f, 6.0f);
      break;
    case LayerKind::ClippedReLU:
      K.clamp(out.data.data(), in.data.data(), in.numel(), 0.0f, l.tau);
      break;
    case LayerKind::RangeRestrict:
      K.clamp(out.data.data(), in.data.data(), in.numel(), l.lo, l.hi);
      break;
    case LayerKind::MaxPool2d:
      K.maxpool2d(out.data.data(), in.data.data(), in.dim(0), in.dim(1), in.dim(2), l.k, l.s);
      break;
    case LayerKind::AvgPool2d:
      K.avgpool2d(out.data.data(), in.data.data(), in.dim(0), in.dim(1), in.dim(2), l.k, l.s);
      break;
    case LayerKind::Flatten:
      std::memcpy(out.data.data(), in.data.data(), in.numel() * sizeof(float));
      break;
    case LayerKind::ResidualAdd: {
      const Tensor& src = l.src == -1 ? model_in : earlier[static_cast<size_t>(l.src)];
      K.add(out.data.data(), in.data.data(), src.data.data(), in.numel());
      break;
    }
  }
}

const Tensor& forward_sample(const Model& m, const Tensor& x, Workspace& ws,
                             const ForwardHook* hook) {
  check(x.shape == m.meta.input_shape, Err::ShapeMismatch,
        "input shape " + x.shape_str() + " != model input shape");
  const uint64_t arch = arch_hash(m);
  if (ws.bound_arch != arch || ws.outs.size() != m.layers.size()) {
    auto shapes = m.layer_shapes();
    ws.outs.assign(m.layers.size(), Tensor());
    for (size_t i = 0; i < m.layers.size(); ++i) ws.outs[i] = Tensor(shapes[i]);
    ws.bound_arch = arch;
  }
  const Tensor* cur = &x;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    apply_layer(m.layers[i], *cur, ws.outs[i], ws.outs, x);
    if (hook && hook->corrupt_layer == static_cast<int>(i) && hook->corrupt) {
      hook->corrupt(ws.outs[i]);
    }
    if (hook && hook->observe) hook->observe(i, ws.outs[i]);
    cur = &ws.outs[i];
  }
  return *cur;
}

Tensor softmax_rows(const Tensor& logits) {
  const uint32_t n = logits.dim(0), c = logits.dim(1);
  Tensor out({n, c});
  for (uint32_t r = 0; r < n; ++r) {
    const float* row = logits.data.data() + static_cast<size_t>(r) * c;
    float* orow = out.data.data() + static_cast<size_t>(r) * c;
    float m = -std::numeric_limits<float>::infinity();
    for (uint32_t i = 0; i < c; ++i) m = m > row[i] ? m : row[i];
    float sum = 0.0f;
    for (uint32_t i = 0; i < c; ++i) {
      orow[i] = std::exp(row[i] - m);
      sum += orow[i];
    }
    for (uint32_t i = 0; i < c; ++i) orow[i] /= sum;
  }
  return out;
}

uint32_t argmax_row(const float* row, uint32_t n) {
  uint32_t best = 0;
  for (uint32_t i = 1; i < n; ++i) {
    if (row[i] > row[best]) best = i;  // strict: ties keep the lowest index
  }
  return best;
}

ForwardResult forward(const Model& m, const Tensor& batch) {
  check(batch.rank() == 4, Err::ShapeMismatch, "batch must be N x C x H x W");
  const uint32_t n = batch.dim(0);
  ForwardResult r;
  r.logits = Tensor({n, m.meta.class_count});
  Workspace ws;
  const size_t per = batch.numel() / n;
  Tensor x({batch.dim(1), batch.dim(2), batch.dim(3)});
  for (uint32_t i = 0; i < n; ++i) {
    std::memcpy(x.data.data(), batch.data.data() + static_cast<size_t>(i) * per,
                per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws);
    std::memcpy(r.logits.data.data() + static_cast<size_t>(i) * m.meta.class_count,
                logits.data.data(), m.meta.class_count * sizeof(float));
  }
  r.confidences = softmax_rows(r.logits);
  return r;
}

double accuracy(const Model& m, const Dataset& ds) {
  check(ds.size() > 0, Err::EmptyDataset, "accuracy over empty dataset");
  Workspace ws;
  size_t correct = 0;
  Tensor x({ds.images.dim(1), ds.images.dim(2), ds.images.dim(3)});
  const size_t per = ds.images.numel() / ds.images.dim(0);
  for (size_t i = 0; i < ds.size(); ++i) {
    std::memcpy(x.data.data(), ds.images.data.data() + i * per, per * sizeof(float));
    const Tensor& logits = forward_sample(m, x, ws);
    if (argmax_row(logits.data.data(), m.meta.class_count) == ds.labels[i]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(ds.size());
}

// --- builders ---------------------------------------------------------

static void init_fan_in(Tensor& w, uint32_t fan_in, Rng& rng) {
  const float stddev = std::sqrt(2.0f / static_cast<float>(fan_in));
  for (float& v : w.data) v = rng.normal_float(stddev);
}

Model build_lenet_desk(uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.meta.name = "lenet-desk";
  m.meta.input_shape = {1, 28, 28};
  m.meta.class_count = 10;
  m.layers.push_back(make_pool("pool0", LayerKind::AvgPool2d, 2, 2));  // 1x14x14
  m.layers.push_back(make_conv2d("conv1", 1, 6, 5, 1, 0));             // 6x10x10
  m.layers.push_back(make_act("relu1", LayerKind::ReLU));
  m.layers.push_back(make_pool("pool1", LayerKind::MaxPool2d, 2, 2));  // 6x5x5
  m.layers.push_back(make_conv2d("conv2", 6, 12, 3, 1, 0));            // 12x3x3
  m.layers.push_back(make_act("relu2", LayerKind::ReLU));
  m.layers.push_back(make_flatten("flat"));                            // 108
  m.layers.push_back(make_linear("fc1", 108, 48));
  m.layers.push_back(make_act("relu3", LayerKind::ReLU));
  m.layers.push_back(make_linear("fc2", 48, 10));
  for (Layer& l : m.layers) {
    if (l.kind == LayerKind::Conv2d)
      init_fan_in(l.weight, l.weight.dim(1) * l.weight.dim(2) * l.weight.dim(3), rng);
    if (l.kind == LayerKind::Linear) init_fan_in(l.weight, l.weight.dim(0), rng);
  }
  m.validate();
  return m;
}

Model build_micro_linear(uint64_t seed) {
  // pooled front end keeps the lowering fully unrolled: few registers, no
  // branches, register fault space well under 512 specs
  Rng rng(seed);
  Model m;
  m.meta.name = "micro-linear";
  m.meta.input_shape = {1, 28, 28};
  m.meta.class_count = 10;
  m.layers.push_back(make_pool("pool0", LayerKind::AvgPool2d, 2, 2));  // 1x14x14
  m.layers.push_back(make_flatten("flat"));                            // 196
  m.layers.push_back(make_linear("fc", 196, 10));
  init_fan_in(m.layers[2].weight, 196, rng);
  m.validate();
  return m;
}

Model build_micro_conv(uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.meta.name = "micro-conv";
  m.meta.input_shape = {1, 28, 28};
  m.meta.class_count = 10;
  m.layers.push_back(make_pool("pool0", LayerKind::AvgPool2d, 4, 4));  // 1x7x7
  m.layers.push_back(make_conv2d("conv1", 1, 4, 3, 1, 0));             // 4x5x5
  m.layers.push_back(make_act("relu1", LayerKind::ReLU));
  m.layers.push_back(make_flatten("flat"));                            // 100
  m.layers.push_back(make_linear("fc", 100, 10));
  init_fan_in(m.layers[1].weight, 9, rng);
  init_fan_in(m.layers[4].weight, 100, rng);
  m.validate();
  return m;
}

Model build_resnet_mini(uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.meta.name = "resnet-mini";
  m.meta.input_shape = {1, 28, 28};
  m.meta.class_count = 10;
  m.layers.push_back(make_conv2d("conv0", 1, 8, 3, 1, 1));   // 0: 8x28x28
  m.layers.push_back(make_bn_folded("bn0", 8));              // 1
  m.layers.push_back(make_act("relu0", LayerKind::ReLU));    // 2
  m.layers.push_back(make_pool("pool0", LayerKind::MaxPool2d, 2, 2));  // 3: 8x14x14
  m.layers.push_back(make_conv2d("conv1", 8, 8, 3, 1, 1));   // 4
  m.layers.push_back(make_bn_folded("bn1", 8));              // 5
  m.layers.push_back(make_act("relu1", LayerKind::ReLU));    // 6
  m.layers.push_back(make_conv2d("conv2", 8, 8, 3, 1, 1));   // 7
  m.layers.push_back(make_bn_folded("bn2", 8));              // 8
  m.layers.push_back(make_residual_add("res0", 3));          // 9: adds pool0 output
  m.layers.push_back(make_act("relu2", LayerKind::ReLU));    // 10
  m.layers.push_back(make_pool("pool1", LayerKind::MaxPool2d, 2, 2));  // 11: 8x7x7
  m.layers.push_back(make_flatten("flat"));                  // 12: 392
  m.layers.push_back(make_linear("fc", 392, 10));            // 13
  for (Layer& l : m.layers) {
    if (l.kind == LayerKind::Conv2d)
      init_fan_in(l.weight, l.weight.dim(1) * l.weight.dim(2) * l.weight.dim(3), rng);
    if (l.kind == LayerKind::Linear) init_fan_in(l.weight, l.weight.dim(0), rng);
  }
  m.validate();
  return m;
}

Model build_dwnet_mini(uint64_t seed) {
  Rng rng(seed);
  Model m;
  m.meta.name = "dwnet-mini";
  m.meta.input_shape = {1, 28, 28};
  m.meta.class_count = 10;
  m.layers.push_back(make_conv2d("conv0", 1, 8, 3, 2, 1));   // 8x14x14
  m.layers.push_back(make_act("relu6_0", LayerKind::ReLU6));
  m.layers.push_back(make_conv2d("pw1", 8, 16, 1, 1, 0));    // pointwise, 16x14x14
  m.layers.push_back(make_act("relu6_1", LayerKind::ReLU6));
  m.layers.push_back(make_pool("pool0", LayerKind::MaxPool2d, 2, 2));  // 16x7x7
  m.layers.push_back(make_conv2d("pw2", 16, 16, 1, 1, 0));
  m.layers.push_back(make_act("relu6_2", LayerKind::ReLU6));
  m.layers.push_back(make_pool("gap", LayerKind::AvgPool2d, 7, 7));    // 16x1x1
  m.layers.push_back(make_flatten("flat"));
  m.layers.push_back(make_linear("fc", 16, 10));
  for (Layer& l : m.layers) {
    if (l.kind == LayerKind::Conv2d)
      init_fan_in(l.weight, l.weight.dim(1) * l.weight.dim(2) * l.weight.dim(3), rng);
    if (l.kind == LayerKind::Linear) init_fan_in(l.weight, l.weight.dim(0), rng);
  }
  m.validate();
  return m;
}

Model build_model(const std::string& arch, uint64_t seed) {
  if (arch == "lenet-desk") return build_lenet_desk(seed);
  if (arch == "micro-linear") return build_micro_linear(seed);
  if (arch == "micro-conv") return build_micro_conv(seed);
  if (arch == "resnet-mini") return build_resnet_mini(seed);
  if (arch == "dwnet-mini") return build_dwnet_mini(seed);
  fail(Err::BadArgument, "unknown architecture: " + arch);
}

}  // namespace fsnn
