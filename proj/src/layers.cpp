#include "fsnn/layers.hpp"

#include <sstream>

namespace fsnn {

const char* layer_kind_name(LayerKind k) {
  switch (k) {
    case LayerKind::Conv2d: return "Conv2d";
    case LayerKind::Linear: return "Linear";
    case LayerKind::BatchNorm2dFolded: return "BatchNorm2dFolded";
    case LayerKind::ReLU: return "ReLU";
    case LayerKind::ReLU6: return "ReLU6";
    case LayerKind::ClippedReLU: return "ClippedReLU";
    case LayerKind::RangeRestrict: return "RangeRestrict";
    case LayerKind::MaxPool2d: return "MaxPool2d";
    case LayerKind::AvgPool2d: return "AvgPool2d";
    case LayerKind::Flatten: return "Flatten";
    case LayerKind::ResidualAdd: return "ResidualAdd";
  }
  return "?";
}

static void shape_fail(const Layer& l, const std::string& why) {
  std::ostringstream os;
  os << "layer '" << l.name << "' (" << layer_kind_name(l.kind) << "): " << why;
  fail(Err::ShapeMismatch, os.str());
}

std::vector<uint32_t> layer_out_shape(const Layer& l, const std::vector<uint32_t>& in,
                                      const std::vector<std::vector<uint32_t>>& earlier,
                                      const std::vector<uint32_t>& model_in) {
  switch (l.kind) {
    case LayerKind::Conv2d: {
      if (in.size() != 3) shape_fail(l, "expects C x H x W input, got rank " + std::to_string(in.size()));
      if (l.weight.rank() != 4) shape_fail(l, "weight must be OC x IC x KH x KW");
      const uint32_t oc = l.weight.dim(0), ic = l.weight.dim(1), kh = l.weight.dim(2),
                     kw = l.weight.dim(3);
      if (ic != in[0]) shape_fail(l, "in channels mismatch");
      if (l.bias.numel() != oc) shape_fail(l, "bias size != out channels");
      const uint32_t h = in[1] + 2 * l.pad, w = in[2] + 2 * l.pad;
      if (h < kh || w < kw) shape_fail(l, "kernel larger than padded input");
      if (l.stride == 0) shape_fail(l, "stride must be >= 1");
      return {oc, (h - kh) / l.stride + 1, (w - kw) / l.stride + 1};
    }
    case LayerKind::Linear: {
      if (in.size() != 1) shape_fail(l, "expects flat input (insert Flatten)");
      if (l.weight.rank() != 2) shape_fail(l, "weight must be I x O");
      if (l.weight.dim(0) != in[0]) shape_fail(l, "in features mismatch");
      if (l.bias.numel() != l.weight.dim(1)) shape_fail(l, "bias size != out features");
      return {l.weight.dim(1)};
    }
    case LayerKind::BatchNorm2dFolded: {
      if (in.size() != 3) shape_fail(l, "expects C x H x W input");
      if (l.weight.numel() != in[0] || l.bias.numel() != in[0])
        shape_fail(l, "scale/shift size != channels");
      return in;
    }
    case LayerKind::ReLU:
    case LayerKind::ReLU6:
      return in;
    case LayerKind::ClippedReLU:
      if (!(l.tau > 0.0f)) shape_fail(l, "tau must be > 0");
      return in;
    case LayerKind::RangeRestrict:
      if (!(l.lo <= l.hi)) shape_fail(l, "requires lo <= hi");
      return in;
    case LayerKind::MaxPool2d:
    case LayerKind::AvgPool2d: {
      if (in.size() != 3) shape_fail(l, "expects C x H x W input");
      if (l.k == 0 || l.s == 0) shape_fail(l, "window and stride must be >= 1");
      if (in[1] < l.k || in[2] < l.k) shape_fail(l, "window larger than input");
      return {in[0], (in[1] - l.k) / l.s + 1, (in[2] - l.k) / l.s + 1};
    }
    case LayerKind::Flatten: {
      uint32_t n = 1;
      for (uint32_t d : in) n *= d;
      return {n};
    }
    case LayerKind::ResidualAdd: {
      const std::vector<uint32_t>* srcs = nullptr;
      if (l.src == -1) {
        srcs = &model_in;
      } else if (l.src >= 0 && static_cast<size_t>(l.src) < earlier.size()) {
        srcs = &earlier[static_cast<size_t>(l.src)];
      } else {
        shape_fail(l, "src index out of range");
      }
      if (*srcs != in) shape_fail(l, "residual source shape != input shape");
      return in;
    }
  }
  shape_fail(l, "unknown kind");
  return {};
}

Layer make_conv2d(std::string name, uint32_t in_c, uint32_t out_c, uint32_t k, uint32_t stride,
                  uint32_t pad) {
  Layer l;
  l.kind = LayerKind::Conv2d;
  l.name = std::move(name);
  l.weight = Tensor({out_c, in_c, k, k});
  l.bias = Tensor({out_c});
  l.stride = stride;
  l.pad = pad;
  return l;
}

Layer make_linear(std::string name, uint32_t in_n, uint32_t out_n) {
  Layer l;
  l.kind = LayerKind::Linear;
  l.name = std::move(name);
  l.weight = Tensor({in_n, out_n});
  l.bias = Tensor({out_n});
  return l;
}

Layer make_bn_folded(std::string name, uint32_t c) {
  Layer l;
  l.kind = LayerKind::BatchNorm2dFolded;
  l.name = std::move(name);
  l.weight = Tensor({c});
  l.bias = Tensor({c});
  for (uint32_t i = 0; i < c; ++i) l.weight.data[i] = 1.0f;
  return l;
}

Layer make_act(std::string name, LayerKind kind) {
  Layer l;
  l.kind = kind;
  l.name = std::move(name);
  return l;
}

Layer make_clipped_relu(std::string name, float tau) {
  Layer l;
  l.kind = LayerKind::ClippedReLU;
  l.name = std::move(name);
  l.tau = tau;
  return l;
}

Layer make_range_restrict(std::string name, float lo, float hi) {
  Layer l;
  l.kind = LayerKind::RangeRestrict;
  l.name = std::move(name);
  l.lo = lo;
  l.hi = hi;
  return l;
}

Layer make_pool(std::string name, LayerKind kind, uint32_t k, uint32_t s) {
  Layer l;
  l.kind = kind;
  l.name = std::move(name);
  l.k = k;
  l.s = s;
  return l;
}

Layer make_flatten(std::string name) {
  Layer l;
  l.kind = LayerKind::Flatten;
  l.name = std::move(name);
  return l;
}

Layer make_residual_add(std::string name, int32_t src) {
  Layer l;
  l.kind = LayerKind::ResidualAdd;
  l.name = std::move(name);
  l.src = src;
  return l;
}

}  // namespace fsnn
