#include <cmath>
#include <limits>

#include "fsnn/kernels.hpp"

// Scalar reference kernels. These define the numeric contract; the AVX2
// variants and the ISA lowering are checked against them bit for bit.

namespace fsnn::kern {
namespace scalar {

void conv2d(float* out, const float* in, const float* w, const float* bias,
            const Conv2dDims& d) {
  const uint32_t oh = d.out_h(), ow = d.out_w();
  const int ih = static_cast<int>(d.in_h), iw = static_cast<int>(d.in_w);
  size_t oidx = 0;
  for (uint32_t oc = 0; oc < d.out_c; ++oc) {
    const float* wc = w + static_cast<size_t>(oc) * d.in_c * d.kh * d.kw;
    for (uint32_t oy = 0; oy < oh; ++oy) {
      for (uint32_t ox = 0; ox < ow; ++ox) {
        float acc = bias[oc];
        const int iy0 = static_cast<int>(oy * d.stride) - static_cast<int>(d.pad);
        const int ix0 = static_cast<int>(ox * d.stride) - static_cast<int>(d.pad);
        size_t widx = 0;
        for (uint32_t ic = 0; ic < d.in_c; ++ic) {
          const float* plane = in + static_cast<size_t>(ic) * d.in_h * d.in_w;
          for (uint32_t ky = 0; ky < d.kh; ++ky) {
            const int iy = iy0 + static_cast<int>(ky);
            for (uint32_t kx = 0; kx < d.kw; ++kx) {
              const int ix = ix0 + static_cast<int>(kx);
              const bool inside = iy >= 0 && iy < ih && ix >= 0 && ix < iw;
              const float v = inside ? plane[static_cast<size_t>(iy) * iw + ix] : 0.0f;
              acc = std::fmaf(v, wc[widx], acc);
              ++widx;
            }
          }
        }
        out[oidx++] = acc;
      }
    }
  }
}

void linear(float* out, const float* in, const float* w, const float* bias,
            uint32_t in_n, uint32_t out_n) {
  for (uint32_t o = 0; o < out_n; ++o) {
    float acc = bias[o];
    for (uint32_t i = 0; i < in_n; ++i) {
      acc = std::fmaf(in[i], w[static_cast<size_t>(i) * out_n + o], acc);
    }
    out[o] = acc;
  }
}

void clamp(float* out, const float* in, size_t n, float lo, float hi) {
  for (size_t i = 0; i < n; ++i) {
    float v = in[i];
    v = v > lo ? v : lo;  // NaN -> lo
    v = v < hi ? v : hi;
    out[i] = v;
  }
}

void add(float* out, const float* a, const float* b, size_t n) {
  for (size_t i = 0; i < n; ++i) out[i] = a[i] + b[i];
}

void affine_channel(float* out, const float* in, const float* scale, const float* shift,
                    uint32_t c, size_t plane) {
  size_t idx = 0;
  for (uint32_t ch = 0; ch < c; ++ch) {
    const float s = scale[ch], b = shift[ch];
    for (size_t i = 0; i < plane; ++i, ++idx) {
      out[idx] = std::fmaf(in[idx], s, b);
    }
  }
}

void maxpool2d(float* out, const float* in, uint32_t c, uint32_t h, uint32_t w,
               uint32_t k, uint32_t s) {
  const uint32_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  size_t oidx = 0;
  for (uint32_t ch = 0; ch < c; ++ch) {
    const float* plane = in + static_cast<size_t>(ch) * h * w;
    for (uint32_t oy = 0; oy < oh; ++oy) {
      for (uint32_t ox = 0; ox < ow; ++ox) {
        float acc = -std::numeric_limits<float>::infinity();
        for (uint32_t ky = 0; ky < k; ++ky) {
          const float* row = plane + static_cast<size_t>(oy * s + ky) * w + ox * s;
          for (uint32_t kx = 0; kx < k; ++kx) {
            const float v = row[kx];
            acc = acc > v ? acc : v;
          }
        }
        out[oidx++] = acc;
      }
    }
  }
}

void avgpool2d(float* out, const float* in, uint32_t c, uint32_t h, uint32_t w,
               uint32_t k, uint32_t s) {
  const uint32_t oh = (h - k) / s + 1, ow = (w - k) / s + 1;
  const float inv_area = 1.0f / static_cast<float>(k * k);
  size_t oidx = 0;
  for (uint32_t ch = 0; ch < c; ++ch) {
    const float* plane = in + static_cast<size_t>(ch) * h * w;
    for (uint32_t oy = 0; oy < oh; ++oy) {
      for (uint32_t ox = 0; ox < ow; ++ox) {
        float acc = 0.0f;
        for (uint32_t ky = 0; ky < k; ++ky) {
          const float* row = plane + static_cast<size_t>(oy * s + ky) * w + ox * s;
          for (uint32_t kx = 0; kx < k; ++kx) acc = acc + row[kx];
        }
        out[oidx++] = acc * inv_area;
      }
    }
  }
}

}  // namespace scalar

const KernelTable& scalar_table() {
  static const KernelTable t = {
      scalar::conv2d, scalar::linear,    scalar::clamp,    scalar::add,
      scalar::affine_channel, scalar::maxpool2d, scalar::avgpool2d, "scalar",
  };
  return t;
}

}  // namespace fsnn::kern
