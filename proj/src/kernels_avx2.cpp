#if defined(__x86_64__) || defined(_M_X64)

#include <immintrin.h>

#include <cmath>

#include "fsnn/kernels.hpp"

// AVX2/FMA variants. Vectorization is always across independent outputs so
// each output keeps the scalar reference's accumulation sequence exactly:
// _mm256_fmadd_ps and std::fmaf are both single-rounded, and MAXPS/MINPS
// with the value in the first operand slot match the `v > lo ? v : lo`
// scalar form (NaN falls through to the second operand). Remainders run the
// scalar loop, which is bit-identical per element by construction.

namespace fsnn::kern {

namespace scalar {
void conv2d(float*, const float*, const float*, const float*, const Conv2dDims&);
void linear(float*, const float*, const float*, const float*, uint32_t, uint32_t);
void maxpool2d(float*, const float*, uint32_t, uint32_t, uint32_t, uint32_t, uint32_t);
void avgpool2d(float*, const float*, uint32_t, uint32_t, uint32_t, uint32_t, uint32_t);
}  // namespace scalar

namespace avx2 {

__attribute__((target("avx2,fma"))) static void conv2d_row_group(
    float* out, const float* in, const float* wc, float bias, const Conv2dDims& d,
    int iy0, int ix0) {
  // 8 consecutive ox outputs, all taps in-bounds, stride 1.
  __m256 acc = _mm256_set1_ps(bias);
  const float* wp = wc;
  for (uint32_t ic = 0; ic < d.in_c; ++ic) {
    const float* plane = in + static_cast<size_t>(ic) * d.in_h * d.in_w;
    for (uint32_t ky = 0; ky < d.kh; ++ky) {
      const float* row = plane + static_cast<size_t>(iy0 + ky) * d.in_w + ix0;
      for (uint32_t kx = 0; kx < d.kw; ++kx) {
        const __m256 iv = _mm256_loadu_ps(row + kx);
        const __m256 wv = _mm256_set1_ps(*wp++);
        acc = _mm256_fmadd_ps(iv, wv, acc);
      }
    }
  }
  _mm256_storeu_ps(out, acc);
}

static void conv2d_one(float* out, const float* in, const float* wc, float bias,
                       const Conv2dDims& d, uint32_t oy, uint32_t ox) {
  const int ih = static_cast<int>(d.in_h), iw = static_cast<int>(d.in_w);
  const int iy0 = static_cast<int>(oy * d.stride) - static_cast<int>(d.pad);
  const int ix0 = static_cast<int>(ox * d.stride) - static_cast<int>(d.pad);
  float acc = bias;
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
  out[static_cast<size_t>(oy) * d.out_w() + ox] = acc;
}

__attribute__((target("avx2,fma"))) void conv2d(float* out, const float* in, const float* w,
                                                const float* bias, const Conv2dDims& d) {
  const uint32_t oh = d.out_h(), ow = d.out_w();
  if (d.stride != 1) {
    scalar::conv2d(out, in, w, bias, d);
    return;
  }
  for (uint32_t oc = 0; oc < d.out_c; ++oc) {
    const float* wc = w + static_cast<size_t>(oc) * d.in_c * d.kh * d.kw;
    float* oplane = out + static_cast<size_t>(oc) * oh * ow;
    for (uint32_t oy = 0; oy < oh; ++oy) {
      const int iy0 = static_cast<int>(oy) - static_cast<int>(d.pad);
      const bool rows_ok = iy0 >= 0 && iy0 + static_cast<int>(d.kh) <= static_cast<int>(d.in_h);
      uint32_t ox = 0;
      if (rows_ok) {
        for (; ox + 8 <= ow; ox += 8) {
          const int ix0 = static_cast<int>(ox) - static_cast<int>(d.pad);
          // last lane's last tap: ix0 + 7 + kw - 1
          if (ix0 < 0 || ix0 + 7 + static_cast<int>(d.kw) > static_cast<int>(d.in_w)) break;
          conv2d_row_group(oplane + static_cast<size_t>(oy) * ow + ox, in, wc, bias[oc], d,
                           iy0, ix0);
        }
      }
      for (; ox < ow; ++ox) conv2d_one(oplane, in, wc, bias[oc], d, oy, ox);
    }
  }
}

__attribute__((target("avx2,fma"))) void linear(float* out, const float* in, const float* w,
                                                const float* bias, uint32_t in_n,
                                                uint32_t out_n) {
  uint32_t o = 0;
  for (; o + 8 <= out_n; o += 8) {
    __m256 acc = _mm256_loadu_ps(bias + o);
    for (uint32_t i = 0; i < in_n; ++i) {
      const __m256 xv = _mm256_set1_ps(in[i]);
      const __m256 wv = _mm256_loadu_ps(w + static_cast<size_t>(i) * out_n + o);
      acc = _mm256_fmadd_ps(xv, wv, acc);
    }
    _mm256_storeu_ps(out + o, acc);
  }
  for (; o < out_n; ++o) {
    float acc = bias[o];
    for (uint32_t i = 0; i < in_n; ++i) {
      acc = std::fmaf(in[i], w[static_cast<size_t>(i) * out_n + o], acc);
    }
    out[o] = acc;
  }
}

__attribute__((target("avx2"))) void clamp(float* out, const float* in, size_t n, float lo,
                                           float hi) {
  const __m256 lov = _mm256_set1_ps(lo);
  const __m256 hiv = _mm256_set1_ps(hi);
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    __m256 v = _mm256_loadu_ps(in + i);
    v = _mm256_max_ps(v, lov);
    v = _mm256_min_ps(v, hiv);
    _mm256_storeu_ps(out + i, v);
  }
  for (; i < n; ++i) {
    float v = in[i];
    v = v > lo ? v : lo;
    v = v < hi ? v : hi;
    out[i] = v;
  }
}

__attribute__((target("avx2"))) void add(float* out, const float* a, const float* b, size_t n) {
  size_t i = 0;
  for (; i + 8 <= n; i += 8) {
    _mm256_storeu_ps(out + i, _mm256_add_ps(_mm256_loadu_ps(a + i), _mm256_loadu_ps(b + i)));
  }
  for (; i < n; ++i) out[i] = a[i] + b[i];
}

__attribute__((target("avx2,fma"))) void affine_channel(float* out, const float* in,
                                                        const float* scale, const float* shift,
                                                        uint32_t c, size_t plane) {
  size_t idx = 0;
  for (uint32_t ch = 0; ch < c; ++ch) {
    const __m256 sv = _mm256_set1_ps(scale[ch]);
    const __m256 bv = _mm256_set1_ps(shift[ch]);
    size_t i = 0;
    for (; i + 8 <= plane; i += 8) {
      _mm256_storeu_ps(out + idx + i,
                       _mm256_fmadd_ps(_mm256_loadu_ps(in + idx + i), sv, bv));
    }
    for (; i < plane; ++i) out[idx + i] = std::fmaf(in[idx + i], scale[ch], shift[ch]);
    idx += plane;
  }
}

}  // namespace avx2

const KernelTable& avx2_table() {
  // Pool windows are stride-gathered and a rounding-free few percent of the
  // profile; they stay on the scalar path.
  static const KernelTable t = {
      avx2::conv2d, avx2::linear,      avx2::clamp,       avx2::add,
      avx2::affine_channel, scalar::maxpool2d, scalar::avgpool2d, "avx2",
  };
  return t;
}

}  // namespace fsnn::kern

#endif  // x86_64
