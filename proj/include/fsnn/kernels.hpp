#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

// Forward-path arithmetic kernels: one scalar reference implementation and
// SIMD variants selected at runtime. Every variant must be bit-identical to
// the scalar reference (enforced by tests); the ISA lowering reproduces the
// same sequences instruction by instruction, which is what makes golden
// cross-checking between the app-level engine and the register VM exact.
//
// Canonical accumulation orders (normative for all backends and the VM):
//   linear:  out[o] = fma(x[I-1], w[(I-1)*O+o], ... fma(x[0], w[o], bias[o]))
//            i ascending, weights input-major [I][O], fmaf per tap.
//   conv2d:  out[oc][oy][ox] starts at bias[oc]; taps in (ic, ky, kx)
//            ascending order, fmaf per tap. Out-of-range taps contribute a
//            literal 0.0f operand (virtual zero padding) and are still fma'd.
//   clamp:   y = x > lo ? x : lo; y = y < hi ? y : hi.  NaN inputs land on
//            lo (matches x86 MAXPS/MINPS second-operand rule and the VM's
//            MAX/MIN). ReLU/ReLU6/ClippedReLU/RangeRestrict are all this
//            kernel with different bounds.
//   maxpool: acc = -inf; acc = acc > v ? acc : v over (ky, kx) ascending.
//   avgpool: sum over (ky, kx) ascending with plain adds, then one multiply
//            by the FP32 constant 1.0f/(kh*kw).
//   affine:  out = fma(x, scale[c], shift[c])   (folded batchnorm)
//   add:     out = a + b
namespace fsnn::kern {

struct Conv2dDims {
  uint32_t in_c, in_h, in_w;
  uint32_t out_c, kh, kw;
  uint32_t stride, pad;
  uint32_t out_h() const { return (in_h + 2 * pad - kh) / stride + 1; }
  uint32_t out_w() const { return (in_w + 2 * pad - kw) / stride + 1; }
};

struct KernelTable {
  void (*conv2d)(float* out, const float* in, const float* w, const float* bias,
                 const Conv2dDims& d);
  void (*linear)(float* out, const float* in, const float* w, const float* bias,
                 uint32_t in_n, uint32_t out_n);
  void (*clamp)(float* out, const float* in, size_t n, float lo, float hi);
  void (*add)(float* out, const float* a, const float* b, size_t n);
  void (*affine_channel)(float* out, const float* in, const float* scale, const float* shift,
                         uint32_t c, size_t plane);
  void (*maxpool2d)(float* out, const float* in, uint32_t c, uint32_t h, uint32_t w,
                    uint32_t k, uint32_t s);
  void (*avgpool2d)(float* out, const float* in, uint32_t c, uint32_t h, uint32_t w,
                    uint32_t k, uint32_t s);
  const char* name;
};

enum class Backend { Scalar, Avx2 };

const KernelTable& scalar_table();
#if defined(__x86_64__) || defined(_M_X64)
const KernelTable& avx2_table();
#endif

bool backend_available(Backend b);

// Process-wide selection. Defaults to the best available backend; the
// FSNN_KERNELS environment variable ("scalar"/"avx2") or an explicit
// select() overrides it. Not thread-safe against concurrent select(),
// which only tests do.
const KernelTable& active();
void select(Backend b);
Backend active_backend();
std::string backend_name(Backend b);

}  // namespace fsnn::kern
