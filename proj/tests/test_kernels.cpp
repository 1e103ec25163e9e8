#include <doctest.h>

#include <cmath>
#include <cstring>
#include <limits>
#include <vector>

#include "fsnn/kernels.hpp"
#include "fsnn/rng.hpp"

using namespace fsnn;

namespace {

// Independent conv oracle for the documented contract: taps in (ic,ky,kx)
// ascending order, fmaf per tap, out-of-range taps fma'd as literal zeros.
// Written directly from the contract, not from the kernel code.
std::vector<float> naive_conv(const std::vector<float>& in, const std::vector<float>& w,
                              const std::vector<float>& bias, const kern::Conv2dDims& d) {
  const int oh = static_cast<int>(d.out_h()), ow = static_cast<int>(d.out_w());
  std::vector<float> out(static_cast<size_t>(d.out_c) * oh * ow);
  size_t o = 0;
  for (int oc = 0; oc < static_cast<int>(d.out_c); ++oc)
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        float acc = bias[oc];
        for (int ic = 0; ic < static_cast<int>(d.in_c); ++ic)
          for (int ky = 0; ky < static_cast<int>(d.kh); ++ky)
            for (int kx = 0; kx < static_cast<int>(d.kw); ++kx) {
              const int iy = oy * static_cast<int>(d.stride) + ky - static_cast<int>(d.pad);
              const int ix = ox * static_cast<int>(d.stride) + kx - static_cast<int>(d.pad);
              float v = 0.0f;
              if (iy >= 0 && iy < static_cast<int>(d.in_h) && ix >= 0 &&
                  ix < static_cast<int>(d.in_w))
                v = in[(static_cast<size_t>(ic) * d.in_h + iy) * d.in_w + ix];
              const float wv =
                  w[((static_cast<size_t>(oc) * d.in_c + ic) * d.kh + ky) * d.kw + kx];
              acc = std::fmaf(v, wv, acc);
            }
        out[o++] = acc;
      }
  return out;
}

std::vector<float> random_vec(Rng& rng, size_t n, bool with_specials = false) {
  std::vector<float> v(n);
  for (auto& x : v) {
    x = static_cast<float>(rng.uniform(-2.0, 2.0));
    if (with_specials) {
      const uint64_t r = rng.below(50);
      if (r == 0) x = std::numeric_limits<float>::quiet_NaN();
      if (r == 1) x = std::numeric_limits<float>::infinity();
      if (r == 2) x = -std::numeric_limits<float>::infinity();
      if (r == 3) x = -0.0f;
    }
  }
  return v;
}

bool bits_equal(const std::vector<float>& a, const std::vector<float>& b) {
  return a.size() == b.size() &&
         std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0;
}

}  // namespace

TEST_CASE("scalar conv2d matches the independent contract oracle") {
  Rng rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    kern::Conv2dDims d;
    d.in_c = 1 + static_cast<uint32_t>(rng.below(4));
    d.in_h = 4 + static_cast<uint32_t>(rng.below(8));
    d.in_w = 4 + static_cast<uint32_t>(rng.below(8));
    d.out_c = 1 + static_cast<uint32_t>(rng.below(5));
    d.kh = d.kw = 1 + 2 * static_cast<uint32_t>(rng.below(3));  // 1,3,5
    d.stride = 1 + static_cast<uint32_t>(rng.below(2));
    d.pad = static_cast<uint32_t>(rng.below(3));
    if (d.in_h + 2 * d.pad < d.kh || d.in_w + 2 * d.pad < d.kw) continue;
    auto in = random_vec(rng, static_cast<size_t>(d.in_c) * d.in_h * d.in_w);
    auto w = random_vec(rng, static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw);
    auto bias = random_vec(rng, d.out_c);
    std::vector<float> out(static_cast<size_t>(d.out_c) * d.out_h() * d.out_w());
    kern::scalar_table().conv2d(out.data(), in.data(), w.data(), bias.data(), d);
    CHECK(bits_equal(out, naive_conv(in, w, bias, d)));
  }
}

TEST_CASE("avx2 kernels are bit-identical to scalar" *
          doctest::skip(!kern::backend_available(kern::Backend::Avx2))) {
  const auto& S = kern::scalar_table();
  const auto& V = kern::avx2_table();
  Rng rng(23);

  SUBCASE("conv2d over random shapes, strides and pads") {
    for (int trial = 0; trial < 40; ++trial) {
      kern::Conv2dDims d;
      d.in_c = 1 + static_cast<uint32_t>(rng.below(4));
      d.in_h = 5 + static_cast<uint32_t>(rng.below(20));
      d.in_w = 5 + static_cast<uint32_t>(rng.below(20));
      d.out_c = 1 + static_cast<uint32_t>(rng.below(8));
      d.kh = d.kw = 1 + 2 * static_cast<uint32_t>(rng.below(3));
      d.stride = 1 + static_cast<uint32_t>(rng.below(2));
      d.pad = static_cast<uint32_t>(rng.below(3));
      if (d.in_h + 2 * d.pad < d.kh || d.in_w + 2 * d.pad < d.kw) continue;
      auto in = random_vec(rng, static_cast<size_t>(d.in_c) * d.in_h * d.in_w, true);
      auto w = random_vec(rng, static_cast<size_t>(d.out_c) * d.in_c * d.kh * d.kw);
      auto bias = random_vec(rng, d.out_c);
      std::vector<float> a(static_cast<size_t>(d.out_c) * d.out_h() * d.out_w()), b = a;
      S.conv2d(a.data(), in.data(), w.data(), bias.data(), d);
      V.conv2d(b.data(), in.data(), w.data(), bias.data(), d);
      CHECK(bits_equal(a, b));
    }
  }

  SUBCASE("linear over odd sizes") {
    for (int trial = 0; trial < 40; ++trial) {
      const uint32_t in_n = 1 + static_cast<uint32_t>(rng.below(130));
      const uint32_t out_n = 1 + static_cast<uint32_t>(rng.below(70));
      auto in = random_vec(rng, in_n, true);
      auto w = random_vec(rng, static_cast<size_t>(in_n) * out_n);
      auto bias = random_vec(rng, out_n);
      std::vector<float> a(out_n), b(out_n);
      S.linear(a.data(), in.data(), w.data(), bias.data(), in_n, out_n);
      V.linear(b.data(), in.data(), w.data(), bias.data(), in_n, out_n);
      CHECK(bits_equal(a, b));
    }
  }

  SUBCASE("clamp including NaN/Inf payloads") {
    for (int trial = 0; trial < 40; ++trial) {
      const size_t n = 1 + rng.below(200);
      auto in = random_vec(rng, n, true);
      const float lo = trial % 2 ? 0.0f : -0.5f;
      const float hi = trial % 3 ? 6.0f : std::numeric_limits<float>::infinity();
      std::vector<float> a(n), b(n);
      S.clamp(a.data(), in.data(), n, lo, hi);
      V.clamp(b.data(), in.data(), n, lo, hi);
      CHECK(bits_equal(a, b));
    }
  }

  SUBCASE("add and affine_channel") {
    for (int trial = 0; trial < 20; ++trial) {
      const uint32_t c = 1 + static_cast<uint32_t>(rng.below(8));
      const size_t plane = 1 + rng.below(100);
      auto x = random_vec(rng, c * plane, true);
      auto y = random_vec(rng, c * plane, true);
      auto sc = random_vec(rng, c);
      auto sh = random_vec(rng, c);
      std::vector<float> a(c * plane), b(c * plane);
      S.add(a.data(), x.data(), y.data(), x.size());
      V.add(b.data(), x.data(), y.data(), x.size());
      CHECK(bits_equal(a, b));
      S.affine_channel(a.data(), x.data(), sc.data(), sh.data(), c, plane);
      V.affine_channel(b.data(), x.data(), sc.data(), sh.data(), c, plane);
      CHECK(bits_equal(a, b));
    }
  }
}

TEST_CASE("clamp NaN semantics: NaN lands on the lower bound") {
  const float nan = std::numeric_limits<float>::quiet_NaN();
  float in[3] = {nan, -1.0f, 7.0f};
  float out[3];
  kern::scalar_table().clamp(out, in, 3, 0.0f, 6.0f);
  CHECK(out[0] == 0.0f);
  CHECK(out[1] == 0.0f);
  CHECK(out[2] == 6.0f);
}

TEST_CASE("pool kernels: window reductions") {
  const float in[16] = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15, 16};
  float mx[4], av[4];
  kern::scalar_table().maxpool2d(mx, in, 1, 4, 4, 2, 2);
  kern::scalar_table().avgpool2d(av, in, 1, 4, 4, 2, 2);
  CHECK(mx[0] == 6.0f);
  CHECK(mx[3] == 16.0f);
  CHECK(av[0] == doctest::Approx(3.5f));
  CHECK(av[3] == doctest::Approx(13.5f));
}

TEST_CASE("backend dispatch responds to select()") {
  const auto prev = kern::active_backend();
  kern::select(kern::Backend::Scalar);
  CHECK(std::string(kern::active().name) == "scalar");
  if (kern::backend_available(kern::Backend::Avx2)) {
    kern::select(kern::Backend::Avx2);
    CHECK(std::string(kern::active().name) == "avx2");
  }
  kern::select(prev);
}
