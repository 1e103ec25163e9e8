#include <bit>
#include <cmath>
#include <cstring>
#include <limits>

#include "fsnn/isa.hpp"

// Lowering. Every layer body reproduces the kernel contract in kernels.hpp
// instruction by instruction: same tap order, fmaf via FMA, the max/min
// second-operand NaN rule via MAX/MIN. Tap addresses inside one output's
// window are immediate offsets from a window pointer; loops (rolled form)
// advance the window/output pointers and carry SETP/BRA predicates, which
// is the hang path under register faults. Small layers unroll completely
// (immediate addressing off the region base registers, no loops).
//
// Padded convolutions first materialize a zero-padded copy of the input in
// scratch memory and then run the valid-window loop over it; together with
// nn-core's "pad taps are fma'd as literal zeros" convention the tap
// sequences stay identical.

namespace fsnn::isa {

namespace {

constexpr uint32_t kUnrollBudget = 20000;

uint32_t f2b(float v) { return std::bit_cast<uint32_t>(v); }

class Emitter {
public:
  explicit Emitter(Program& p) : p_(p) {}

  int alloc() {
    for (int r = 0; r < static_cast<int>(kNumRegs); ++r) {
      if (!busy_[r]) {
        busy_[r] = true;
        return r;
      }
    }
    fail(Err::UnsupportedLayer, "lowering ran out of registers");
  }
  void release(int r) { busy_[static_cast<size_t>(r)] = false; }
  void reset_layer() { busy_.fill(false); }

  uint32_t pc() const { return static_cast<uint32_t>(p_.code.size()); }

  void op(Opcode o, int rd, int ra = 0, int rb = 0, int32_t imm = 0) {
    p_.code.push_back({o, static_cast<uint8_t>(rd), static_cast<uint8_t>(ra),
                       static_cast<uint8_t>(rb), false, imm});
  }
  void movi_bits(int rd, uint32_t bits) {
    op(Opcode::MOVI, rd, 0, 0, static_cast<int32_t>(bits));
  }
  void ld(int rd, int base, int32_t imm) { op(Opcode::LD, rd, base, 0, imm); }
  void st(int rs, int base, int32_t imm) { op(Opcode::ST, rs, base, 0, imm); }
  // pointer/counter arithmetic: LSU address-generation path, not FP-ADD
  void add_agu(int rd, int ra, int rb) {
    p_.code.push_back({Opcode::ADD, static_cast<uint8_t>(rd), static_cast<uint8_t>(ra),
                       static_cast<uint8_t>(rb), true, 0});
  }
  void movi_f(int rd, float v) { movi_bits(rd, f2b(v)); }
  int const_f(float v) {
    int r = alloc();
    movi_f(r, v);
    return r;
  }
  void patch_imm(uint32_t pc, int32_t imm) { p_.code[pc].imm = imm; }

private:
  Program& p_;
  std::array<bool, kNumRegs> busy_{};
};

// for (ctr = 0; ctr < n; ++ctr) { ...body...; }   counters run in FP32
// (exact below 2^24) and close with ADD/SETP/BRA.
struct Loop {
  Emitter& e;
  int ctr, bound, pred, one;
  uint32_t top;

  Loop(Emitter& em, uint32_t n, int pred_reg, int one_reg)
      : e(em), pred(pred_reg), one(one_reg) {
    ctr = e.alloc();
    bound = e.alloc();
    e.movi_f(ctr, 0.0f);
    e.movi_f(bound, static_cast<float>(n));
    top = e.pc();
  }
  void close() {
    e.add_agu(ctr, ctr, one);
    e.op(Opcode::SETP, pred, ctr, bound, static_cast<int32_t>(Cond::LT));
    e.op(Opcode::BRA, 0, pred, 0, static_cast<int32_t>(top));
    e.release(bound);
    e.release(ctr);
  }
};

struct LayerIo {
  uint32_t in_base;
  uint32_t out_base;
  std::vector<uint32_t> in_shape;
  uint32_t w_addr = 0;  // absolute word address of the weight payload
  uint32_t b_addr = 0;
  uint32_t scratch = 0;  // padded-copy region for this layer (0 = none)
};

struct Lowerer {
  Program& p;
  Emitter e;
  explicit Lowerer(Program& prog) : p(prog), e(prog) {}

  // ---- helpers -------------------------------------------------------

  void pad_copy(const LayerIo& io, uint32_t c, uint32_t h, uint32_t w, uint32_t pad) {
    // zero-fill scratch, then copy each input row into the interior
    const uint32_t hp = h + 2 * pad, wp = w + 2 * pad;
    e.reset_layer();
    const int one = e.const_f(1.0f);
    const int pred = e.alloc();
    {
      const int zero = e.const_f(0.0f);
      const int ptr = e.const_f(static_cast<float>(io.scratch));
      Loop l(e, c * hp * wp, pred, one);
      e.st(zero, ptr, 0);
      e.add_agu(ptr, ptr, one);
      l.close();
      e.release(ptr);
      e.release(zero);
    }
    {
      const int src = e.const_f(static_cast<float>(io.in_base));
      const int dst = e.const_f(static_cast<float>(io.scratch + pad * wp + pad));
      const int f = e.alloc();
      const int rowskip = e.const_f(static_cast<float>(2 * pad));
      const int chanskip = e.const_f(static_cast<float>(2 * pad * wp));
      Loop lc(e, c, pred, one);
      Loop ly(e, h, pred, one);
      Loop lx(e, w, pred, one);
      e.ld(f, src, 0);
      e.st(f, dst, 0);
      e.add_agu(src, src, one);
      e.add_agu(dst, dst, one);
      lx.close();
      e.add_agu(dst, dst, rowskip);
      ly.close();
      e.add_agu(dst, dst, chanskip);
      lc.close();
    }
  }

  // ---- conv2d --------------------------------------------------------

  void conv2d(const LayerIo& io, const Layer& l) {
    uint32_t src = io.in_base;
    uint32_t ih = io.in_shape[1], iw = io.in_shape[2];
    const uint32_t ic = io.in_shape[0];
    if (l.pad > 0) {
      pad_copy(io, ic, ih, iw, l.pad);
      src = io.scratch;
      ih += 2 * l.pad;
      iw += 2 * l.pad;
    }
    const uint32_t oc = l.weight.dim(0), kh = l.weight.dim(2), kw = l.weight.dim(3);
    const uint32_t s = l.stride;
    const uint32_t oh = (ih - kh) / s + 1, ow = (iw - kw) / s + 1;
    const uint32_t taps = ic * kh * kw;

    std::vector<int32_t> in_off(taps);
    {
      uint32_t t = 0;
      for (uint32_t i = 0; i < ic; ++i)
        for (uint32_t ky = 0; ky < kh; ++ky)
          for (uint32_t kx = 0; kx < kw; ++kx)
            in_off[t++] = static_cast<int32_t>(i * ih * iw + ky * iw + kx);
    }

    const uint64_t est = static_cast<uint64_t>(oc) * oh * ow * (3ull * taps + 7);
    e.reset_layer();
    if (est <= kUnrollBudget) {
      const int rin = e.const_f(static_cast<float>(src));
      const int rpar = e.const_f(static_cast<float>(io.w_addr));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int acc = e.alloc(), f = e.alloc(), g = e.alloc();
      const int32_t bias_rel = static_cast<int32_t>(io.b_addr - io.w_addr);
      uint32_t oidx = 0;
      for (uint32_t o = 0; o < oc; ++o) {
        for (uint32_t oy = 0; oy < oh; ++oy) {
          for (uint32_t ox = 0; ox < ow; ++ox, ++oidx) {
            e.ld(acc, rpar, bias_rel + static_cast<int32_t>(o));
            const int32_t win = static_cast<int32_t>(oy * s * iw + ox * s);
            for (uint32_t t = 0; t < taps; ++t) {
              e.ld(f, rin, win + in_off[t]);
              e.ld(g, rpar, static_cast<int32_t>(o * taps + t));
              e.op(Opcode::FMA, acc, f, g);
            }
            e.st(acc, rout, static_cast<int32_t>(oidx));
          }
        }
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int woc = e.const_f(static_cast<float>(io.w_addr));
      const int bp = e.const_f(static_cast<float>(io.b_addr));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int win = e.alloc();
      const int acc = e.alloc(), f = e.alloc(), g = e.alloc();
      const int step_x = s == 1 ? one : e.const_f(static_cast<float>(s));
      const int adj_y = e.const_f(static_cast<float>(s * iw) - static_cast<float>(ow * s));
      const int wstep = e.const_f(static_cast<float>(taps));

      Loop lc(e, oc, pred, one);
      e.movi_f(win, static_cast<float>(src));
      Loop ly(e, oh, pred, one);
      Loop lx(e, ow, pred, one);
      e.ld(acc, bp, 0);
      for (uint32_t t = 0; t < taps; ++t) {
        e.ld(f, win, in_off[t]);
        e.ld(g, woc, static_cast<int32_t>(t));
        e.op(Opcode::FMA, acc, f, g);
      }
      e.st(acc, outp, 0);
      e.add_agu(outp, outp, one);
      e.add_agu(win, win, step_x);
      lx.close();
      e.add_agu(win, win, adj_y);
      ly.close();
      e.add_agu(woc, woc, wstep);
      e.add_agu(bp, bp, one);
      lc.close();
    }
  }

  // ---- linear --------------------------------------------------------

  void linear(const LayerIo& io, const Layer& l) {
    const uint32_t in_n = l.weight.dim(0), out_n = l.weight.dim(1);
    const uint64_t est = static_cast<uint64_t>(out_n) * (3ull * in_n + 5);
    e.reset_layer();
    if (est <= kUnrollBudget) {
      const int rin = e.const_f(static_cast<float>(io.in_base));
      const int rpar = e.const_f(static_cast<float>(io.w_addr));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int acc = e.alloc(), f = e.alloc(), g = e.alloc();
      const int32_t bias_rel = static_cast<int32_t>(io.b_addr - io.w_addr);
      for (uint32_t o = 0; o < out_n; ++o) {
        e.ld(acc, rpar, bias_rel + static_cast<int32_t>(o));
        for (uint32_t i = 0; i < in_n; ++i) {
          e.ld(f, rin, static_cast<int32_t>(i));
          e.ld(g, rpar, static_cast<int32_t>(i * out_n + o));
          e.op(Opcode::FMA, acc, f, g);
        }
        e.st(acc, rout, static_cast<int32_t>(o));
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int rin = e.const_f(static_cast<float>(io.in_base));
      const int wcol = e.const_f(static_cast<float>(io.w_addr));
      const int bp = e.const_f(static_cast<float>(io.b_addr));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int acc = e.alloc(), f = e.alloc(), g = e.alloc();
      Loop lo(e, out_n, pred, one);
      e.ld(acc, bp, 0);
      for (uint32_t i = 0; i < in_n; ++i) {
        e.ld(f, rin, static_cast<int32_t>(i));
        e.ld(g, wcol, static_cast<int32_t>(i * out_n));
        e.op(Opcode::FMA, acc, f, g);
      }
      e.st(acc, outp, 0);
      e.add_agu(outp, outp, one);
      e.add_agu(wcol, wcol, one);
      e.add_agu(bp, bp, one);
      lo.close();
    }
  }

  // ---- elementwise clamp (ReLU / ReLU6 / ClippedReLU / RangeRestrict) -

  void clamp(const LayerIo& io, float lo_v, float hi_v, uint32_t n) {
    e.reset_layer();
    const uint64_t est = 4ull * n;
    if (est <= kUnrollBudget) {
      const int rin = e.const_f(static_cast<float>(io.in_base));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int rlo = e.const_f(lo_v);
      const int rhi = e.const_f(hi_v);
      const int f = e.alloc();
      for (uint32_t i = 0; i < n; ++i) {
        e.ld(f, rin, static_cast<int32_t>(i));
        e.op(Opcode::MAX, f, f, rlo);
        e.op(Opcode::MIN, f, f, rhi);
        e.st(f, rout, static_cast<int32_t>(i));
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int ip = e.const_f(static_cast<float>(io.in_base));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int rlo = e.const_f(lo_v);
      const int rhi = e.const_f(hi_v);
      const int f = e.alloc();
      Loop le(e, n, pred, one);
      e.ld(f, ip, 0);
      e.op(Opcode::MAX, f, f, rlo);
      e.op(Opcode::MIN, f, f, rhi);
      e.st(f, outp, 0);
      e.add_agu(ip, ip, one);
      e.add_agu(outp, outp, one);
      le.close();
    }
  }

  // ---- folded batchnorm ------------------------------------------------

  void bn(const LayerIo& io) {
    const uint32_t c = io.in_shape[0];
    const uint32_t plane = io.in_shape[1] * io.in_shape[2];
    e.reset_layer();
    const uint64_t est = 5ull * c * plane + 2 * c;
    if (est <= kUnrollBudget) {
      const int rin = e.const_f(static_cast<float>(io.in_base));
      const int rpar = e.const_f(static_cast<float>(io.w_addr));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int sc = e.alloc(), sh = e.alloc(), f = e.alloc(), t = e.alloc();
      const int32_t shift_rel = static_cast<int32_t>(io.b_addr - io.w_addr);
      for (uint32_t ch = 0; ch < c; ++ch) {
        e.ld(sc, rpar, static_cast<int32_t>(ch));
        e.ld(sh, rpar, shift_rel + static_cast<int32_t>(ch));
        for (uint32_t i = 0; i < plane; ++i) {
          const int32_t idx = static_cast<int32_t>(ch * plane + i);
          e.ld(f, rin, idx);
          e.op(Opcode::MOV, t, sh);
          e.op(Opcode::FMA, t, f, sc);
          e.st(t, rout, idx);
        }
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int scp = e.const_f(static_cast<float>(io.w_addr));
      const int shp = e.const_f(static_cast<float>(io.b_addr));
      const int ip = e.const_f(static_cast<float>(io.in_base));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int sc = e.alloc(), sh = e.alloc(), f = e.alloc(), t = e.alloc();
      Loop lc(e, c, pred, one);
      e.ld(sc, scp, 0);
      e.ld(sh, shp, 0);
      e.add_agu(scp, scp, one);
      e.add_agu(shp, shp, one);
      Loop le(e, plane, pred, one);
      e.ld(f, ip, 0);
      e.op(Opcode::MOV, t, sh);
      e.op(Opcode::FMA, t, f, sc);
      e.st(t, outp, 0);
      e.add_agu(ip, ip, one);
      e.add_agu(outp, outp, one);
      le.close();
      lc.close();
    }
  }

  // ---- pools -----------------------------------------------------------

  void pool(const LayerIo& io, const Layer& l, bool is_max) {
    const uint32_t c = io.in_shape[0], ih = io.in_shape[1], iw = io.in_shape[2];
    const uint32_t k = l.k, s = l.s;
    const uint32_t oh = (ih - k) / s + 1, ow = (iw - k) / s + 1;
    const float init = is_max ? -std::numeric_limits<float>::infinity() : 0.0f;
    const float inv_area = 1.0f / static_cast<float>(k * k);

    std::vector<int32_t> taps(k * k);
    for (uint32_t ky = 0; ky < k; ++ky)
      for (uint32_t kx = 0; kx < k; ++kx)
        taps[ky * k + kx] = static_cast<int32_t>(ky * iw + kx);

    e.reset_layer();
    const uint64_t est = static_cast<uint64_t>(c) * oh * ow * (2ull * taps.size() + 4);
    if (est <= kUnrollBudget) {
      const int rin = e.const_f(static_cast<float>(io.in_base));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int acc = e.alloc(), f = e.alloc();
      const int rinv = is_max ? -1 : e.const_f(inv_area);
      uint32_t oidx = 0;
      for (uint32_t ch = 0; ch < c; ++ch) {
        for (uint32_t oy = 0; oy < oh; ++oy) {
          for (uint32_t ox = 0; ox < ow; ++ox, ++oidx) {
            e.movi_f(acc, init);
            const int32_t win = static_cast<int32_t>(ch * ih * iw + oy * s * iw + ox * s);
            for (int32_t t : taps) {
              e.ld(f, rin, win + t);
              e.op(is_max ? Opcode::MAX : Opcode::ADD, acc, acc, f);
            }
            if (!is_max) e.op(Opcode::MUL, acc, acc, rinv);
            e.st(acc, rout, static_cast<int32_t>(oidx));
          }
        }
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int win = e.const_f(static_cast<float>(io.in_base));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int acc = e.alloc(), f = e.alloc();
      const int rinv = is_max ? -1 : e.const_f(inv_area);
      const int step_x = s == 1 ? one : e.const_f(static_cast<float>(s));
      const int adj_y = e.const_f(static_cast<float>(s * iw) - static_cast<float>(ow * s));
      const int adj_c =
          e.const_f(static_cast<float>(ih * iw) - static_cast<float>(oh * s * iw));
      Loop lc(e, c, pred, one);
      Loop ly(e, oh, pred, one);
      Loop lx(e, ow, pred, one);
      e.movi_f(acc, init);
      for (int32_t t : taps) {
        e.ld(f, win, t);
        e.op(is_max ? Opcode::MAX : Opcode::ADD, acc, acc, f);
      }
      if (!is_max) e.op(Opcode::MUL, acc, acc, rinv);
      e.st(acc, outp, 0);
      e.add_agu(outp, outp, one);
      e.add_agu(win, win, step_x);
      lx.close();
      e.add_agu(win, win, adj_y);
      ly.close();
      e.add_agu(win, win, adj_c);
      lc.close();
    }
  }

  // ---- residual add ----------------------------------------------------

  void residual(const LayerIo& io, uint32_t src_base, uint32_t n) {
    e.reset_layer();
    const uint64_t est = 4ull * n;
    if (est <= kUnrollBudget) {
      const int ra = e.const_f(static_cast<float>(io.in_base));
      const int rb = e.const_f(static_cast<float>(src_base));
      const int rout = e.const_f(static_cast<float>(io.out_base));
      const int a = e.alloc(), b = e.alloc();
      for (uint32_t i = 0; i < n; ++i) {
        e.ld(a, ra, static_cast<int32_t>(i));
        e.ld(b, rb, static_cast<int32_t>(i));
        e.op(Opcode::ADD, a, a, b);
        e.st(a, rout, static_cast<int32_t>(i));
      }
    } else {
      const int one = e.const_f(1.0f);
      const int pred = e.alloc();
      const int pa = e.const_f(static_cast<float>(io.in_base));
      const int pb = e.const_f(static_cast<float>(src_base));
      const int outp = e.const_f(static_cast<float>(io.out_base));
      const int a = e.alloc(), b = e.alloc();
      Loop le(e, n, pred, one);
      e.ld(a, pa, 0);
      e.ld(b, pb, 0);
      e.op(Opcode::ADD, a, a, b);
      e.st(a, outp, 0);
      e.add_agu(pa, pa, one);
      e.add_agu(pb, pb, one);
      e.add_agu(outp, outp, one);
      le.close();
    }
  }
};

}  // namespace

Program lower(const Model& m, const Tensor& input_like) {
  check(input_like.shape == m.meta.input_shape, Err::ShapeMismatch,
        "lowering input shape != model input shape");
  m.validate();
  const auto shapes = m.layer_shapes();

  Program p;
  p.model_name = m.meta.name;

  // memory plan: input | layer outputs (flatten aliases) | params | scratch
  const uint32_t in_n = static_cast<uint32_t>(input_like.numel());
  p.input_base = 0;
  p.input_size = in_n;
  uint32_t cursor = in_n;
  std::vector<uint32_t> region(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i) {
    if (m.layers[i].kind == LayerKind::Flatten) {
      region[i] = i == 0 ? p.input_base : region[i - 1];
      continue;
    }
    uint32_t n = 1;
    for (uint32_t d : shapes[i]) n *= d;
    region[i] = cursor;
    cursor += n;
  }

  // params
  p.param_base = cursor;
  std::vector<uint32_t> w_addr(m.layers.size()), b_addr(m.layers.size());
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    if (!l.weight.numel() && !l.bias.numel()) continue;
    w_addr[i] = cursor;
    for (float v : l.weight.data) p.param_words.push_back(f2b(v));
    cursor += static_cast<uint32_t>(l.weight.numel());
    b_addr[i] = cursor;
    for (float v : l.bias.data) p.param_words.push_back(f2b(v));
    cursor += static_cast<uint32_t>(l.bias.numel());
  }
  p.param_size = cursor - p.param_base;

  // scratch for padded convs
  std::vector<uint32_t> scratch(m.layers.size(), 0);
  {
    std::vector<uint32_t> cur = m.meta.input_shape;
    for (size_t i = 0; i < m.layers.size(); ++i) {
      const Layer& l = m.layers[i];
      if (l.kind == LayerKind::Conv2d && l.pad > 0) {
        const uint32_t hp = cur[1] + 2 * l.pad, wp = cur[2] + 2 * l.pad;
        scratch[i] = cursor;
        cursor += cur[0] * hp * wp;
      }
      cur = shapes[i];
    }
  }
  p.mem_words = cursor;

  Lowerer low(p);
  std::vector<uint32_t> cur_shape = m.meta.input_shape;
  uint32_t cur_base = p.input_base;
  for (size_t i = 0; i < m.layers.size(); ++i) {
    const Layer& l = m.layers[i];
    LayerIo io;
    io.in_base = cur_base;
    io.out_base = region[i];
    io.in_shape = cur_shape;
    io.w_addr = w_addr[i];
    io.b_addr = b_addr[i];
    io.scratch = scratch[i];
    uint32_t out_n = 1;
    for (uint32_t d : shapes[i]) out_n *= d;

    switch (l.kind) {
      case LayerKind::Conv2d: low.conv2d(io, l); break;
      case LayerKind::Linear: low.linear(io, l); break;
      case LayerKind::BatchNorm2dFolded: low.bn(io); break;
      case LayerKind::ReLU:
        low.clamp(io, 0.0f, std::numeric_limits<float>::infinity(), out_n);
        break;
      case LayerKind::ReLU6: low.clamp(io, 0.0f, 6.0f, out_n); break;
      case LayerKind::ClippedReLU: low.clamp(io, 0.0f, l.tau, out_n); break;
      case LayerKind::RangeRestrict: low.clamp(io, l.lo, l.hi, out_n); break;
      case LayerKind::MaxPool2d: low.pool(io, l, true); break;
      case LayerKind::AvgPool2d: low.pool(io, l, false); break;
      case LayerKind::Flatten: break;  // alias, no code
      case LayerKind::ResidualAdd: {
        const uint32_t src_base =
            l.src == -1 ? p.input_base : region[static_cast<size_t>(l.src)];
        low.residual(io, src_base, out_n);
        break;
      }
    }
    cur_shape = shapes[i];
    cur_base = region[i];
  }
  low.e.reset_layer();
  p.code.push_back({Opcode::HALT, 0, 0, 0, 0});

  p.output_base = cur_base;
  p.output_size = m.meta.class_count;

  // static register roles
  for (const Inst& in : p.code) {
    auto mark = [&](uint8_t r) { p.used_regs |= 1u << r; };
    switch (in.op) {
      case Opcode::LD:
        mark(in.rd);
        mark(in.ra);
        p.addr_regs |= 1u << in.ra;
        break;
      case Opcode::ST:
        mark(in.rd);
        mark(in.ra);
        p.addr_regs |= 1u << in.ra;
        break;
      case Opcode::MOV:
      case Opcode::CVT:
        mark(in.rd);
        mark(in.ra);
        break;
      case Opcode::MOVI:
        mark(in.rd);
        break;
      case Opcode::ADD:
      case Opcode::MUL:
      case Opcode::FMA:
      case Opcode::MAX:
      case Opcode::MIN:
        mark(in.rd);
        mark(in.ra);
        mark(in.rb);
        break;
      case Opcode::SETP:
        mark(in.rd);
        mark(in.ra);
        mark(in.rb);
        p.pred_regs |= (1u << in.rd) | (1u << in.ra) | (1u << in.rb);
        break;
      case Opcode::BRA:
        mark(in.ra);
        p.pred_regs |= 1u << in.ra;
        break;
      case Opcode::HALT:
        break;
    }
  }
  return p;
}

}  // namespace fsnn::isa
