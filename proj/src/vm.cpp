#include "fsnn/vm.hpp"

#include <bit>
#include <cmath>
#include <cstring>

namespace fsnn::isa {

const char* trap_name(TrapKind t) {
  return t == TrapKind::OutOfBounds ? "OutOfBounds" : "Misaligned";
}

double induced_ber(const ExcitationCounter& c) {
  if (c.uses == 0) return 0.0;  // latent site; callers flag never_used
  return static_cast<double>(c.excitations) / static_cast<double>(c.uses);
}

void SiteStats::accumulate(const SiteStats& o) {
  for (size_t r = 0; r < kNumRegs; ++r) {
    reg_uses[r] += o.reg_uses[r];
    for (size_t b = 0; b < 32; ++b) reg_ones[r][b] += o.reg_ones[r][b];
  }
  for (size_t k = 0; k < 4; ++k)
    for (size_t p = 0; p < 3; ++p) {
      fu_uses[k][p] += o.fu_uses[k][p];
      for (size_t b = 0; b < 32; ++b) fu_ones[k][p][b] += o.fu_ones[k][p][b];
    }
  icount += o.icount;
}

ExcitationCounter SiteStats::counter_for(const IsaFaultSpec& spec) const {
  ExcitationCounter c;
  uint64_t uses, ones;
  if (spec.kind == IsaFaultSpec::Kind::RegisterBit) {
    uses = reg_uses[spec.reg];
    ones = reg_ones[spec.reg][spec.bit];
  } else {
    uses = fu_uses[static_cast<size_t>(spec.fu)][static_cast<size_t>(spec.port)];
    ones = fu_ones[static_cast<size_t>(spec.fu)][static_cast<size_t>(spec.port)][spec.bit];
  }
  c.uses = uses;
  // stuck-at-0 excites where the live bit is 1; stuck-at-1 where it is 0
  c.excitations = spec.stuck == 0 ? ones : uses - ones;
  return c;
}

Machine::Machine(const Program& p) : prog_(&p) {
  mem_template_.assign(p.mem_words, 0);
  std::memcpy(mem_template_.data() + p.param_base, p.param_words.data(),
              p.param_words.size() * sizeof(uint32_t));
}

void Machine::set_input(const Tensor& input) {
  check(input.numel() == prog_->input_size, Err::ShapeMismatch,
        "input element count != program input region");
  std::memcpy(mem_template_.data() + prog_->input_base, input.data.data(),
              input.numel() * sizeof(uint32_t));
}

namespace {
enum Mode { PLAIN = 0, GOLDEN = 1, REGFAULT = 2, FUFAULT = 3, TRACED = 4 };

inline float vf(uint32_t w) { return std::bit_cast<float>(w); }
inline uint32_t vb(float f) { return std::bit_cast<uint32_t>(f); }

inline void tally_bits(uint64_t* ones, uint32_t w) {
  for (int b = 0; b < 32; ++b) ones[b] += (w >> b) & 1u;
}
}  // namespace

template <int MODE>
ExecResult Machine::run_impl(const IsaFaultSpec* fault, uint64_t watchdog, SiteStats* stats,
                             const TraceFn* trace) {
  const std::vector<Inst>& code = prog_->code;
  mem_ = mem_template_;
  uint32_t regs[kNumRegs] = {0};
  uint64_t icount = 0;
  uint32_t pc = 0;

  uint32_t freg = 0, fmask = 0, fbits = 0;
  uint8_t ffu = 0, fport = 0;
  if constexpr (MODE == REGFAULT || MODE == FUFAULT) {
    fmask = 1u << fault->bit;
    fbits = fault->stuck ? fmask : 0u;
    freg = fault->reg;
    ffu = static_cast<uint8_t>(fault->fu);
    fport = static_cast<uint8_t>(fault->port);
  }

  ExecResult res;

  auto rd = [&](uint8_t r) -> uint32_t {
    uint32_t w = regs[r];
    if constexpr (MODE == GOLDEN) {
      ++stats->reg_uses[r];
      tally_bits(stats->reg_ones[r].data(), w);
    }
    if constexpr (MODE == REGFAULT) {
      if (r == freg) w = (w & ~fmask) | fbits;  // reads never see the un-stuck bit
    }
    if constexpr (MODE == TRACED) (*trace)(icount, 'r', r, 0, w);
    return w;
  };
  auto wr = [&](uint8_t r, uint32_t w) {
    if constexpr (MODE == GOLDEN) {
      ++stats->reg_uses[r];
      tally_bits(stats->reg_ones[r].data(), w);
    }
    if constexpr (MODE == TRACED) (*trace)(icount, 'w', r, 0, w);
    regs[r] = w;
  };
  auto fu_in = [&](uint8_t kind, uint8_t port, uint32_t w) -> uint32_t {
    if constexpr (MODE == GOLDEN) {
      ++stats->fu_uses[kind][port];
      tally_bits(stats->fu_ones[kind][port], w);
    }
    if constexpr (MODE == FUFAULT) {
      if (kind == ffu && port == fport) w = (w & ~fmask) | fbits;
    }
    if constexpr (MODE == TRACED) (*trace)(icount, static_cast<char>('a' + port), 0, kind, w);
    return w;
  };
  auto fu_out = [&](uint8_t kind, uint32_t w) -> uint32_t {
    if constexpr (MODE == GOLDEN) {
      ++stats->fu_uses[kind][2];
      tally_bits(stats->fu_ones[kind][2], w);
    }
    if constexpr (MODE == FUFAULT) {
      if (kind == ffu && fport == 2) w = (w & ~fmask) | fbits;
    }
    if constexpr (MODE == TRACED) (*trace)(icount, 'o', 0, kind, w);
    return w;
  };

  // address = FP32 register value + immediate; NaN/fractional -> Misaligned,
  // negative/huge/outside memory -> OutOfBounds
  int64_t addr = 0;
  auto decode_addr = [&](uint32_t aw, int32_t imm) -> bool {
    const float af = vf(aw);
    if (af != af) {
      res.trap = TrapKind::Misaligned;
      return false;
    }
    if (af < 0.0f || af >= 16777216.0f) {
      res.trap = TrapKind::OutOfBounds;
      return false;
    }
    const uint32_t ai = static_cast<uint32_t>(af);
    if (static_cast<float>(ai) != af) {
      res.trap = TrapKind::Misaligned;
      return false;
    }
    addr = static_cast<int64_t>(ai) + imm;
    if (addr < 0 || addr >= static_cast<int64_t>(mem_.size())) {
      res.trap = TrapKind::OutOfBounds;
      return false;
    }
    return true;
  };

  constexpr uint8_t kAdd = 0, kMul = 1, kFma = 2, kMinMax = 3;

  for (;;) {
    ++icount;
    if (watchdog != 0 && icount > watchdog) {
      res.termination = eval::Termination::Timeout;
      res.icount = icount;
      if constexpr (MODE == GOLDEN) stats->icount = icount;
      return res;
    }
    const Inst& in = code[pc];
    ++pc;
    switch (in.op) {
      case Opcode::LD: {
        const uint32_t aw = rd(in.ra);
        if (!decode_addr(aw, in.imm)) {
          res.termination = eval::Termination::Trap;
          res.icount = icount;
          if constexpr (MODE == GOLDEN) stats->icount = icount;
          return res;
        }
        wr(in.rd, mem_[static_cast<size_t>(addr)]);
        break;
      }
      case Opcode::ST: {
        const uint32_t v = rd(in.rd);
        const uint32_t aw = rd(in.ra);
        if (!decode_addr(aw, in.imm)) {
          res.termination = eval::Termination::Trap;
          res.icount = icount;
          if constexpr (MODE == GOLDEN) stats->icount = icount;
          return res;
        }
        mem_[static_cast<size_t>(addr)] = v;
        break;
      }
      case Opcode::MOV:
        wr(in.rd, rd(in.ra));
        break;
      case Opcode::MOVI:
        wr(in.rd, static_cast<uint32_t>(in.imm));
        break;
      case Opcode::ADD: {
        if (in.agu) {  // address-generation path: not an injectable FU
          const uint32_t a = rd(in.ra);
          const uint32_t b = rd(in.rb);
          wr(in.rd, vb(vf(a) + vf(b)));
          break;
        }
        const uint32_t a = fu_in(kAdd, 0, rd(in.ra));
        const uint32_t b = fu_in(kAdd, 1, rd(in.rb));
        wr(in.rd, fu_out(kAdd, vb(vf(a) + vf(b))));
        break;
      }
      case Opcode::MUL: {
        const uint32_t a = fu_in(kMul, 0, rd(in.ra));
        const uint32_t b = fu_in(kMul, 1, rd(in.rb));
        wr(in.rd, fu_out(kMul, vb(vf(a) * vf(b))));
        break;
      }
      case Opcode::FMA: {
        const uint32_t a = fu_in(kFma, 0, rd(in.ra));
        const uint32_t b = fu_in(kFma, 1, rd(in.rb));
        const uint32_t c = rd(in.rd);  // addend comes through the register path
        wr(in.rd, fu_out(kFma, vb(std::fmaf(vf(a), vf(b), vf(c)))));
        break;
      }
      case Opcode::MAX: {
        const uint32_t a = fu_in(kMinMax, 0, rd(in.ra));
        const uint32_t b = fu_in(kMinMax, 1, rd(in.rb));
        wr(in.rd, fu_out(kMinMax, vf(a) > vf(b) ? a : b));
        break;
      }
      case Opcode::MIN: {
        const uint32_t a = fu_in(kMinMax, 0, rd(in.ra));
        const uint32_t b = fu_in(kMinMax, 1, rd(in.rb));
        wr(in.rd, fu_out(kMinMax, vf(a) < vf(b) ? a : b));
        break;
      }
      case Opcode::CVT:
        wr(in.rd, vb(std::truncf(vf(rd(in.ra)))));
        break;
      case Opcode::SETP: {
        const float a = vf(rd(in.ra));
        const float b = vf(rd(in.rb));
        bool t = false;
        switch (static_cast<Cond>(in.imm)) {
          case Cond::LT: t = a < b; break;
          case Cond::LE: t = a <= b; break;
          case Cond::EQ: t = a == b; break;
          case Cond::NE: t = a != b; break;
          case Cond::GT: t = a > b; break;
          case Cond::GE: t = a >= b; break;
        }
        wr(in.rd, vb(t ? 1.0f : 0.0f));
        break;
      }
      case Opcode::BRA: {
        const uint32_t p = rd(in.ra);
        if (vf(p) != 0.0f) pc = static_cast<uint32_t>(in.imm);
        break;
      }
      case Opcode::HALT: {
        res.termination = eval::Termination::Completed;
        res.icount = icount;
        if constexpr (MODE == GOLDEN) stats->icount = icount;
        res.output.resize(prog_->output_size);
        std::memcpy(res.output.data(), mem_.data() + prog_->output_base,
                    prog_->output_size * sizeof(float));
        return res;
      }
    }
  }
}

ExecResult Machine::run_plain(uint64_t watchdog) {
  return run_impl<PLAIN>(nullptr, watchdog, nullptr, nullptr);
}

ExecResult Machine::run_golden(SiteStats& stats, uint64_t watchdog) {
  return run_impl<GOLDEN>(nullptr, watchdog, &stats, nullptr);
}

ExecResult Machine::run_fault(const IsaFaultSpec& fault, uint64_t watchdog) {
  if (fault.kind == IsaFaultSpec::Kind::RegisterBit)
    return run_impl<REGFAULT>(&fault, watchdog, nullptr, nullptr);
  return run_impl<FUFAULT>(&fault, watchdog, nullptr, nullptr);
}

ExecResult Machine::run_traced(const TraceFn& fn, uint64_t watchdog) {
  return run_impl<TRACED>(nullptr, watchdog, nullptr, &fn);
}

ExecResult execute(const Program& p, const Tensor& input,
                   const std::optional<IsaFaultSpec>& fault, uint64_t watchdog_mult) {
  Machine m(p);
  m.set_input(input);
  SiteStats stats;
  ExecResult golden = m.run_golden(stats);
  check(golden.termination == eval::Termination::Completed, Err::BadArgument,
        "fault-free execution did not complete; program is malformed");
  if (!fault) return golden;
  const uint64_t watchdog = watchdog_mult * stats.icount;
  ExecResult res = m.run_fault(*fault, watchdog);
  res.counter = stats.counter_for(*fault);
  return res;
}

}  // namespace fsnn::isa
