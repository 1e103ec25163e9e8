#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "fsnn/model.hpp"
#include "fsnn/tensor.hpp"

// A small deterministic register machine the layer graph is lowered into.
// 32 general-purpose 32-bit registers holding FP32 bit patterns; linear
// word-addressed FP32 memory; one thread.
//
// Instructions (disassembly "PC: OPCODE Rd, Ra, Rb[, imm]"):
//   LD   rd, [ra + imm]   rd <- mem[addr(ra) + imm]
//   ST   rd, [ra + imm]   mem[addr(ra) + imm] <- rd
//   MOV  rd, ra
//   MOVI rd, imm          rd <- imm bits (FP32 constant or address value)
//   ADD  rd, ra, rb       rd <- ra + rb                  (FP-ADD unit)
//   MUL  rd, ra, rb       rd <- ra * rb                  (FP-MUL unit)
//   FMA  rd, ra, rb       rd <- fma(ra, rb, rd)          (FP-FMA unit)
//   MAX  rd, ra, rb       rd <- ra > rb ? ra : rb        (FP-MINMAX unit)
//   MIN  rd, ra, rb       rd <- ra < rb ? ra : rb        (FP-MINMAX unit)
//   CVT  rd, ra           rd <- trunc(ra)
//   SETP rd, ra, rb, cond rd <- cond(ra, rb) ? 1.0 : 0.0
//   BRA  ra, imm          if value(ra) != 0.0 jump to imm
//   HALT
//
// Addresses are FP32 values: addr(ra) must be an exact non-negative integer
// or the access traps (Misaligned); the final word index is bounds-checked
// every access (OutOfBounds). A corrupted base register is therefore a
// natural trap source, and a corrupted counter/predicate register a natural
// hang source: the two DUE mechanisms.
//
// SETP/BRA execute on a dedicated comparator outside the FU set, and LSU
// port faults are excluded (address faults manifest through registers), so
// FU-port campaigns cannot produce DUEs; only register campaigns can.
namespace fsnn::isa {

enum class Opcode : uint8_t { LD, ST, MOV, MOVI, ADD, MUL, FMA, MAX, MIN, CVT, SETP, BRA, HALT };

enum class Cond : int32_t { LT = 0, LE, EQ, NE, GT, GE };

// `agu` marks an ADD as pointer/counter arithmetic dispatched to the LSU's
// address-generation path instead of the FP-ADD unit (GPUs keep address
// math on the integer pipe; the injected FUs are the FP datapath ones).
// AGU adds are therefore outside the FU-port fault space, like LSU ports,
// which is why FU campaigns cannot produce DUEs while register campaigns
// can. Disassembles as ADDA.
struct Inst {
  Opcode op;
  uint8_t rd = 0;
  uint8_t ra = 0;
  uint8_t rb = 0;
  bool agu = false;
  int32_t imm = 0;
};

constexpr uint32_t kNumRegs = 32;

enum class FuKind : uint8_t { FpAdd = 0, FpMul = 1, FpFma = 2, FpMinMax = 3 };
enum class FuPort : uint8_t { InA = 0, InB = 1, Out = 2 };

const char* fu_kind_name(FuKind k);
const char* fu_port_name(FuPort p);

// One permanent stuck-at fault: a register bit forced at every read (not
// only at instruction destinations), or an FU port bit forced on every op
// dispatched to that unit.
struct IsaFaultSpec {
  enum class Kind : uint8_t { RegisterBit, FuPort };
  Kind kind = Kind::RegisterBit;
  uint8_t reg = 0;
  FuKind fu = FuKind::FpAdd;
  FuPort port = FuPort::Out;
  uint8_t bit = 0;    // 0..31
  uint8_t stuck = 0;  // 0 or 1

  std::string describe() const;                      // "reg:R7:bit12:sa1"
  static IsaFaultSpec parse(const std::string& s);   // inverse of describe()
  bool operator==(const IsaFaultSpec&) const = default;
};

struct Program {
  std::vector<Inst> code;
  uint32_t mem_words = 0;
  uint32_t input_base = 0, input_size = 0;
  uint32_t output_base = 0, output_size = 0;
  uint32_t param_base = 0, param_size = 0;
  std::vector<uint32_t> param_words;  // raw FP32 bits preloaded at param_base
  std::string model_name;

  // Static register roles (bitmasks) for DUE provenance checks.
  uint32_t used_regs = 0;
  uint32_t addr_regs = 0;  // appears as an LD/ST base
  uint32_t pred_regs = 0;  // appears in SETP operands/dest or as BRA predicate

  std::vector<uint8_t> used_reg_list() const;
};

// Lowers the model against the given input shape. Fault-free execution is
// bit-identical to the nn-core forward logits (same accumulation orders,
// same fma/max/min semantics). Softmax stays outside the program: the
// opcode set has no EXP/DIV, so confidences for VM outputs are computed by
// the same nn-core softmax as the golden path. Errors: UnsupportedLayer.
Program lower(const Model& m, const Tensor& input_like);

std::string disassemble(const Program& p);

// Exhaustive single-fault space: every statically referenced register x 32
// bits x 2 polarities, plus every used FU kind x 3 ports x 32 bits x 2.
// Deterministic order, duplicate-free.
std::vector<IsaFaultSpec> enumerate_fault_space(const Program& p, bool regs, bool fus);

}  // namespace fsnn::isa
