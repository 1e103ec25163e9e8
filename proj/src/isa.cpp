#include "fsnn/isa.hpp"

#include <bit>
#include <cstdio>
#include <sstream>

#include "fsnn/util.hpp"

namespace fsnn::isa {

const char* fu_kind_name(FuKind k) {
  switch (k) {
    case FuKind::FpAdd: return "add";
    case FuKind::FpMul: return "mul";
    case FuKind::FpFma: return "fma";
    case FuKind::FpMinMax: return "minmax";
  }
  return "?";
}

const char* fu_port_name(FuPort p) {
  switch (p) {
    case FuPort::InA: return "inA";
    case FuPort::InB: return "inB";
    case FuPort::Out: return "out";
  }
  return "?";
}

std::string IsaFaultSpec::describe() const {
  std::ostringstream os;
  if (kind == Kind::RegisterBit) {
    os << "reg:R" << static_cast<int>(reg);
  } else {
    os << "fu:" << fu_kind_name(fu) << ':' << fu_port_name(port);
  }
  os << ":bit" << static_cast<int>(bit) << ":sa" << static_cast<int>(stuck);
  return os.str();
}

IsaFaultSpec IsaFaultSpec::parse(const std::string& s) {
  auto split = [](const std::string& str) {
    std::vector<std::string> parts;
    std::istringstream is(str);
    std::string p;
    while (std::getline(is, p, ':')) parts.push_back(p);
    return parts;
  };
  const auto parts = split(s);
  IsaFaultSpec f;
  auto bad = [&]() { fail(Err::BadArgument, "cannot parse fault spec '" + s + "'"); };
  auto parse_bit_sa = [&](const std::string& bs, const std::string& ss) {
    if (bs.rfind("bit", 0) != 0 || ss.rfind("sa", 0) != 0) bad();
    const int b = std::atoi(bs.c_str() + 3);
    const int v = std::atoi(ss.c_str() + 2);
    if (b < 0 || b > 31 || (v != 0 && v != 1)) bad();
    f.bit = static_cast<uint8_t>(b);
    f.stuck = static_cast<uint8_t>(v);
  };
  if (parts.size() == 4 && parts[0] == "reg") {
    if (parts[1].empty() || parts[1][0] != 'R') bad();
    const int r = std::atoi(parts[1].c_str() + 1);
    if (r < 0 || r >= static_cast<int>(kNumRegs)) bad();
    f.kind = Kind::RegisterBit;
    f.reg = static_cast<uint8_t>(r);
    parse_bit_sa(parts[2], parts[3]);
    return f;
  }
  if (parts.size() == 5 && parts[0] == "fu") {
    f.kind = Kind::FuPort;
    if (parts[1] == "add") f.fu = FuKind::FpAdd;
    else if (parts[1] == "mul") f.fu = FuKind::FpMul;
    else if (parts[1] == "fma") f.fu = FuKind::FpFma;
    else if (parts[1] == "minmax") f.fu = FuKind::FpMinMax;
    else bad();
    if (parts[2] == "inA") f.port = FuPort::InA;
    else if (parts[2] == "inB") f.port = FuPort::InB;
    else if (parts[2] == "out") f.port = FuPort::Out;
    else bad();
    parse_bit_sa(parts[3], parts[4]);
    return f;
  }
  bad();
  return f;
}

std::vector<uint8_t> Program::used_reg_list() const {
  std::vector<uint8_t> list;
  for (uint8_t r = 0; r < kNumRegs; ++r)
    if (used_regs & (1u << r)) list.push_back(r);
  return list;
}

static const char* op_name(Opcode op) {
  switch (op) {
    case Opcode::LD: return "LD";
    case Opcode::ST: return "ST";
    case Opcode::MOV: return "MOV";
    case Opcode::MOVI: return "MOVI";
    case Opcode::ADD: return "ADD";
    case Opcode::MUL: return "MUL";
    case Opcode::FMA: return "FMA";
    case Opcode::MAX: return "MAX";
    case Opcode::MIN: return "MIN";
    case Opcode::CVT: return "CVT";
    case Opcode::SETP: return "SETP";
    case Opcode::BRA: return "BRA";
    case Opcode::HALT: return "HALT";
  }
  return "?";
}

static const char* cond_name(int32_t c) {
  switch (static_cast<Cond>(c)) {
    case Cond::LT: return "LT";
    case Cond::LE: return "LE";
    case Cond::EQ: return "EQ";
    case Cond::NE: return "NE";
    case Cond::GT: return "GT";
    case Cond::GE: return "GE";
  }
  return "?";
}

std::string disassemble(const Program& p) {
  std::ostringstream os;
  char buf[128];
  for (size_t pc = 0; pc < p.code.size(); ++pc) {
    const Inst& in = p.code[pc];
    std::snprintf(buf, sizeof(buf), "%06zu: ", pc);
    os << buf;
    switch (in.op) {
      case Opcode::LD:
        os << "LD R" << int(in.rd) << ", [R" << int(in.ra) << " + " << in.imm << "]";
        break;
      case Opcode::ST:
        os << "ST R" << int(in.rd) << ", [R" << int(in.ra) << " + " << in.imm << "]";
        break;
      case Opcode::MOV:
        os << "MOV R" << int(in.rd) << ", R" << int(in.ra);
        break;
      case Opcode::MOVI: {
        const float v = std::bit_cast<float>(static_cast<uint32_t>(in.imm));
        std::snprintf(buf, sizeof(buf), "MOVI R%d, %g", int(in.rd), v);
        os << buf;
        break;
      }
      case Opcode::ADD:
      case Opcode::MUL:
      case Opcode::FMA:
      case Opcode::MAX:
      case Opcode::MIN:
        os << (in.op == Opcode::ADD && in.agu ? "ADDA" : op_name(in.op)) << " R"
           << int(in.rd) << ", R" << int(in.ra) << ", R" << int(in.rb);
        break;
      case Opcode::CVT:
        os << "CVT R" << int(in.rd) << ", R" << int(in.ra);
        break;
      case Opcode::SETP:
        os << "SETP R" << int(in.rd) << ", R" << int(in.ra) << ", R" << int(in.rb) << ", "
           << cond_name(in.imm);
        break;
      case Opcode::BRA:
        os << "BRA R" << int(in.ra) << ", " << in.imm;
        break;
      case Opcode::HALT:
        os << "HALT";
        break;
    }
    os << "\n";
  }
  return os.str();
}

std::vector<IsaFaultSpec> enumerate_fault_space(const Program& p, bool regs, bool fus) {
  std::vector<IsaFaultSpec> out;
  if (regs) {
    for (uint8_t r : p.used_reg_list()) {
      for (uint8_t bit = 0; bit < 32; ++bit) {
        for (uint8_t sa = 0; sa <= 1; ++sa) {
          IsaFaultSpec f;
          f.kind = IsaFaultSpec::Kind::RegisterBit;
          f.reg = r;
          f.bit = bit;
          f.stuck = sa;
          out.push_back(f);
        }
      }
    }
  }
  if (fus) {
    bool used[4] = {false, false, false, false};
    for (const Inst& in : p.code) {
      switch (in.op) {
        case Opcode::ADD:
          if (!in.agu) used[0] = true;
          break;
        case Opcode::MUL: used[1] = true; break;
        case Opcode::FMA: used[2] = true; break;
        case Opcode::MAX:
        case Opcode::MIN: used[3] = true; break;
        default: break;
      }
    }
    for (uint8_t k = 0; k < 4; ++k) {
      if (!used[k]) continue;
      for (uint8_t port = 0; port < 3; ++port) {
        for (uint8_t bit = 0; bit < 32; ++bit) {
          for (uint8_t sa = 0; sa <= 1; ++sa) {
            IsaFaultSpec f;
            f.kind = IsaFaultSpec::Kind::FuPort;
            f.fu = static_cast<FuKind>(k);
            f.port = static_cast<FuPort>(port);
            f.bit = bit;
            f.stuck = sa;
            out.push_back(f);
          }
        }
      }
    }
  }
  return out;
}

}  // namespace fsnn::isa
