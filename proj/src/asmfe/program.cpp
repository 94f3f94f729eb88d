#include "nps/asmfe/program.hpp"

#include <array>
#include <sstream>

namespace nps::asmfe {

namespace {

constexpr std::array<const char*, kMnemonicCount> kMnemonicNames = {
    "mov", "movsxd", "lea", "add", "sub", "imul", "and", "or", "xor",
    "inc", "dec", "cmp", "test", "jmp", "je", "jne", "jl", "jge", "nop", "halt",
};

constexpr std::array<const char*, kRegCount> kReg64Names = {
    "rax", "rbx", "rcx", "rdx", "rsi", "rdi", "rbp", "rsp",
    "r8", "r9", "r10", "r11", "r12", "r13", "r14", "r15",
};

constexpr std::array<const char*, kRegCount> kReg32Names = {
    "eax", "ebx", "ecx", "edx", "esi", "edi", "ebp", "esp",
    "r8d", "r9d", "r10d", "r11d", "r12d", "r13d", "r14d", "r15d",
};

uint64_t hash_mix(uint64_t h, uint64_t v) {
    h ^= v + 0x9e3779b97f4a7c15ull + (h << 12) + (h >> 4);
    return h * 0x100000001b3ull;
}

}  // namespace

const char* mnemonic_name(Mnemonic m) { return kMnemonicNames[static_cast<int>(m)]; }

std::optional<Mnemonic> mnemonic_from_name(const std::string& name) {
    for (int i = 0; i < kMnemonicCount; ++i)
        if (name == kMnemonicNames[i]) return static_cast<Mnemonic>(i);
    return std::nullopt;
}

bool is_branch(Mnemonic m) {
    switch (m) {
        case Mnemonic::Jmp:
        case Mnemonic::Je:
        case Mnemonic::Jne:
        case Mnemonic::Jl:
        case Mnemonic::Jge:
            return true;
        default:
            return false;
    }
}

bool is_conditional_branch(Mnemonic m) { return is_branch(m) && m != Mnemonic::Jmp; }

const char* reg_name(Reg r, RegWidth w) {
    int i = static_cast<int>(r);
    return w == RegWidth::W64 ? kReg64Names[i] : kReg32Names[i];
}

std::optional<RegRef> reg_from_name(const std::string& name) {
    for (int i = 0; i < kRegCount; ++i) {
        if (name == kReg64Names[i]) return RegRef{static_cast<Reg>(i), RegWidth::W64};
        if (name == kReg32Names[i]) return RegRef{static_cast<Reg>(i), RegWidth::W32};
    }
    return std::nullopt;
}

Operand Operand::make_reg(RegRef r) {
    Operand o;
    o.kind = Kind::Register;
    o.reg = r;
    return o;
}

Operand Operand::make_imm(int64_t v) {
    Operand o;
    o.kind = Kind::Immediate;
    o.value = v;
    return o;
}

Operand Operand::make_mem(MemExpr e) {
    Operand o;
    o.kind = Kind::Memory;
    o.expr = e;
    return o;
}

Operand Operand::make_label(std::string name) {
    Operand o;
    o.kind = Kind::Label;
    o.label = std::move(name);
    return o;
}

std::vector<RegRef> Instruction::reads() const {
    std::vector<RegRef> out;
    auto add_mem_regs = [&out](const MemExpr& e) {
        if (e.base) out.push_back(*e.base);
        if (e.index) out.push_back(*e.index);
    };
    auto add_operand = [&](const Operand& op) {
        if (op.kind == Operand::Kind::Register) out.push_back(op.reg);
        if (op.kind == Operand::Kind::Memory) add_mem_regs(op.expr);
    };
    switch (mnemonic) {
        case Mnemonic::Mov:
        case Mnemonic::Movsxd:
        case Mnemonic::Lea:
            // Destination register is overwritten, not read; a memory
            // destination still reads its address registers.
            if (operands[0].kind == Operand::Kind::Memory) add_mem_regs(operands[0].expr);
            add_operand(operands[1]);
            break;
        case Mnemonic::Add:
        case Mnemonic::Sub:
        case Mnemonic::Imul:
        case Mnemonic::And:
        case Mnemonic::Or:
        case Mnemonic::Xor:
        case Mnemonic::Cmp:
        case Mnemonic::Test:
            add_operand(operands[0]);
            add_operand(operands[1]);
            break;
        case Mnemonic::Inc:
        case Mnemonic::Dec:
            add_operand(operands[0]);
            break;
        default:
            break;
    }
    return out;
}

std::optional<RegRef> Instruction::writes() const {
    switch (mnemonic) {
        case Mnemonic::Mov:
        case Mnemonic::Movsxd:
        case Mnemonic::Lea:
        case Mnemonic::Add:
        case Mnemonic::Sub:
        case Mnemonic::Imul:
        case Mnemonic::And:
        case Mnemonic::Or:
        case Mnemonic::Xor:
        case Mnemonic::Inc:
        case Mnemonic::Dec:
            if (operands[0].kind == Operand::Kind::Register) return operands[0].reg;
            return std::nullopt;  // memory destination
        default:
            return std::nullopt;
    }
}

bool Instruction::writes_flags() const {
    return mnemonic == Mnemonic::Cmp || mnemonic == Mnemonic::Test;
}

bool Instruction::reads_flags() const { return is_conditional_branch(mnemonic); }

const MemExpr* Instruction::mem_operand() const {
    for (const auto& op : operands)
        if (op.kind == Operand::Kind::Memory) return &op.expr;
    return nullptr;
}

bool Instruction::mem_is_destination() const {
    return !operands.empty() && operands[0].kind == Operand::Kind::Memory;
}

uint64_t Program::structural_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    for (const auto& inst : instructions) {
        h = hash_mix(h, static_cast<uint64_t>(inst.mnemonic));
        for (const auto& op : inst.operands) {
            h = hash_mix(h, static_cast<uint64_t>(op.kind));
            switch (op.kind) {
                case Operand::Kind::Register:
                    h = hash_mix(h, static_cast<uint64_t>(op.reg.reg) * 2 +
                                        (op.reg.width == RegWidth::W32));
                    break;
                case Operand::Kind::Immediate:
                    h = hash_mix(h, static_cast<uint64_t>(op.value));
                    break;
                case Operand::Kind::Memory: {
                    const MemExpr& e = op.expr;
                    h = hash_mix(h, e.base ? 1 + static_cast<uint64_t>(e.base->reg) : 0);
                    h = hash_mix(h, e.index ? 1 + static_cast<uint64_t>(e.index->reg) : 0);
                    h = hash_mix(h, static_cast<uint64_t>(e.scale));
                    h = hash_mix(h, static_cast<uint64_t>(e.displacement));
                    break;
                }
                case Operand::Kind::Label:
                    h = hash_mix(h, static_cast<uint64_t>(op.target));
                    break;
            }
        }
    }
    return h;
}

namespace {

std::string print_mem(const MemExpr& e) {
    std::ostringstream os;
    os << '[';
    bool first = true;
    if (e.base) {
        os << reg_name(e.base->reg, e.base->width);
        first = false;
    }
    if (e.index) {
        if (!first) os << '+';
        os << reg_name(e.index->reg, e.index->width);
        if (e.scale != 1) os << '*' << e.scale;
        first = false;
    }
    if (e.has_displacement || first) {
        if (!first && e.displacement >= 0) os << '+';
        os << e.displacement;
    }
    os << ']';
    return os.str();
}

}  // namespace

std::string pretty_print(const Instruction& inst) {
    std::ostringstream os;
    os << mnemonic_name(inst.mnemonic);
    for (size_t i = 0; i < inst.operands.size(); ++i) {
        os << (i == 0 ? " " : ", ");
        const Operand& op = inst.operands[i];
        switch (op.kind) {
            case Operand::Kind::Register:
                os << reg_name(op.reg.reg, op.reg.width);
                break;
            case Operand::Kind::Immediate:
                os << op.value;
                break;
            case Operand::Kind::Memory:
                os << print_mem(op.expr);
                break;
            case Operand::Kind::Label:
                os << op.label;
                break;
        }
    }
    return os.str();
}

std::string pretty_print(const Program& p) {
    // Emit a label line before every instruction that is a branch target.
    std::vector<std::string> label_of(p.instructions.size() + 1);
    for (const auto& [name, idx] : p.labels) label_of[idx] = name;

    std::ostringstream os;
    for (const auto& inst : p.instructions) {
        if (!label_of[inst.index].empty()) os << label_of[inst.index] << ":\n";
        os << "    " << pretty_print(inst) << "\n";
    }
    if (!label_of[p.instructions.size()].empty())
        os << label_of[p.instructions.size()] << ":\n";
    return os.str();
}

}  // namespace nps::asmfe
