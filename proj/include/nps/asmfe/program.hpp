#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace nps::asmfe {

enum class Mnemonic {
    Mov, Movsxd, Lea, Add, Sub, Imul, And, Or, Xor,
    Inc, Dec, Cmp, Test, Jmp, Je, Jne, Jl, Jge, Nop, Halt,
};

constexpr int kMnemonicCount = 20;

const char* mnemonic_name(Mnemonic m);
std::optional<Mnemonic> mnemonic_from_name(const std::string& name);

bool is_branch(Mnemonic m);              // jmp + conditional jumps
bool is_conditional_branch(Mnemonic m);  // je/jne/jl/jge

// 64-bit general purpose registers. 32-bit aliases (eax..r15d) map onto
// these with Width32.
enum class Reg {
    Rax, Rbx, Rcx, Rdx, Rsi, Rdi, Rbp, Rsp,
    R8, R9, R10, R11, R12, R13, R14, R15,
};

constexpr int kRegCount = 16;

enum class RegWidth { W64, W32 };

struct RegRef {
    Reg reg;
    RegWidth width = RegWidth::W64;

    bool operator==(const RegRef&) const = default;
};

const char* reg_name(Reg r, RegWidth w);
std::optional<RegRef> reg_from_name(const std::string& name);

// Address expression: base + index*scale + displacement.
struct MemExpr {
    std::optional<RegRef> base;
    std::optional<RegRef> index;
    int scale = 1;  // 1,2,4,8; 1 when index absent
    int64_t displacement = 0;
    bool has_displacement = false;

    bool operator==(const MemExpr&) const = default;
};

struct Operand {
    enum class Kind { Register, Immediate, Memory, Label };

    Kind kind = Kind::Immediate;
    RegRef reg{};           // Kind::Register
    int64_t value = 0;      // Kind::Immediate
    MemExpr expr{};         // Kind::Memory
    std::string label;      // Kind::Label (target name, resolved in Program)
    int target = -1;        // resolved instruction index for Kind::Label

    static Operand make_reg(RegRef r);
    static Operand make_imm(int64_t v);
    static Operand make_mem(MemExpr e);
    static Operand make_label(std::string name);

    bool operator==(const Operand&) const = default;
};

struct Instruction {
    int index = 0;
    Mnemonic mnemonic = Mnemonic::Nop;
    std::vector<Operand> operands;
    int source_line = 0;

    // Architectural read/write sets used by the dataflow pass and the
    // interpreter. Flags are tracked separately (cmp/test write, jcc read).
    std::vector<RegRef> reads() const;
    std::optional<RegRef> writes() const;
    bool writes_flags() const;
    bool reads_flags() const;
    const MemExpr* mem_operand() const;
    bool mem_is_destination() const;  // store-form mov / rmw on memory

    bool operator==(const Instruction&) const = default;
};

struct Program {
    std::vector<Instruction> instructions;
    std::unordered_map<std::string, int> labels;
    int entry = 0;

    uint64_t structural_hash() const;
};

std::string pretty_print(const Program& p);
std::string pretty_print(const Instruction& inst);

}  // namespace nps::asmfe
