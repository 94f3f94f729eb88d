#include "nps/trace/tracer.hpp"

#include <fstream>
#include <sstream>
#include <stdexcept>

#include "nps/util/config.hpp"

namespace nps::trace {

using asmfe::Instruction;
using asmfe::MemExpr;
using asmfe::Mnemonic;
using asmfe::Operand;
using asmfe::Program;
using asmfe::RegRef;
using asmfe::RegWidth;

uint64_t MachineState::read_reg(RegRef r) const {
    uint64_t v = regs[static_cast<int>(r.reg)];
    if (r.width == RegWidth::W32) v &= 0xffffffffull;
    return v;
}

void MachineState::write_reg(RegRef r, uint64_t v) {
    if (r.width == RegWidth::W32) v &= 0xffffffffull;
    regs[static_cast<int>(r.reg)] = v;
}

uint64_t MachineState::read_mem(uint64_t addr) const {
    auto it = memory.find(addr);
    return it == memory.end() ? 0 : it->second;
}

namespace {

uint64_t eval_addr(const MemExpr& e, const MachineState& s) {
    uint64_t a = static_cast<uint64_t>(e.displacement);
    if (e.base) a += s.read_reg(*e.base);
    if (e.index) a += s.read_reg(*e.index) * static_cast<uint64_t>(e.scale);
    return a;
}

struct OperandValue {
    uint64_t value;
    bool is_mem = false;
    uint64_t address = 0;
};

// Reads a source operand, logging the load if it touches memory.
OperandValue read_source(const Operand& op, MachineState& s, TraceRecord& rec) {
    switch (op.kind) {
        case Operand::Kind::Register:
            return {s.read_reg(op.reg)};
        case Operand::Kind::Immediate:
            return {static_cast<uint64_t>(op.value)};
        case Operand::Kind::Memory: {
            uint64_t addr = eval_addr(op.expr, s);
            uint64_t data = s.read_mem(addr);
            rec.mem_refs.push_back({MemRef::Kind::Load, addr, data});
            return {data, true, addr};
        }
        default:
            throw std::logic_error("label operand has no value");
    }
}

void write_dest(const Operand& op, uint64_t v, MachineState& s, TraceRecord& rec) {
    if (op.kind == Operand::Kind::Register) {
        s.write_reg(op.reg, v);
    } else {
        uint64_t addr = eval_addr(op.expr, s);
        s.memory[addr] = v;
        rec.mem_refs.push_back({MemRef::Kind::Store, addr, v});
    }
}

// Destination of a read-modify-write op; loads the old value.
uint64_t read_dest(const Operand& op, MachineState& s, TraceRecord& rec) {
    if (op.kind == Operand::Kind::Register) return s.read_reg(op.reg);
    uint64_t addr = eval_addr(op.expr, s);
    uint64_t data = s.read_mem(addr);
    rec.mem_refs.push_back({MemRef::Kind::Load, addr, data});
    return data;
}

void set_flags_sub(uint64_t a, uint64_t b, Flags& f) {
    uint64_t r = a - b;
    f.zf = r == 0;
    f.sf = (r >> 63) & 1;
    int64_t sa = static_cast<int64_t>(a), sb = static_cast<int64_t>(b);
    int64_t sr = static_cast<int64_t>(r);
    f.of = (sa < 0) != (sb < 0) && (sr < 0) != (sa < 0);
}

void set_flags_and(uint64_t a, uint64_t b, Flags& f) {
    uint64_t r = a & b;
    f.zf = r == 0;
    f.sf = (r >> 63) & 1;
    f.of = false;
}

}  // namespace

TraceRecord step(const Program& p, MachineState& s, uint64_t seq) {
    if (s.pc < 0 || s.pc >= static_cast<int>(p.instructions.size()))
        throw std::runtime_error("fell off program: pc=" + std::to_string(s.pc));

    const Instruction& inst = p.instructions[s.pc];
    TraceRecord rec;
    rec.seq = seq;
    rec.inst_index = s.pc;
    for (RegRef r : inst.reads())
        rec.regs_before.push_back({r.reg, s.regs[static_cast<int>(r.reg)]});

    int next_pc = s.pc + 1;
    switch (inst.mnemonic) {
        case Mnemonic::Mov: {
            OperandValue src = read_source(inst.operands[1], s, rec);
            uint64_t v = src.value;
            // 32-bit register destination narrows; memory stores the full word.
            write_dest(inst.operands[0], v, s, rec);
            break;
        }
        case Mnemonic::Movsxd: {
            OperandValue src = read_source(inst.operands[1], s, rec);
            int64_t v = static_cast<int32_t>(src.value & 0xffffffffull);
            write_dest(inst.operands[0], static_cast<uint64_t>(v), s, rec);
            break;
        }
        case Mnemonic::Lea: {
            uint64_t addr = eval_addr(inst.operands[1].expr, s);
            write_dest(inst.operands[0], addr, s, rec);
            break;
        }
        case Mnemonic::Add:
        case Mnemonic::Sub:
        case Mnemonic::Imul:
        case Mnemonic::And:
        case Mnemonic::Or:
        case Mnemonic::Xor: {
            uint64_t a = read_dest(inst.operands[0], s, rec);
            OperandValue src = read_source(inst.operands[1], s, rec);
            uint64_t b = src.value;
            uint64_t r = 0;
            switch (inst.mnemonic) {
                case Mnemonic::Add: r = a + b; break;
                case Mnemonic::Sub: r = a - b; break;
                case Mnemonic::Imul: r = a * b; break;
                case Mnemonic::And: r = a & b; break;
                case Mnemonic::Or: r = a | b; break;
                default: r = a ^ b; break;
            }
            write_dest(inst.operands[0], r, s, rec);
            break;
        }
        case Mnemonic::Inc:
        case Mnemonic::Dec: {
            uint64_t a = read_dest(inst.operands[0], s, rec);
            write_dest(inst.operands[0],
                       inst.mnemonic == Mnemonic::Inc ? a + 1 : a - 1, s, rec);
            break;
        }
        case Mnemonic::Cmp: {
            uint64_t a = read_dest(inst.operands[0], s, rec);
            OperandValue src = read_source(inst.operands[1], s, rec);
            set_flags_sub(a, src.value, s.flags);
            break;
        }
        case Mnemonic::Test: {
            uint64_t a = read_dest(inst.operands[0], s, rec);
            OperandValue src = read_source(inst.operands[1], s, rec);
            set_flags_and(a, src.value, s.flags);
            break;
        }
        case Mnemonic::Jmp:
            next_pc = inst.operands[0].target;
            break;
        case Mnemonic::Je:
            if (s.flags.zf) next_pc = inst.operands[0].target;
            break;
        case Mnemonic::Jne:
            if (!s.flags.zf) next_pc = inst.operands[0].target;
            break;
        case Mnemonic::Jl:
            if (s.flags.sf != s.flags.of) next_pc = inst.operands[0].target;
            break;
        case Mnemonic::Jge:
            if (s.flags.sf == s.flags.of) next_pc = inst.operands[0].target;
            break;
        case Mnemonic::Nop:
        case Mnemonic::Halt:
            break;
    }
    s.pc = next_pc;
    return rec;
}

Trace run(const Program& p, const MachineState& init, uint64_t max_insts) {
    if (max_insts == 0) throw std::invalid_argument("max_insts must be > 0");
    Trace t;
    t.program_hash = p.structural_hash();
    MachineState s = init;
    uint64_t seq = 0;
    while (seq < max_insts) {
        TraceRecord rec = step(p, s, seq);
        bool is_halt = p.instructions[rec.inst_index].mnemonic == Mnemonic::Halt;
        t.records.push_back(std::move(rec));
        ++seq;
        if (is_halt) return t;
    }
    t.truncated = true;
    return t;
}

MachineState initial_state_from_text(const std::string& text) {
    util::Config cfg = util::Config::parse(text);
    MachineState s;
    for (const auto& [name, value] : cfg.section("regs")) {
        auto reg = asmfe::reg_from_name(name);
        if (!reg) throw std::runtime_error("init file: unknown register '" + name + "'");
        s.write_reg(*reg, util::parse_uint64(value));
    }
    for (const auto& [addr, value] : cfg.section("mem"))
        s.memory[util::parse_uint64(addr)] = util::parse_uint64(value);
    return s;
}

MachineState initial_state(const std::string& init_path) {
    std::ifstream in(init_path);
    if (!in) throw std::runtime_error("cannot open init file: " + init_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return initial_state_from_text(ss.str());
}

namespace {

std::string hex(uint64_t v) {
    char buf[19];
    snprintf(buf, sizeof buf, "%llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

std::string format_record(const TraceRecord& r) {
    std::ostringstream os;
    os << r.seq << ' ' << r.inst_index;
    for (const auto& rv : r.regs_before)
        os << " R:" << asmfe::reg_name(rv.reg, RegWidth::W64) << '=' << hex(rv.value);
    for (const auto& m : r.mem_refs)
        os << ' ' << (m.kind == MemRef::Kind::Load ? 'L' : 'S') << ':' << hex(m.address)
           << '=' << hex(m.data);
    return os.str();
}

void write_trace(const Trace& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open trace file for writing: " + path);
    out << "# nps-trace v1 program=" << hex(t.program_hash)
        << " records=" << t.records.size() << " truncated=" << (t.truncated ? 1 : 0)
        << "\n";
    for (const auto& r : t.records) out << format_record(r) << "\n";
    if (!out) throw std::runtime_error("I/O error writing trace: " + path);
}

Trace read_trace(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open trace file: " + path);
    std::string header;
    if (!std::getline(in, header) || header.rfind("# nps-trace v1", 0) != 0)
        throw std::runtime_error("malformed trace header in " + path);

    Trace t;
    uint64_t expected = 0;
    {
        std::istringstream hs(header.substr(14));
        std::string tok;
        while (hs >> tok) {
            auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
            if (k == "program") t.program_hash = std::stoull(v, nullptr, 16);
            if (k == "records") expected = std::stoull(v);
            if (k == "truncated") t.truncated = v == "1";
        }
    }

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::istringstream ls(line);
        TraceRecord rec;
        if (!(ls >> rec.seq >> rec.inst_index))
            throw std::runtime_error("malformed trace record at index " +
                                     std::to_string(t.records.size()));
        std::string tok;
        while (ls >> tok) {
            auto colon = tok.find(':');
            auto eq = tok.find('=');
            if (colon == std::string::npos || eq == std::string::npos || eq < colon)
                throw std::runtime_error("malformed trace field at record " +
                                         std::to_string(t.records.size()));
            std::string tag = tok.substr(0, colon);
            std::string lhs = tok.substr(colon + 1, eq - colon - 1);
            uint64_t rhs = std::stoull(tok.substr(eq + 1), nullptr, 16);
            if (tag == "R") {
                auto reg = asmfe::reg_from_name(lhs);
                if (!reg)
                    throw std::runtime_error("unknown register in trace: " + lhs);
                rec.regs_before.push_back({reg->reg, rhs});
            } else if (tag == "L" || tag == "S") {
                rec.mem_refs.push_back({tag == "L" ? MemRef::Kind::Load : MemRef::Kind::Store,
                                        std::stoull(lhs, nullptr, 16), rhs});
            } else {
                throw std::runtime_error("unknown trace field tag: " + tag);
            }
        }
        if (rec.seq != t.records.size())
            throw std::runtime_error("non-dense seq at record " +
                                     std::to_string(t.records.size()));
        t.records.push_back(std::move(rec));
    }
    if (t.records.size() != expected)
        throw std::runtime_error("trace truncated: expected " + std::to_string(expected) +
                                 " records, got " + std::to_string(t.records.size()) +
                                 " (last record index " +
                                 std::to_string(t.records.empty() ? 0 : t.records.size() - 1) +
                                 ")");
    return t;
}

}  // namespace nps::trace
