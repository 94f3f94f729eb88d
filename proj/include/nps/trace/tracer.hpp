#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <unordered_map>
#include <vector>

#include "nps/asmfe/program.hpp"

namespace nps::trace {

struct Flags {
    bool zf = false;
    bool sf = false;
    bool of = false;

    bool operator==(const Flags&) const = default;
};

struct MachineState {
    int pc = 0;
    std::array<uint64_t, asmfe::kRegCount> regs{};
    Flags flags;
    std::unordered_map<uint64_t, uint64_t> memory;  // word-granular, sparse

    uint64_t read_reg(asmfe::RegRef r) const;
    void write_reg(asmfe::RegRef r, uint64_t v);  // 32-bit writes zero-extend
    uint64_t read_mem(uint64_t addr) const;       // uninitialized reads are 0
};

struct MemRef {
    enum class Kind { Load, Store };
    Kind kind;
    uint64_t address;
    uint64_t data;

    bool operator==(const MemRef&) const = default;
};

struct RegValue {
    asmfe::Reg reg;
    uint64_t value;

    bool operator==(const RegValue&) const = default;
};

struct TraceRecord {
    uint64_t seq = 0;
    int inst_index = 0;
    std::vector<RegValue> regs_before;  // registers read, values before execution
    std::vector<MemRef> mem_refs;

    bool operator==(const TraceRecord&) const = default;
};

struct Trace {
    std::vector<TraceRecord> records;
    uint64_t program_hash = 0;
    bool truncated = false;  // stopped by max_insts rather than halt

    bool operator==(const Trace&) const = default;
};

// Executes `p` from `init` and records per-dynamic-instruction state.
// Throws on pc falling outside the program; max_insts reached sets the
// truncation flag.
Trace run(const asmfe::Program& p, const MachineState& init, uint64_t max_insts);

// Single-step interface used by the snapshot driver: executes the
// instruction at state.pc in place, returning its record.
TraceRecord step(const asmfe::Program& p, MachineState& state, uint64_t seq);

// Builds an initial MachineState from a config with [regs] and [mem]
// sections (all registers default to 0, memory empty).
MachineState initial_state(const std::string& init_path);
MachineState initial_state_from_text(const std::string& text);

void write_trace(const Trace& t, const std::string& path);
Trace read_trace(const std::string& path);

std::string format_record(const TraceRecord& r);

}  // namespace nps::trace
