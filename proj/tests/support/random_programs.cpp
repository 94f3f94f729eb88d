#include "random_programs.hpp"

#include <sstream>

#include "nps/asmfe/parser.hpp"

namespace nps::testsupport {

namespace {

uint64_t pick(std::mt19937_64& rng, uint64_t n) { return rng() % n; }

std::string reg64(std::mt19937_64& rng) {
    // a small pool keeps definitions and uses overlapping often
    static const char* pool[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8", "r9"};
    return pool[pick(rng, 8)];
}

std::string reg_any(std::mt19937_64& rng) {
    static const char* pool[] = {"rax", "rbx", "rcx", "rdx", "rsi", "rdi", "r8",
                                 "r9",  "eax", "ebx", "ecx", "edx", "r8d"};
    return pool[pick(rng, 13)];
}

std::string mem_operand(std::mt19937_64& rng) {
    switch (pick(rng, 4)) {
        case 0:
            return "[" + reg64(rng) + "]";
        case 1:
            return "[" + reg64(rng) + " + " + std::to_string(8 * pick(rng, 16)) + "]";
        case 2: {
            static const int scales[] = {1, 2, 4, 8};
            return "[" + reg64(rng) + " + " + reg64(rng) + "*" +
                   std::to_string(scales[pick(rng, 4)]) + "]";
        }
        default:
            return "[" + std::to_string(0x1000 + 8 * pick(rng, 64)) + "]";
    }
}

std::string imm(std::mt19937_64& rng) {
    return std::to_string(static_cast<int64_t>(pick(rng, 200)) - 100);
}

std::string rhs(std::mt19937_64& rng) {
    switch (pick(rng, 3)) {
        case 0:
            return reg_any(rng);
        case 1:
            return imm(rng);
        default:
            return mem_operand(rng);
    }
}

}  // namespace

std::string random_program_source(std::mt19937_64& rng, const RandomProgramOptions& opts) {
    int count = opts.min_insts +
                static_cast<int>(pick(rng, static_cast<uint64_t>(opts.max_insts -
                                                                 opts.min_insts + 1)));
    int branches_left = opts.max_branches;

    std::ostringstream out;
    static const char* arith[] = {"add", "sub", "imul", "and", "or", "xor"};
    static const char* jcc[] = {"je", "jne", "jl", "jge"};

    for (int i = 0; i < count; ++i) {
        out << "L" << i << ": ";
        switch (pick(rng, 10)) {
            case 0:
                out << "mov " << reg_any(rng) << ", " << rhs(rng);
                break;
            case 1:
                out << "mov " << mem_operand(rng) << ", " << reg_any(rng);
                break;
            case 2:
            case 3:
                out << arith[pick(rng, 6)] << " " << reg_any(rng) << ", " << rhs(rng);
                break;
            case 4:
                out << (pick(rng, 2) ? "inc " : "dec ") << reg_any(rng);
                break;
            case 5:
                out << "cmp " << reg_any(rng) << ", " << rhs(rng);
                break;
            case 6:
                out << "lea " << reg64(rng) << ", " << mem_operand(rng);
                break;
            case 7:
                if (branches_left > 0) {
                    --branches_left;
                    // target within the labeled range (halt label excluded)
                    out << jcc[pick(rng, 4)] << " L" << pick(rng, static_cast<uint64_t>(count));
                } else {
                    out << "test " << reg_any(rng) << ", " << reg_any(rng);
                }
                break;
            case 8:
                out << "nop";
                break;
            default:
                out << "mov " << reg_any(rng) << ", " << imm(rng);
                break;
        }
        out << "\n";
    }
    if (opts.ensure_halt) out << "halt\n";
    return out.str();
}

asmfe::Program random_program(std::mt19937_64& rng, const RandomProgramOptions& opts) {
    return asmfe::parse_program(random_program_source(rng, opts));
}

}  // namespace nps::testsupport
