#include <stdexcept>
#include <vector>

#include "nps/sample/sampler.hpp"

namespace nps::sample {

std::vector<double> synthetic_cpi(const trace::Trace& t, const asmfe::Program& p,
                                  uint64_t interval_length, const CostModelConfig& cfg) {
    if (t.records.empty()) throw std::invalid_argument("synthetic_cpi: empty trace");
    if (interval_length == 0)
        throw std::invalid_argument("synthetic_cpi: interval length must be > 0");
    if (cfg.cache_lines == 0 || cfg.line_bytes == 0)
        throw std::invalid_argument("synthetic_cpi: cache geometry must be non-zero");

    // Direct-mapped cache; persists across interval boundaries.
    std::vector<uint64_t> tags(cfg.cache_lines, 0);
    std::vector<bool> valid(cfg.cache_lines, false);

    uint64_t n_intervals = t.records.size() / interval_length;
    std::vector<double> out;
    out.reserve(n_intervals);
    for (uint64_t iv = 0; iv < n_intervals; ++iv) {
        double cost = 0.0;
        for (uint64_t j = 0; j < interval_length; ++j) {
            const auto& rec = t.records[iv * interval_length + j];
            const auto& inst = p.instructions[rec.inst_index];
            if (inst.mnemonic == asmfe::Mnemonic::Nop ||
                inst.mnemonic == asmfe::Mnemonic::Halt) {
                cost += cfg.nop_cost;
            } else if (asmfe::is_branch(inst.mnemonic)) {
                cost += cfg.branch_cost;
            } else {
                cost += cfg.alu_cost;
            }
            for (const auto& m : rec.mem_refs) {
                uint64_t line = m.address / cfg.line_bytes;
                uint64_t slot = line % cfg.cache_lines;
                uint64_t tag = line / cfg.cache_lines;
                if (valid[slot] && tags[slot] == tag) {
                    cost += cfg.mem_hit_cost;
                } else {
                    cost += cfg.mem_miss_cost;
                    valid[slot] = true;
                    tags[slot] = tag;
                }
            }
        }
        out.push_back(cost / static_cast<double>(interval_length));
    }
    return out;
}

}  // namespace nps::sample
