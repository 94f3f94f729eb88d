#include <algorithm>
#include <stdexcept>

#include "nps/sample/sampler.hpp"

namespace nps::sample {

namespace {

// Basic blocks from static structure. Leaders: entry, branch targets, and
// the instruction after each branch. A block runs from its leader up to the
// next leader (exclusive).
struct Blocks {
    std::vector<int> block_of;  // instruction -> block id
    std::vector<int> leader;    // block id -> leader instruction
    std::vector<int> length;    // block id -> instruction count
};

Blocks find_blocks(const asmfe::Program& p) {
    const int n = static_cast<int>(p.instructions.size());
    std::vector<bool> is_leader(n, false);
    if (n > 0) is_leader[0] = true;
    for (int i = 0; i < n; ++i) {
        if (!asmfe::is_branch(p.instructions[i].mnemonic)) continue;
        is_leader[p.instructions[i].operands[0].target] = true;
        if (i + 1 < n) is_leader[i + 1] = true;
    }

    Blocks b;
    b.block_of.assign(n, 0);
    for (int i = 0; i < n; ++i) {
        if (is_leader[i]) {
            b.leader.push_back(i);
            b.length.push_back(0);
        }
        b.block_of[i] = static_cast<int>(b.leader.size()) - 1;
        ++b.length.back();
    }
    return b;
}

}  // namespace

std::vector<std::vector<double>> bbv_profile(const trace::Trace& t, const asmfe::Program& p,
                                             uint64_t interval_length) {
    if (t.records.empty()) throw std::invalid_argument("bbv_profile: empty trace");
    if (interval_length == 0)
        throw std::invalid_argument("bbv_profile: interval length must be > 0");

    Blocks blocks = find_blocks(p);
    const size_t dims = blocks.leader.size();
    uint64_t n_intervals = t.records.size() / interval_length;

    std::vector<std::vector<double>> out;
    out.reserve(n_intervals);
    for (uint64_t iv = 0; iv < n_intervals; ++iv) {
        std::vector<double> v(dims, 0.0);
        for (uint64_t j = 0; j < interval_length; ++j) {
            const auto& rec = t.records[iv * interval_length + j];
            // per-instruction attribution: a full block execution contributes
            // its length, and partial executions at interval edges still count
            v[blocks.block_of[rec.inst_index]] += 1.0;
        }
        double total = 0.0;
        for (double x : v) total += x;
        if (total > 0)
            for (double& x : v) x /= total;
        out.push_back(std::move(v));
    }
    return out;
}

}  // namespace nps::sample
