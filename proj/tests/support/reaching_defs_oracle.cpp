#include "reaching_defs_oracle.hpp"

#include <vector>

namespace nps::testsupport {

using asmfe::Instruction;
using asmfe::Program;
using graph::EdgeKind;
using graph::kFlagsId;
using graph::NodeType;

std::set<DefTriple> reaching_defs_oracle(const Program& p) {
    const int n = static_cast<int>(p.instructions.size());
    // Definition d = instruction index writing a register or flags; a def is
    // identified by (id, producer). IN/OUT sets per instruction.
    using Def = std::pair<int, int>;
    std::vector<std::set<Def>> in(n), out(n);

    std::vector<std::vector<int>> preds(n);
    for (int i = 0; i < n; ++i)
        for (int s : graph::cfg_successors(p, i)) preds[s].push_back(i);

    auto gen_kill = [&](int i, const std::set<Def>& in_set) {
        std::set<Def> result;
        const Instruction& inst = p.instructions[i];
        auto w = inst.writes();
        for (const Def& d : in_set) {
            if (w && d.first == static_cast<int>(w->reg)) continue;       // killed
            if (inst.writes_flags() && d.first == kFlagsId) continue;     // killed
            result.insert(d);
        }
        if (w) result.insert({static_cast<int>(w->reg), i});
        if (inst.writes_flags()) result.insert({kFlagsId, i});
        return result;
    };

    bool changed = true;
    while (changed) {
        changed = false;
        for (int i = 0; i < n; ++i) {
            std::set<Def> new_in;
            for (int pr : preds[i]) new_in.insert(out[pr].begin(), out[pr].end());
            std::set<Def> new_out = gen_kill(i, new_in);
            if (new_in != in[i] || new_out != out[i]) {
                in[i] = std::move(new_in);
                out[i] = std::move(new_out);
                changed = true;
            }
        }
    }

    std::set<DefTriple> triples;
    for (int i = 0; i < n; ++i) {
        const Instruction& inst = p.instructions[i];
        for (asmfe::RegRef r : inst.reads())
            for (const auto& d : in[i])
                if (d.first == static_cast<int>(r.reg)) triples.insert({i, d.first, d.second});
        if (inst.reads_flags())
            for (const auto& d : in[i])
                if (d.first == kFlagsId) triples.insert({i, kFlagsId, d.second});
    }
    return triples;
}

std::set<DefTriple> reaching_defs_from_graph(const Program& p, const graph::AsmGraph& g) {
    // Register read sites are reg nodes with outgoing dataflow (destination
    // reg nodes only receive); flag dependences are inst -> inst df_compute.
    std::vector<bool> has_out(g.nodes.size(), false);
    for (const auto& e : g.edges)
        if (e.kind == EdgeKind::DfSrcLeft || e.kind == EdgeKind::DfSrcRight ||
            e.kind == EdgeKind::DfCompute)
            has_out[e.src] = true;

    std::set<DefTriple> triples;
    for (const auto& e : g.edges) {
        if (e.kind != EdgeKind::DfCompute) continue;
        const auto& src = g.nodes[e.src];
        const auto& dst = g.nodes[e.dst];
        if (src.type != NodeType::Inst) continue;
        if (dst.type == NodeType::Reg && has_out[e.dst])
            triples.insert({dst.inst_index, dst.reg, src.inst_index});
        else if (dst.type == NodeType::Inst &&
                 p.instructions[dst.inst_index].reads_flags())
            triples.insert({dst.inst_index, kFlagsId, src.inst_index});
    }
    return triples;
}

}  // namespace nps::testsupport
