#include "nps/snapshot/snapshot.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <nlohmann/json.hpp>

namespace nps::snapshot {

using asmfe::Mnemonic;
using asmfe::Program;
using graph::AsmGraph;
using graph::Edge;
using graph::EdgeKind;
using graph::NodeCategory;
using graph::NodeType;

namespace {

// Dynamic memory references contributed by one execution of instruction i.
int refs_of(const Program& p, int i) {
    const auto& inst = p.instructions[i];
    return inst.mem_operand() != nullptr && inst.mnemonic != Mnemonic::Lea ? 1 : 0;
}

}  // namespace

DynamicContext DynamicContext::from_state(const trace::MachineState& s,
                                          const trace::TraceRecord& root_record) {
    DynamicContext ctx;
    ctx.regs = s.regs;
    ctx.has_reg.fill(true);
    ctx.root_mem_refs = root_record.mem_refs;
    return ctx;
}

std::vector<int> GraphSnapshot::task_nodes() const {
    std::vector<int> out;
    for (const auto& n : nodes)
        if (n.type == NodeType::MemRef) out.push_back(n.id);
    return out;
}

std::vector<int> t_access(const Program& p, int root, size_t path_limit) {
    const int n = static_cast<int>(p.instructions.size());
    if (root < 0 || root >= n) throw std::out_of_range("t_access: root out of range");

    std::vector<int> counts;
    std::vector<bool> on_stack(n, false);
    size_t steps = 0;

    std::function<void(int, int)> dfs = [&](int v, int count) {
        if (++steps > path_limit)
            throw std::runtime_error("t_access: path enumeration limit exceeded");
        count += refs_of(p, v);
        on_stack[v] = true;
        bool extended = false;
        for (int s : graph::cfg_successors(p, v)) {
            if (on_stack[s]) continue;  // would close a cycle
            extended = true;
            dfs(s, count);
        }
        if (!extended) counts.push_back(count);
        on_stack[v] = false;
    };
    dfs(root, 0);
    return counts;
}

GraphSnapshot extract(int root, const Program& p, const AsmGraph& g, int max_depth) {
    if (root < 0 || root >= static_cast<int>(p.instructions.size()))
        throw std::out_of_range("extract: root instruction not in graph");
    if (max_depth > kMaxDepth) max_depth = kMaxDepth;

    std::vector<int> counts = t_access(p, root);
    int depth = *std::min_element(counts.begin(), counts.end());
    depth = std::min(depth, max_depth);

    GraphSnapshot snap;
    snap.depth_count = depth;
    for (int d = 0; d < depth; ++d) snap.depth_mask[d] = true;

    // Owned (non-instruction) nodes and intra-instruction edges per static
    // instruction, cloned under every product copy of that instruction.
    const int n_static = static_cast<int>(g.nodes.size());
    std::vector<std::vector<int>> owned(p.instructions.size());
    for (const auto& node : g.nodes)
        if (node.type != NodeType::Inst) owned[node.inst_index].push_back(node.id);

    auto owning_inst = [&](int static_id) { return g.nodes[static_id].inst_index; };

    std::vector<const Edge*> intra_edges;    // within one instruction
    std::vector<const Edge*> cross_edges;    // producer/flag edges
    std::vector<const Edge*> backbone_edges;  // unused here, kept for clarity
    (void)backbone_edges;
    for (const auto& e : g.edges) {
        int a = owning_inst(e.src), b = owning_inst(e.dst);
        bool inst_to_inst =
            g.nodes[e.src].type == NodeType::Inst && g.nodes[e.dst].type == NodeType::Inst;
        if (a == b && !inst_to_inst)
            intra_edges.push_back(&e);
        else if (a != b && !(inst_to_inst && (e.kind == EdgeKind::CfFallthrough ||
                                              e.kind == EdgeKind::CfBranch)))
            cross_edges.push_back(&e);
    }

    // Product nodes: (instruction, cumulative refs including this one).
    // Truncating expansion at `depth` references keeps every maximal code
    // path at exactly D references; cycle-closing edges in product space are
    // skipped, so the instruction/control-flow subgraph stays acyclic.
    struct ProductKey {
        int inst;
        int count;
        bool operator==(const ProductKey&) const = default;
    };
    struct KeyHash {
        size_t operator()(const ProductKey& k) const {
            return std::hash<long long>()(static_cast<long long>(k.inst) * 64 + k.count);
        }
    };
    std::unordered_map<ProductKey, int, KeyHash> product;  // key -> snapshot node id
    std::unordered_map<ProductKey, bool, KeyHash> on_stack;
    // product copies of each instruction, and each copy's clone map.
    std::vector<std::vector<int>> copies_of(p.instructions.size());
    std::vector<std::unordered_map<int, int>> clone_maps;  // parallel to snap inst nodes
    std::unordered_map<int, int> clone_map_of_node;        // snapshot inst node -> map idx

    auto clone_instruction = [&](int inst, int count) -> int {
        SnapNode sn;
        const auto& src = g.nodes[g.inst_node_of[inst]];
        sn.type = src.type;
        sn.token = src.token;
        sn.inst_index = inst;
        sn.static_id = src.id;
        sn.id = static_cast<int>(snap.nodes.size());
        snap.nodes.push_back(sn);
        int inst_id = sn.id;
        product[{inst, count}] = inst_id;
        copies_of[inst].push_back(inst_id);

        std::unordered_map<int, int> cmap;
        cmap[src.id] = inst_id;
        for (int sid : owned[inst]) {
            const auto& on = g.nodes[sid];
            SnapNode c;
            c.type = on.type;
            c.token = on.token;
            c.reg = on.reg;
            c.reg_is_32bit = on.reg_is_32bit;
            c.const_value = on.const_value;
            c.inst_index = inst;
            c.static_id = on.id;
            c.id = static_cast<int>(snap.nodes.size());
            snap.nodes.push_back(c);
            cmap[on.id] = c.id;
        }
        for (const Edge* e : intra_edges) {
            if (owning_inst(e->src) != inst) continue;
            snap.edges.push_back({cmap.at(e->src), cmap.at(e->dst), e->kind});
        }
        clone_maps.push_back(std::move(cmap));
        clone_map_of_node[inst_id] = static_cast<int>(clone_maps.size()) - 1;
        return inst_id;
    };

    std::function<int(int, int)> visit = [&](int inst, int count) -> int {
        int id = clone_instruction(inst, count);
        ProductKey key{inst, count};
        on_stack[key] = true;
        if (count < depth) {
            const auto& pi = p.instructions[inst];
            bool falls = pi.mnemonic != Mnemonic::Jmp && pi.mnemonic != Mnemonic::Halt;
            auto try_succ = [&](int s, EdgeKind kind) {
                int c2 = count + refs_of(p, s);
                ProductKey skey{s, c2};
                auto os = on_stack.find(skey);
                if (os != on_stack.end() && os->second) return;  // back edge
                auto it = product.find(skey);
                int child = it != product.end() ? it->second : visit(s, c2);
                snap.edges.push_back({id, child, kind});
            };
            if (falls && inst + 1 < static_cast<int>(p.instructions.size()))
                try_succ(inst + 1, EdgeKind::CfFallthrough);
            if (asmfe::is_branch(pi.mnemonic))
                try_succ(pi.operands[0].target, EdgeKind::CfBranch);
        }
        on_stack[key] = false;
        return id;
    };
    snap.root = visit(root, refs_of(p, root));

    // Cross-instruction dataflow (register producers, flag dependences):
    // every product copy of the producer feeds every product copy of the
    // consumer's operand node.
    for (const Edge* e : cross_edges) {
        int a = owning_inst(e->src), b = owning_inst(e->dst);
        for (int qa : copies_of[a]) {
            int src_id = clone_maps[clone_map_of_node[qa]].at(e->src);
            for (int qb : copies_of[b]) {
                int dst_id = clone_maps[clone_map_of_node[qb]].at(e->dst);
                snap.edges.push_back({src_id, dst_id, e->kind});
            }
        }
    }
    (void)n_static;

    // Sharing product nodes by (instruction, count) admits paths the code
    // path enumeration would have cut earlier: a back edge taken at a higher
    // count can enter a region that dead-ends before reaching `depth`
    // references. Keep only product copies from which a count-`depth`
    // terminal is reachable, so every maximal path carries exactly D
    // references.
    {
        std::unordered_map<int, int> count_of;  // inst node id -> cumulative refs
        for (const auto& [key, id] : product) count_of[id] = key.count;

        std::unordered_map<int, std::vector<int>> rev;
        std::unordered_map<int, bool> has_succ;
        for (const auto& e : snap.edges) {
            if (e.kind != EdgeKind::CfFallthrough && e.kind != EdgeKind::CfBranch) continue;
            if (!count_of.count(e.src) || !count_of.count(e.dst)) continue;
            rev[e.dst].push_back(e.src);
            has_succ[e.src] = true;
        }

        std::vector<int> work;
        std::unordered_map<int, bool> keep;
        for (const auto& [id, c] : count_of)
            if (!has_succ[id] && c == depth) {
                keep[id] = true;
                work.push_back(id);
            }
        while (!work.empty()) {
            int v = work.back();
            work.pop_back();
            for (int u : rev[v])
                if (!keep[u]) {
                    keep[u] = true;
                    work.push_back(u);
                }
        }

        bool any_pruned = false;
        for (const auto& [id, c] : count_of)
            if (!keep[id]) any_pruned = true;

        if (any_pruned) {
            // drop pruned instruction copies with their owned clones, then
            // compact node ids (edges and root are remapped).
            std::vector<bool> node_keep(snap.nodes.size(), false);
            for (const auto& [id, yes] : keep)
                if (yes)
                    for (const auto& [sid, nid] : clone_maps[clone_map_of_node[id]])
                        node_keep[nid] = true;

            std::vector<int> remap(snap.nodes.size(), -1);
            std::vector<SnapNode> kept_nodes;
            for (size_t i = 0; i < snap.nodes.size(); ++i)
                if (node_keep[i]) {
                    remap[i] = static_cast<int>(kept_nodes.size());
                    SnapNode n = snap.nodes[i];
                    n.id = remap[i];
                    kept_nodes.push_back(std::move(n));
                }
            std::vector<Edge> kept_edges;
            for (const auto& e : snap.edges)
                if (remap[e.src] >= 0 && remap[e.dst] >= 0)
                    kept_edges.push_back({remap[e.src], remap[e.dst], e.kind});
            snap.nodes = std::move(kept_nodes);
            snap.edges = std::move(kept_edges);
            snap.root = remap[snap.root];
        }
    }

    assign_depths(snap);
    return snap;
}

std::optional<std::vector<int>> topo_sort_instructions(const GraphSnapshot& s) {
    std::vector<int> inst_nodes;
    for (const auto& n : s.nodes)
        if (n.category() == NodeCategory::Instruction) inst_nodes.push_back(n.id);

    std::unordered_map<int, int> indeg;
    std::unordered_map<int, std::vector<int>> adj;
    for (int id : inst_nodes) indeg[id] = 0;
    for (const auto& e : s.edges) {
        if (e.kind != EdgeKind::CfFallthrough && e.kind != EdgeKind::CfBranch) continue;
        if (!indeg.count(e.src) || !indeg.count(e.dst)) continue;  // inst -> mem_ref
        adj[e.src].push_back(e.dst);
        ++indeg[e.dst];
    }
    std::deque<int> ready;
    for (int id : inst_nodes)
        if (indeg[id] == 0) ready.push_back(id);
    std::vector<int> order;
    while (!ready.empty()) {
        int v = ready.front();
        ready.pop_front();
        order.push_back(v);
        for (int w : adj[v])
            if (--indeg[w] == 0) ready.push_back(w);
    }
    if (order.size() != inst_nodes.size()) return std::nullopt;
    return order;
}

void assign_depths(GraphSnapshot& s) {
    auto order = topo_sort_instructions(s);
    if (!order)
        throw std::runtime_error("assign_depths: instruction subgraph has a cycle");

    // mem_ref child and refs contributed per instruction node.
    std::unordered_map<int, int> memref_of;
    for (const auto& e : s.edges)
        if (e.kind == EdgeKind::CfFallthrough &&
            s.nodes[e.src].category() == NodeCategory::Instruction &&
            s.nodes[e.dst].type == NodeType::MemRef)
            memref_of[e.src] = e.dst;

    std::unordered_map<int, std::vector<int>> preds;
    for (const auto& e : s.edges) {
        if (e.kind != EdgeKind::CfFallthrough && e.kind != EdgeKind::CfBranch) continue;
        if (s.nodes[e.dst].category() != NodeCategory::Instruction) continue;
        if (s.nodes[e.src].category() != NodeCategory::Instruction) continue;
        preds[e.dst].push_back(e.src);
    }

    // Number of references strictly before each instruction node along a
    // path from the root; merging paths take the minimum.
    std::unordered_map<int, int> before;
    before[s.root] = 0;
    s.depth_merge_diagnostics = 0;
    for (int v : *order) {
        if (v != s.root) {
            bool first = true;
            int best = 0;
            bool disagree = false;
            for (int u : preds[v]) {
                auto it = before.find(u);
                if (it == before.end()) continue;  // unreachable pred (none expected)
                int cand = it->second + (memref_of.count(u) ? 1 : 0);
                if (first) {
                    best = cand;
                    first = false;
                } else {
                    if (cand != best) disagree = true;
                    best = std::min(best, cand);
                }
            }
            if (first) continue;  // not reachable from root
            if (disagree) ++s.depth_merge_diagnostics;
            before[v] = best;
        }
        auto mr = memref_of.find(v);
        if (mr != memref_of.end()) s.nodes[mr->second].depth = before[v] + 1;
    }
}

void node_initialize(GraphSnapshot& s, const DynamicContext& ctx) {
    std::vector<bool> has_incoming_df(s.nodes.size(), false);
    for (const auto& e : s.edges)
        if (e.kind == EdgeKind::DfSrcLeft || e.kind == EdgeKind::DfSrcRight ||
            e.kind == EdgeKind::DfCompute)
            has_incoming_df[e.dst] = true;

    // The root instruction's mem node: its reference is already resolved in
    // the trace, so the loaded/stored data value is fused in.
    int root_mem = -1;
    for (const auto& e : s.edges) {
        if (e.kind != EdgeKind::CfFallthrough || e.src != s.root) continue;
        if (s.nodes[e.dst].type != NodeType::MemRef) continue;
        for (const auto& e2 : s.edges)
            if (e2.dst == e.dst && s.nodes[e2.src].type == NodeType::Mem)
                root_mem = e2.src;
    }

    for (auto& n : s.nodes) {
        switch (n.category()) {
            case NodeCategory::Instruction:
            case NodeCategory::Pseudo:
                n.init = NodeInit::Token;
                n.init_value = static_cast<uint64_t>(n.token);
                break;
            case NodeCategory::Variable:
                switch (n.type) {
                    case NodeType::Const:
                        n.init = NodeInit::Value;
                        n.init_value = n.const_value;
                        break;
                    case NodeType::Reg:
                        if (has_incoming_df[n.id]) {
                            // Produced during message propagation.
                            n.init = NodeInit::Zero;
                        } else {
                            if (!ctx.has_reg[n.reg])
                                throw std::runtime_error(
                                    std::string("node_initialize: no dynamic value for "
                                                "register ") +
                                    asmfe::reg_name(static_cast<asmfe::Reg>(n.reg),
                                                    asmfe::RegWidth::W64));
                            n.init = NodeInit::Value;
                            n.init_value = ctx.regs[n.reg];
                        }
                        break;
                    case NodeType::Mem:
                        if (n.id == root_mem && !ctx.root_mem_refs.empty()) {
                            n.init = NodeInit::Value;
                            n.init_value = ctx.root_mem_refs.front().data;
                        } else {
                            n.init = NodeInit::Zero;
                        }
                        break;
                    default:  // tmp
                        n.init = NodeInit::Zero;
                        break;
                }
                break;
        }
    }
}

bool make_labels(GraphSnapshot& s, const trace::Trace& t, uint64_t root_seq) {
    s.root_seq = root_seq;
    s.labels.clear();
    if (s.depth_count == 0) return false;
    for (uint64_t i = root_seq; i < t.records.size(); ++i) {
        for (const auto& m : t.records[i].mem_refs) {
            s.labels.push_back(m.address);
            if (static_cast<int>(s.labels.size()) == s.depth_count) return true;
        }
    }
    s.labels.clear();
    return false;
}

std::string snapshot_to_json(const GraphSnapshot& s) {
    nlohmann::ordered_json j;
    j["root"] = s.root;
    j["D"] = s.depth_count;
    j["root_seq"] = s.root_seq;
    j["nodes"] = nlohmann::ordered_json::array();
    for (const auto& n : s.nodes) {
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["category"] = static_cast<int>(n.category());
        jn["type"] = graph::node_type_name(n.type);
        jn["token"] = n.token;
        jn["reg"] = n.reg;
        jn["reg32"] = n.reg_is_32bit;
        jn["const"] = n.const_value;
        jn["inst_index"] = n.inst_index;
        jn["static_id"] = n.static_id;
        jn["init"] = n.init == NodeInit::Token ? "token"
                     : n.init == NodeInit::Value ? "value"
                                                 : "zero";
        jn["init_value"] = n.init_value;
        jn["depth"] = n.depth;
        j["nodes"].push_back(std::move(jn));
    }
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& e : s.edges) {
        nlohmann::ordered_json je;
        je["src"] = e.src;
        je["dst"] = e.dst;
        je["kind"] = graph::edge_kind_name(e.kind);
        j["edges"].push_back(std::move(je));
    }
    j["labels"] = s.labels;
    return j.dump();
}

namespace {

NodeType node_type_from_name(const std::string& s) {
    for (int t = 0; t <= static_cast<int>(NodeType::Mem); ++t)
        if (s == graph::node_type_name(static_cast<NodeType>(t)))
            return static_cast<NodeType>(t);
    throw std::runtime_error("unknown node type: " + s);
}

EdgeKind edge_kind_from_name(const std::string& s) {
    for (int k = 0; k < graph::kEdgeKindCount; ++k)
        if (s == graph::edge_kind_name(static_cast<EdgeKind>(k)))
            return static_cast<EdgeKind>(k);
    throw std::runtime_error("unknown edge kind: " + s);
}

}  // namespace

GraphSnapshot snapshot_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    GraphSnapshot s;
    s.root = j.at("root").get<int>();
    s.depth_count = j.at("D").get<int>();
    s.root_seq = j.at("root_seq").get<uint64_t>();
    for (int d = 0; d < s.depth_count && d < kMaxDepth; ++d) s.depth_mask[d] = true;
    for (const auto& jn : j.at("nodes")) {
        SnapNode n;
        n.id = jn.at("id").get<int>();
        n.type = node_type_from_name(jn.at("type").get<std::string>());
        n.token = jn.at("token").get<int>();
        n.reg = jn.at("reg").get<int>();
        n.reg_is_32bit = jn.at("reg32").get<bool>();
        n.const_value = jn.at("const").get<uint64_t>();
        n.inst_index = jn.at("inst_index").get<int>();
        n.static_id = jn.at("static_id").get<int>();
        std::string init = jn.at("init").get<std::string>();
        n.init = init == "token" ? NodeInit::Token
                 : init == "value" ? NodeInit::Value
                                   : NodeInit::Zero;
        n.init_value = jn.at("init_value").get<uint64_t>();
        n.depth = jn.at("depth").get<int>();
        if (n.id != static_cast<int>(s.nodes.size()))
            throw std::runtime_error("snapshot: non-dense node ids");
        s.nodes.push_back(n);
    }
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.src = je.at("src").get<int>();
        e.dst = je.at("dst").get<int>();
        e.kind = edge_kind_from_name(je.at("kind").get<std::string>());
        s.edges.push_back(e);
    }
    s.labels = j.at("labels").get<std::vector<uint64_t>>();
    return s;
}

void write_corpus(const std::vector<GraphSnapshot>& snaps, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open snapshot corpus for writing: " + path);
    for (const auto& s : snaps) out << snapshot_to_json(s) << "\n";
    if (!out) throw std::runtime_error("I/O error writing snapshot corpus: " + path);
}

std::vector<GraphSnapshot> read_corpus(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open snapshot corpus: " + path);
    std::vector<GraphSnapshot> out;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out.push_back(snapshot_from_json(line));
    }
    return out;
}

std::vector<GraphSnapshot> extract_over_run(const Program& p, const AsmGraph& g,
                                            const trace::MachineState& init,
                                            uint64_t max_insts, uint64_t cadence,
                                            int max_depth) {
    if (cadence == 0) throw std::invalid_argument("cadence must be > 0");

    struct Point {
        uint64_t seq;
        int inst_index;
        DynamicContext ctx;
    };
    std::vector<Point> points;

    trace::Trace t;
    t.program_hash = p.structural_hash();
    trace::MachineState s = init;
    uint64_t seq = 0;
    while (seq < max_insts) {
        bool capture = seq % cadence == 0;
        std::array<uint64_t, asmfe::kRegCount> regs_now{};
        if (capture) regs_now = s.regs;
        trace::TraceRecord rec = trace::step(p, s, seq);
        if (capture) {
            DynamicContext ctx;
            ctx.regs = regs_now;
            ctx.has_reg.fill(true);
            ctx.root_mem_refs = rec.mem_refs;
            points.push_back({seq, rec.inst_index, std::move(ctx)});
        }
        bool is_halt = p.instructions[rec.inst_index].mnemonic == Mnemonic::Halt;
        t.records.push_back(std::move(rec));
        ++seq;
        if (is_halt) break;
    }

    std::vector<GraphSnapshot> snaps;
    snaps.reserve(points.size());
    for (const auto& pt : points) {
        GraphSnapshot snap = extract(pt.inst_index, p, g, max_depth);
        node_initialize(snap, pt.ctx);
        make_labels(snap, t, pt.seq);
        snaps.push_back(std::move(snap));
    }
    return snaps;
}

}  // namespace nps::snapshot
