#include "nps/graph/asmgraph.hpp"

#include <cstdio>
#include <deque>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <nlohmann/json.hpp>

namespace nps::graph {

using asmfe::Instruction;
using asmfe::MemExpr;
using asmfe::Mnemonic;
using asmfe::Operand;
using asmfe::Program;
using asmfe::RegRef;
using asmfe::RegWidth;

NodeCategory category_of(NodeType t) {
    switch (t) {
        case NodeType::Inst:
            return NodeCategory::Instruction;
        case NodeType::Plus:
        case NodeType::Minus:
        case NodeType::Times:
        case NodeType::BitAnd:
        case NodeType::BitOr:
        case NodeType::MemRef:
            return NodeCategory::Pseudo;
        default:
            return NodeCategory::Variable;
    }
}

const char* node_type_name(NodeType t) {
    switch (t) {
        case NodeType::Inst: return "inst";
        case NodeType::Plus: return "plus";
        case NodeType::Minus: return "minus";
        case NodeType::Times: return "times";
        case NodeType::BitAnd: return "bitand";
        case NodeType::BitOr: return "bitor";
        case NodeType::MemRef: return "mem_ref";
        case NodeType::Tmp: return "tmp";
        case NodeType::Reg: return "reg";
        case NodeType::Const: return "const";
        case NodeType::Mem: return "mem";
    }
    return "?";
}

const char* edge_kind_name(EdgeKind k) {
    switch (k) {
        case EdgeKind::CfFallthrough: return "cf_fallthrough";
        case EdgeKind::CfBranch: return "cf_branch";
        case EdgeKind::DfSrcLeft: return "df_src_left";
        case EdgeKind::DfSrcRight: return "df_src_right";
        case EdgeKind::DfCompute: return "df_compute";
    }
    return "?";
}

int token_of_mnemonic(Mnemonic m) { return static_cast<int>(m); }

int token_of_type(NodeType t) {
    // Tokens follow the 20 mnemonics; Inst nodes use their mnemonic token.
    return asmfe::kMnemonicCount + (static_cast<int>(t) - static_cast<int>(NodeType::Plus));
}

int AsmGraph::add_node(Node n) {
    n.id = static_cast<int>(nodes.size());
    nodes.push_back(n);
    return n.id;
}

void AsmGraph::add_edge(int src, int dst, EdgeKind kind) {
    edges.push_back({src, dst, kind});
}

uint64_t AsmGraph::structural_hash() const {
    uint64_t h = 0xcbf29ce484222325ull;
    auto mix = [&h](uint64_t v) {
        h ^= v + 0x9e3779b97f4a7c15ull + (h << 12) + (h >> 4);
        h *= 0x100000001b3ull;
    };
    for (const auto& n : nodes) {
        mix(static_cast<uint64_t>(n.type));
        mix(static_cast<uint64_t>(n.token));
        mix(static_cast<uint64_t>(n.reg + 1));
        mix(n.reg_is_32bit);
        mix(n.const_value);
        mix(static_cast<uint64_t>(n.inst_index + 1));
    }
    for (const auto& e : edges) {
        mix(static_cast<uint64_t>(e.src));
        mix(static_cast<uint64_t>(e.dst));
        mix(static_cast<uint64_t>(e.kind));
    }
    return h;
}

bool ProducerBook::contains(int consumer, int reg, int producer) const {
    for (const auto& [r, i] : u[consumer])
        if (r == reg && i == producer) return true;
    return false;
}

std::vector<int> cfg_successors(const Program& p, int i) {
    const Instruction& inst = p.instructions[i];
    std::vector<int> out;
    bool falls = inst.mnemonic != Mnemonic::Jmp && inst.mnemonic != Mnemonic::Halt;
    if (falls && i + 1 < static_cast<int>(p.instructions.size())) out.push_back(i + 1);
    if (asmfe::is_branch(inst.mnemonic)) out.push_back(inst.operands[0].target);
    return out;
}

AsmGraph build_backbone(const Program& p) {
    AsmGraph g;
    g.inst_node_of.resize(p.instructions.size());
    for (const auto& inst : p.instructions) {
        Node n;
        n.type = NodeType::Inst;
        n.token = token_of_mnemonic(inst.mnemonic);
        n.inst_index = inst.index;
        g.inst_node_of[inst.index] = g.add_node(n);
    }
    for (const auto& inst : p.instructions) {
        int i = inst.index;
        bool falls = inst.mnemonic != Mnemonic::Jmp && inst.mnemonic != Mnemonic::Halt;
        if (falls && i + 1 < static_cast<int>(p.instructions.size()))
            g.add_edge(g.inst_node_of[i], g.inst_node_of[i + 1], EdgeKind::CfFallthrough);
        if (asmfe::is_branch(inst.mnemonic))
            g.add_edge(g.inst_node_of[i], g.inst_node_of[inst.operands[0].target],
                       EdgeKind::CfBranch);
    }
    return g;
}

namespace {

bool reads_id(const Instruction& inst, int id) {
    if (id == kFlagsId) return inst.reads_flags();
    for (RegRef r : inst.reads())
        if (static_cast<int>(r.reg) == id) return true;
    return false;
}

bool writes_id(const Instruction& inst, int id) {
    if (id == kFlagsId) return inst.writes_flags();
    auto w = inst.writes();
    return w && static_cast<int>(w->reg) == id;
}

}  // namespace

ProducerBook compute_producers(const Program& p, const AsmGraph&) {
    const int n = static_cast<int>(p.instructions.size());
    ProducerBook book;
    book.u.resize(n);

    // For every instruction I that defines a register (or flags), a BFS over
    // control-flow successors marks all readers reachable without an
    // intervening redefinition. A path branch stops expanding past the first
    // instruction that overwrites the value (that instruction may still read
    // it first). Loops fall out naturally: a later instruction can produce
    // for an earlier one via a back edge.
    for (int producer = 0; producer < n; ++producer) {
        const Instruction& pi = p.instructions[producer];
        std::vector<int> defs;
        if (auto w = pi.writes()) defs.push_back(static_cast<int>(w->reg));
        if (pi.writes_flags()) defs.push_back(kFlagsId);

        for (int id : defs) {
            std::vector<bool> visited(n, false);
            std::deque<int> queue;
            for (int s : cfg_successors(p, producer)) {
                if (!visited[s]) {
                    visited[s] = true;
                    queue.push_back(s);
                }
            }
            while (!queue.empty()) {
                int k = queue.front();
                queue.pop_front();
                const Instruction& ki = p.instructions[k];
                if (reads_id(ki, id)) book.u[k].emplace_back(id, producer);
                if (writes_id(ki, id)) continue;  // value overwritten past here
                for (int s : cfg_successors(p, k)) {
                    if (!visited[s]) {
                        visited[s] = true;
                        queue.push_back(s);
                    }
                }
            }
        }
    }
    return book;
}

namespace {

struct DataflowBuilder {
    const Program& p;
    AsmGraph& g;
    const ProducerBook& book;

    int new_node(NodeType type, int inst_index) {
        Node n;
        n.type = type;
        n.token = token_of_type(type);
        n.inst_index = inst_index;
        return g.add_node(n);
    }

    int const_node(uint64_t value, int inst_index) {
        int id = new_node(NodeType::Const, inst_index);
        g.nodes[id].const_value = value;
        return id;
    }

    // Pseudo node with left/right inputs, materialized through a tmp node.
    int pseudo(NodeType type, int left, int right, int inst_index) {
        int op = new_node(type, inst_index);
        g.add_edge(left, op, EdgeKind::DfSrcLeft);
        g.add_edge(right, op, EdgeKind::DfSrcRight);
        int tmp = new_node(NodeType::Tmp, inst_index);
        g.add_edge(op, tmp, EdgeKind::DfCompute);
        return tmp;
    }

    // A register read site: a reg node fed by its producers, masked through
    // a bitwise-and when the read or any producing write is 32-bit.
    int reg_read(RegRef r, const Instruction& consumer) {
        int id = new_node(NodeType::Reg, consumer.index);
        g.nodes[id].reg = static_cast<int>(r.reg);
        g.nodes[id].reg_is_32bit = r.width == RegWidth::W32;

        bool masked = r.width == RegWidth::W32;
        for (const auto& [reg, producer] : book.u[consumer.index]) {
            if (reg != static_cast<int>(r.reg)) continue;
            g.add_edge(g.inst_node_of[producer], id, EdgeKind::DfCompute);
            auto w = p.instructions[producer].writes();
            if (w && w->width == RegWidth::W32) masked = true;
        }
        if (!masked) return id;
        return pseudo(NodeType::BitAnd, id, const_node(0xffffffffull, consumer.index),
                      consumer.index);
    }

    // Expression tree for a memory operand; returns the mem_ref node.
    int mem_expr(const MemExpr& e, const Instruction& inst) {
        int addr = -1;
        if (e.base) addr = reg_read(*e.base, inst);
        if (e.index) {
            int idx = reg_read(*e.index, inst);
            if (e.scale != 1)
                idx = pseudo(NodeType::Times, idx,
                             const_node(static_cast<uint64_t>(e.scale), inst.index),
                             inst.index);
            addr = addr < 0 ? idx : pseudo(NodeType::Plus, addr, idx, inst.index);
        }
        if (e.has_displacement || addr < 0) {
            int disp = const_node(static_cast<uint64_t>(e.displacement), inst.index);
            addr = addr < 0 ? disp : pseudo(NodeType::Plus, addr, disp, inst.index);
        }

        int root = new_node(NodeType::MemRef, inst.index);
        g.add_edge(addr, root, EdgeKind::DfSrcLeft);
        int mem = new_node(NodeType::Mem, inst.index);
        g.add_edge(mem, root, EdgeKind::DfSrcRight);
        // Liveness: the expression is active when its instruction is.
        g.add_edge(g.inst_node_of[inst.index], root, EdgeKind::CfFallthrough);
        return root;
    }

    // Address-only expression (lea): no memory access, so no mem_ref/mem
    // node; the address value node is the result.
    int addr_expr(const MemExpr& e, const Instruction& inst) {
        int addr = -1;
        if (e.base) addr = reg_read(*e.base, inst);
        if (e.index) {
            int idx = reg_read(*e.index, inst);
            if (e.scale != 1)
                idx = pseudo(NodeType::Times, idx,
                             const_node(static_cast<uint64_t>(e.scale), inst.index),
                             inst.index);
            addr = addr < 0 ? idx : pseudo(NodeType::Plus, addr, idx, inst.index);
        }
        if (e.has_displacement || addr < 0) {
            int disp = const_node(static_cast<uint64_t>(e.displacement), inst.index);
            addr = addr < 0 ? disp : pseudo(NodeType::Plus, addr, disp, inst.index);
        }
        return addr;
    }

    void build(const Instruction& inst) {
        int inst_node = g.inst_node_of[inst.index];
        EdgeKind position[2] = {EdgeKind::DfSrcLeft, EdgeKind::DfSrcRight};
        int next_pos = 0;
        int dest_mem_ref = -1;

        auto wire_source = [&](const Operand& op) {
            int node = -1;
            switch (op.kind) {
                case Operand::Kind::Register:
                    node = reg_read(op.reg, inst);
                    break;
                case Operand::Kind::Immediate:
                    node = const_node(static_cast<uint64_t>(op.value), inst.index);
                    break;
                case Operand::Kind::Memory:
                    node = inst.mnemonic == Mnemonic::Lea ? addr_expr(op.expr, inst)
                                                          : mem_expr(op.expr, inst);
                    break;
                case Operand::Kind::Label:
                    return;  // control flow is already an edge
            }
            g.add_edge(node, inst_node, position[next_pos++]);
        };

        switch (inst.mnemonic) {
            case Mnemonic::Mov:
            case Mnemonic::Movsxd:
            case Mnemonic::Lea:
                // Destination is write-only; a memory destination still has
                // a live expression tree.
                if (inst.operands[0].kind == Operand::Kind::Memory)
                    dest_mem_ref = mem_expr(inst.operands[0].expr, inst);
                wire_source(inst.operands[1]);
                break;
            case Mnemonic::Add:
            case Mnemonic::Sub:
            case Mnemonic::Imul:
            case Mnemonic::And:
            case Mnemonic::Or:
            case Mnemonic::Xor:
            case Mnemonic::Cmp:
            case Mnemonic::Test:
                wire_source(inst.operands[0]);
                wire_source(inst.operands[1]);
                break;
            case Mnemonic::Inc:
            case Mnemonic::Dec:
                wire_source(inst.operands[0]);
                break;
            default:
                break;
        }

        // Destination register materializes as a reg node computed by the
        // instruction; a store sends the computed value to its mem_ref.
        if (auto w = inst.writes()) {
            int dst = new_node(NodeType::Reg, inst.index);
            g.nodes[dst].reg = static_cast<int>(w->reg);
            g.nodes[dst].reg_is_32bit = w->width == RegWidth::W32;
            g.add_edge(inst_node, dst, EdgeKind::DfCompute);
        } else if (inst.mem_is_destination() && inst.mnemonic != Mnemonic::Cmp &&
                   inst.mnemonic != Mnemonic::Test) {
            // RMW forms already built the tree as a source; reuse it.
            if (dest_mem_ref < 0) {
                for (int e = static_cast<int>(g.edges.size()) - 1; e >= 0; --e) {
                    const Edge& edge = g.edges[e];
                    if (edge.kind == EdgeKind::CfFallthrough && edge.src == inst_node &&
                        g.nodes[edge.dst].type == NodeType::MemRef) {
                        dest_mem_ref = edge.dst;
                        break;
                    }
                }
            }
            if (dest_mem_ref >= 0)
                g.add_edge(inst_node, dest_mem_ref, EdgeKind::DfCompute);
        }

        // Flag dependence: cmp/test producers connect straight to the
        // conditional jump's instruction node.
        if (inst.reads_flags())
            for (const auto& [reg, producer] : book.u[inst.index])
                if (reg == kFlagsId)
                    g.add_edge(g.inst_node_of[producer], inst_node, EdgeKind::DfCompute);
    }
};

}  // namespace

void grow_dataflow(const Program& p, AsmGraph& g, const ProducerBook& book) {
    DataflowBuilder b{p, g, book};
    for (const auto& inst : p.instructions) b.build(inst);
}

AsmGraph build_graph(const Program& p) {
    AsmGraph g = build_backbone(p);
    ProducerBook book = compute_producers(p, g);
    grow_dataflow(p, g, book);
    return g;
}

std::string graph_to_json(const AsmGraph& g) {
    nlohmann::ordered_json j;
    j["nodes"] = nlohmann::ordered_json::array();
    j["edges"] = nlohmann::ordered_json::array();
    for (const auto& n : g.nodes) {
        nlohmann::ordered_json jn;
        jn["id"] = n.id;
        jn["category"] = static_cast<int>(n.category());
        jn["type"] = node_type_name(n.type);
        jn["token"] = n.token;
        jn["reg"] = n.reg;
        jn["reg32"] = n.reg_is_32bit;
        jn["const"] = n.const_value;
        jn["inst_index"] = n.inst_index;
        j["nodes"].push_back(std::move(jn));
    }
    for (const auto& e : g.edges) {
        nlohmann::ordered_json je;
        je["src"] = e.src;
        je["dst"] = e.dst;
        je["kind"] = edge_kind_name(e.kind);
        j["edges"].push_back(std::move(je));
    }
    nlohmann::ordered_json inst_nodes(g.inst_node_of);
    j["inst_node_of"] = std::move(inst_nodes);
    return j.dump(1);
}

namespace {

NodeType node_type_from_name(const std::string& s) {
    for (int t = 0; t <= static_cast<int>(NodeType::Mem); ++t)
        if (s == node_type_name(static_cast<NodeType>(t))) return static_cast<NodeType>(t);
    throw std::runtime_error("unknown node type: " + s);
}

EdgeKind edge_kind_from_name(const std::string& s) {
    for (int k = 0; k < kEdgeKindCount; ++k)
        if (s == edge_kind_name(static_cast<EdgeKind>(k))) return static_cast<EdgeKind>(k);
    throw std::runtime_error("unknown edge kind: " + s);
}

}  // namespace

AsmGraph graph_from_json(const std::string& text) {
    nlohmann::json j = nlohmann::json::parse(text);
    AsmGraph g;
    for (const auto& jn : j.at("nodes")) {
        Node n;
        n.id = jn.at("id").get<int>();
        n.type = node_type_from_name(jn.at("type").get<std::string>());
        n.token = jn.at("token").get<int>();
        n.reg = jn.at("reg").get<int>();
        n.reg_is_32bit = jn.at("reg32").get<bool>();
        n.const_value = jn.at("const").get<uint64_t>();
        n.inst_index = jn.at("inst_index").get<int>();
        if (n.id != static_cast<int>(g.nodes.size()))
            throw std::runtime_error("graph file: non-dense node ids");
        g.nodes.push_back(n);
    }
    for (const auto& je : j.at("edges")) {
        Edge e;
        e.src = je.at("src").get<int>();
        e.dst = je.at("dst").get<int>();
        e.kind = edge_kind_from_name(je.at("kind").get<std::string>());
        if (e.src < 0 || e.dst < 0 || e.src >= static_cast<int>(g.nodes.size()) ||
            e.dst >= static_cast<int>(g.nodes.size()))
            throw std::runtime_error("graph file: edge endpoint out of range");
        g.edges.push_back(e);
    }
    g.inst_node_of = j.at("inst_node_of").get<std::vector<int>>();
    return g;
}

void export_graph(const AsmGraph& g, const std::string& path) {
    std::string text = graph_to_json(g);
    FILE* f = fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open graph file for writing: " + path);
    size_t written = fwrite(text.data(), 1, text.size(), f);
    int rc = fclose(f);
    if (written != text.size() || rc != 0)
        throw std::runtime_error("I/O error writing graph file: " + path);
}

AsmGraph import_graph(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
        return graph_from_json(ss.str());
    } catch (const nlohmann::json::exception& e) {
        throw std::runtime_error("graph file parse error in " + path + ": " + e.what());
    }
}

}  // namespace nps::graph
