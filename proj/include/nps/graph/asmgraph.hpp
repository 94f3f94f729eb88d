#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nps/asmfe/program.hpp"

namespace nps::graph {

enum class NodeCategory { Instruction, Pseudo, Variable };

enum class NodeType {
    Inst,                               // instruction
    Plus, Minus, Times, BitAnd, BitOr,  // pseudo
    MemRef,                             // pseudo
    Tmp, Reg, Const, Mem,               // variable
};

enum class EdgeKind {
    CfFallthrough,
    CfBranch,
    DfSrcLeft,
    DfSrcRight,
    DfCompute,
};

constexpr int kEdgeKindCount = 5;

NodeCategory category_of(NodeType t);
const char* node_type_name(NodeType t);
const char* edge_kind_name(EdgeKind k);

// Stable token vocabulary: 20 mnemonics, then pseudo type tags, then
// variable type tags. Well under the 300-entry budget.
int token_of_mnemonic(asmfe::Mnemonic m);
int token_of_type(NodeType t);  // pseudo/variable type tag token
constexpr int kVocabUsed = asmfe::kMnemonicCount + 10;

struct Node {
    int id = 0;
    NodeType type = NodeType::Inst;
    int token = 0;              // vocab id
    int reg = -1;               // Reg index for NodeType::Reg
    bool reg_is_32bit = false;
    uint64_t const_value = 0;   // literal for NodeType::Const
    int inst_index = -1;        // owning instruction

    NodeCategory category() const { return category_of(type); }
};

struct Edge {
    int src = 0;
    int dst = 0;
    EdgeKind kind = EdgeKind::CfFallthrough;

    bool operator==(const Edge&) const = default;
};

struct AsmGraph {
    std::vector<Node> nodes;
    std::vector<Edge> edges;
    std::vector<int> inst_node_of;  // instruction index -> node id

    int add_node(Node n);
    void add_edge(int src, int dst, EdgeKind kind);

    uint64_t structural_hash() const;
};

// Per-instruction register/flag producer bookkeeping. Register ids are
// 0..15; kFlagsId stands for the cmp/test flag state.
constexpr int kFlagsId = asmfe::kRegCount;

struct ProducerBook {
    // u[k] = set of (register-or-flags id, producer instruction index).
    std::vector<std::vector<std::pair<int, int>>> u;

    bool contains(int consumer, int reg, int producer) const;
};

AsmGraph build_backbone(const asmfe::Program& p);
ProducerBook compute_producers(const asmfe::Program& p, const AsmGraph& g);
void grow_dataflow(const asmfe::Program& p, AsmGraph& g, const ProducerBook& book);

// Convenience: backbone + producers + dataflow.
AsmGraph build_graph(const asmfe::Program& p);

// CFG successor indices of instruction i (fallthrough first, then branch).
std::vector<int> cfg_successors(const asmfe::Program& p, int i);

void export_graph(const AsmGraph& g, const std::string& path);
AsmGraph import_graph(const std::string& path);
std::string graph_to_json(const AsmGraph& g);
AsmGraph graph_from_json(const std::string& text);

}  // namespace nps::graph
