#include <doctest.h>

#include <random>

#include "nps/asmfe/parser.hpp"
#include "nps/graph/asmgraph.hpp"
#include "support/random_programs.hpp"
#include "support/reaching_defs_oracle.hpp"

using namespace nps;
using graph::AsmGraph;
using graph::EdgeKind;
using graph::NodeCategory;
using graph::NodeType;

namespace {

asmfe::Program prog(const std::string& src) { return asmfe::parse_program(src); }

int count_edges(const AsmGraph& g, EdgeKind k) {
    int n = 0;
    for (const auto& e : g.edges)
        if (e.kind == k) ++n;
    return n;
}

int count_nodes(const AsmGraph& g, NodeType t) {
    int n = 0;
    for (const auto& nd : g.nodes)
        if (nd.type == t) ++n;
    return n;
}

}  // namespace

TEST_CASE("backbone: one instruction node per instruction, control-flow edges") {
    auto p = prog(
        "mov rax, 1\n"
        "cmp rax, 2\n"
        "jl L\n"
        "nop\n"
        "L: halt\n");
    AsmGraph g = graph::build_backbone(p);
    REQUIRE(g.inst_node_of.size() == 5);
    for (int i = 0; i < 5; ++i) {
        const auto& n = g.nodes[g.inst_node_of[i]];
        CHECK(n.type == NodeType::Inst);
        CHECK(n.inst_index == i);
        CHECK(n.token == graph::token_of_mnemonic(p.instructions[i].mnemonic));
    }
    // 4 fallthroughs (halt has none) + 1 branch edge
    CHECK(count_edges(g, EdgeKind::CfFallthrough) == 4);
    CHECK(count_edges(g, EdgeKind::CfBranch) == 1);
}

TEST_CASE("cfg_successors") {
    auto p = prog(
        "cmp rax, 1\n"
        "je L\n"
        "jmp M\n"
        "L: nop\n"
        "M: halt\n");
    CHECK(graph::cfg_successors(p, 0) == std::vector<int>{1});
    CHECK(graph::cfg_successors(p, 1) == std::vector<int>{2, 3});  // fallthrough, branch
    CHECK(graph::cfg_successors(p, 2) == std::vector<int>{4});     // unconditional
    CHECK(graph::cfg_successors(p, 4) == std::vector<int>{});      // halt
}

TEST_CASE("dataflow matches the reaching-definitions oracle on fixed programs") {
    SUBCASE("straight line def-use") {
        auto p = prog(
            "mov rax, 1\n"
            "add rbx, rax\n"
            "halt\n");
        AsmGraph g = graph::build_graph(p);
        auto got = testsupport::reaching_defs_from_graph(p, g);
        CHECK(got == testsupport::reaching_defs_oracle(p));
        CHECK(got.count({1, 0, 0}) == 1);  // add reads rax defined by mov
    }
    SUBCASE("two defs reach a use through a diamond") {
        auto p = prog(
            "cmp rcx, 0\n"
            "je L\n"
            "mov rax, 1\n"
            "jmp M\n"
            "L: mov rax, 2\n"
            "M: add rbx, rax\n"
            "halt\n");
        AsmGraph g = graph::build_graph(p);
        auto got = testsupport::reaching_defs_from_graph(p, g);
        auto want = testsupport::reaching_defs_oracle(p);
        CHECK(got == want);
        CHECK(got.count({5, 0, 2}) == 1);
        CHECK(got.count({5, 0, 4}) == 1);
    }
    SUBCASE("loop-carried definition reaches around the back edge") {
        auto p = prog(
            "mov rcx, 0\n"
            "L: inc rcx\n"
            "cmp rcx, 4\n"
            "jl L\n"
            "halt\n");
        AsmGraph g = graph::build_graph(p);
        auto got = testsupport::reaching_defs_from_graph(p, g);
        CHECK(got == testsupport::reaching_defs_oracle(p));
        CHECK(got.count({1, 2, 1}) == 1);  // inc reads its own previous write
        CHECK(got.count({1, 2, 0}) == 1);  // and the initial mov
    }
    SUBCASE("flag producers feed conditional branches") {
        auto p = prog(
            "cmp rax, 1\n"
            "test rbx, rbx\n"
            "jne L\n"
            "L: halt\n");
        AsmGraph g = graph::build_graph(p);
        auto got = testsupport::reaching_defs_from_graph(p, g);
        CHECK(got == testsupport::reaching_defs_oracle(p));
        // cmp's flags are killed by test before the jump reads them
        CHECK(got.count({2, graph::kFlagsId, 1}) == 1);
        CHECK(got.count({2, graph::kFlagsId, 0}) == 0);
    }
}

TEST_CASE("dataflow matches the oracle on 300 random programs") {
    std::mt19937_64 rng(2024);
    for (int i = 0; i < 300; ++i) {
        auto p = testsupport::random_program(rng);
        AsmGraph g = graph::build_graph(p);
        auto got = testsupport::reaching_defs_from_graph(p, g);
        auto want = testsupport::reaching_defs_oracle(p);
        if (got != want) {
            CAPTURE(asmfe::pretty_print(p));
            REQUIRE(got == want);
        }
    }
}

TEST_CASE("32-bit register reads go through a masking pseudo node") {
    auto p64 = prog("mov rax, 1\nadd rbx, rax\nhalt\n");
    auto p32 = prog("mov rax, 1\nadd rbx, eax\nhalt\n");
    AsmGraph g64 = graph::build_graph(p64);
    AsmGraph g32 = graph::build_graph(p32);
    CHECK(count_nodes(g32, NodeType::BitAnd) == count_nodes(g64, NodeType::BitAnd) + 1);

    // the mask feeds the consumer: bitand has an outgoing dataflow edge
    bool found = false;
    for (const auto& e : g32.edges)
        if (g32.nodes[e.src].type == NodeType::BitAnd) found = true;
    CHECK(found);
}

TEST_CASE("memory operands build an address expression tree and a mem_ref") {
    auto p = prog("mov rcx, [rax + rbx*8 + 16]\nhalt\n");
    AsmGraph g = graph::build_graph(p);
    CHECK(count_nodes(g, NodeType::MemRef) == 1);
    CHECK(count_nodes(g, NodeType::Mem) == 1);
    CHECK(count_nodes(g, NodeType::Times) == 1);
    CHECK(count_nodes(g, NodeType::Plus) >= 1);
    CHECK(count_nodes(g, NodeType::Const) >= 2);  // scale and displacement

    // the owning instruction points at its mem_ref
    bool inst_to_ref = false;
    for (const auto& e : g.edges)
        if (g.nodes[e.src].type == NodeType::Inst &&
            g.nodes[e.dst].type == NodeType::MemRef &&
            e.kind == EdgeKind::CfFallthrough)
            inst_to_ref = true;
    CHECK(inst_to_ref);
}

TEST_CASE("lea builds the address tree but no mem_ref") {
    auto p = prog("lea rcx, [rax + 8]\nhalt\n");
    AsmGraph g = graph::build_graph(p);
    CHECK(count_nodes(g, NodeType::MemRef) == 0);
    CHECK(count_nodes(g, NodeType::Mem) == 0);
    CHECK(count_nodes(g, NodeType::Plus) == 1);
}

TEST_CASE("node categories partition the type space") {
    CHECK(graph::category_of(NodeType::Inst) == NodeCategory::Instruction);
    for (NodeType t : {NodeType::Plus, NodeType::Minus, NodeType::Times,
                       NodeType::BitAnd, NodeType::BitOr, NodeType::MemRef})
        CHECK(graph::category_of(t) == NodeCategory::Pseudo);
    for (NodeType t : {NodeType::Tmp, NodeType::Reg, NodeType::Const, NodeType::Mem})
        CHECK(graph::category_of(t) == NodeCategory::Variable);
}

TEST_CASE("token vocabulary is stable and within budget") {
    CHECK(graph::token_of_mnemonic(asmfe::Mnemonic::Mov) == 0);
    CHECK(graph::token_of_type(NodeType::Plus) >= asmfe::kMnemonicCount);
    CHECK(graph::kVocabUsed <= 300);
}

TEST_CASE("json round-trip preserves the graph exactly") {
    std::mt19937_64 rng(7);
    auto p = testsupport::random_program(rng);
    AsmGraph g = graph::build_graph(p);
    AsmGraph back = graph::graph_from_json(graph::graph_to_json(g));
    REQUIRE(back.nodes.size() == g.nodes.size());
    REQUIRE(back.edges.size() == g.edges.size());
    CHECK(back.inst_node_of == g.inst_node_of);
    CHECK(back.structural_hash() == g.structural_hash());
    for (size_t i = 0; i < g.nodes.size(); ++i) {
        CHECK(back.nodes[i].type == g.nodes[i].type);
        CHECK(back.nodes[i].token == g.nodes[i].token);
        CHECK(back.nodes[i].reg == g.nodes[i].reg);
        CHECK(back.nodes[i].const_value == g.nodes[i].const_value);
        CHECK(back.nodes[i].inst_index == g.nodes[i].inst_index);
    }
    CHECK(back.edges == g.edges);
}

TEST_CASE("structural hash distinguishes different programs") {
    auto a = graph::build_graph(prog("mov rax, 1\nhalt\n"));
    auto b = graph::build_graph(prog("mov rax, 2\nhalt\n"));
    auto c = graph::build_graph(prog("mov rax, 1\nhalt\n"));
    CHECK(a.structural_hash() == c.structural_hash());
    CHECK(a.structural_hash() != b.structural_hash());
}

TEST_CASE("graph construction is deterministic") {
    std::mt19937_64 rng(99);
    std::string src = testsupport::random_program_source(rng);
    AsmGraph a = graph::build_graph(prog(src));
    AsmGraph b = graph::build_graph(prog(src));
    CHECK(a.structural_hash() == b.structural_hash());
    CHECK(graph::graph_to_json(a) == graph::graph_to_json(b));
}
