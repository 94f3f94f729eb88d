#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "nps/asmfe/program.hpp"
#include "nps/graph/asmgraph.hpp"
#include "nps/trace/tracer.hpp"

namespace nps::snapshot {

constexpr int kMaxDepth = 20;

enum class NodeInit { Token, Value, Zero };

struct SnapNode {
    int id = 0;
    graph::NodeType type = graph::NodeType::Inst;
    int token = 0;
    int reg = -1;
    bool reg_is_32bit = false;
    uint64_t const_value = 0;
    int inst_index = -1;   // owning static instruction
    int static_id = -1;    // node id in the AsmGraph this was cloned from

    NodeInit init = NodeInit::Zero;
    uint64_t init_value = 0;  // when init == Value
    int depth = 0;            // 1..D for mem_ref task nodes, else 0

    graph::NodeCategory category() const { return graph::category_of(type); }
};

// Register and memory values visible at the snapshot instant.
struct DynamicContext {
    std::array<uint64_t, asmfe::kRegCount> regs{};
    std::array<bool, asmfe::kRegCount> has_reg{};
    std::vector<trace::MemRef> root_mem_refs;  // the root instruction's own refs

    static DynamicContext from_state(const trace::MachineState& s,
                                     const trace::TraceRecord& root_record);
};

struct GraphSnapshot {
    std::vector<SnapNode> nodes;
    std::vector<graph::Edge> edges;
    int root = 0;              // snapshot node id of the current instruction
    int depth_count = 0;       // D = max_allow_access after the cap
    std::array<bool, kMaxDepth> depth_mask{};
    std::vector<uint64_t> labels;  // D addresses, training only
    uint64_t root_seq = 0;         // dynamic position the snapshot was taken at

    // Incremented whenever merging control-flow paths disagreed on a task
    // node's depth and the minimum was taken.
    int depth_merge_diagnostics = 0;

    bool skippable() const { return depth_count == 0; }
    bool has_labels() const { return !labels.empty(); }
    std::vector<int> task_nodes() const;  // mem_ref node ids
};

// Memory-access counts of all maximal cycle-free code paths from `root`
// (a path ends at program exit, halt, or just before revisiting an
// instruction on the current DFS stack). Counts include the root's own
// reference.
std::vector<int> t_access(const asmfe::Program& p, int root, size_t path_limit = 1u << 22);

// Builds the snapshot rooted at instruction `root`: aligned code paths with
// exactly D = min(t_access) (capped) memory references on every maximal
// path, expanded with the owning instructions' pseudo/variable nodes and
// cross-instruction dataflow edges. Depths are assigned; node values are
// not (call node_initialize).
GraphSnapshot extract(int root, const asmfe::Program& p, const graph::AsmGraph& g,
                      int max_depth = kMaxDepth);

// Recomputes task-node depths from the instruction/control-flow subgraph:
// depth = 1 + min over paths of preceding reference count; disagreeing
// merges take the minimum and bump the diagnostic counter.
void assign_depths(GraphSnapshot& s);

void node_initialize(GraphSnapshot& s, const DynamicContext& ctx);

// Attaches the next D reference addresses (starting with the root's own)
// as labels; returns false when the trace is exhausted before D references.
bool make_labels(GraphSnapshot& s, const trace::Trace& t, uint64_t root_seq);

// Topological order over instruction nodes + control-flow edges; nullopt if
// a cycle exists (Constraint 1 violation).
std::optional<std::vector<int>> topo_sort_instructions(const GraphSnapshot& s);

std::string snapshot_to_json(const GraphSnapshot& s);
GraphSnapshot snapshot_from_json(const std::string& text);

// Snapshot corpus: one snapshot per line (JSONL).
void write_corpus(const std::vector<GraphSnapshot>& snaps, const std::string& path);
std::vector<GraphSnapshot> read_corpus(const std::string& path);

// Runs the interpreter over (p, init) and extracts one snapshot every
// `cadence` dynamic instructions, fused with the live register state and
// labeled from the future of the execution. Unlabeled (D = 0) snapshots are
// kept and flagged skippable.
std::vector<GraphSnapshot> extract_over_run(const asmfe::Program& p,
                                            const graph::AsmGraph& g,
                                            const trace::MachineState& init,
                                            uint64_t max_insts, uint64_t cadence,
                                            int max_depth = kMaxDepth);

}  // namespace nps::snapshot
