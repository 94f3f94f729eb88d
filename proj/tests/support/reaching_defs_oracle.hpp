#pragma once

#include <set>
#include <tuple>

#include "nps/asmfe/program.hpp"
#include "nps/graph/asmgraph.hpp"

namespace nps::testsupport {

// (consumer instruction, register-or-flags id, producer instruction).
using DefTriple = std::tuple<int, int, int>;

// Brute-force reaching definitions by iterative forward dataflow to a fixed
// point (gen/kill over CFG predecessors) — an independent oracle for the
// producer bookkeeping, which works backwards from each producer instead.
std::set<DefTriple> reaching_defs_oracle(const asmfe::Program& p);

// The same triples as materialized in a built graph's df_compute edges:
// producer instruction node -> register read site (or conditional jump node
// for flag dependences).
std::set<DefTriple> reaching_defs_from_graph(const asmfe::Program& p,
                                             const graph::AsmGraph& g);

}  // namespace nps::testsupport
