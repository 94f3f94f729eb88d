#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nps/asmfe/program.hpp"
#include "nps/trace/tracer.hpp"

namespace nps::sample {

struct ClusterModel {
    int k = 0;
    std::vector<std::vector<double>> centroids;  // k x d
    std::vector<int> assignment;                 // interval -> cluster
    std::vector<int> representative;             // cluster -> interval index
    std::vector<double> bic_scores;              // index i holds the score for k = i+1
    double inertia = 0.0;
};

// One k-means run at fixed k: k-means++ seeding, Lloyd iterations until the
// largest centroid shift < 1e-8 or 300 iterations, best of `restarts` by
// inertia (ties keep the earlier restart). inertia_trace records the
// objective after each Lloyd assignment step of the winning restart.
struct KmeansRun {
    std::vector<std::vector<double>> centroids;
    std::vector<int> assignment;
    double inertia = 0.0;
    std::vector<double> inertia_trace;
};

KmeansRun kmeans(const std::vector<std::vector<double>>& points, int k, uint64_t seed,
                 int restarts = 5);

// Spherical-Gaussian BIC with p = k(d+1) free parameters.
double bic_score(const std::vector<std::vector<double>>& points, const KmeansRun& run);

// Runs k = 1..min(maxk, n), scores each with BIC, and picks the smallest k
// whose min-max-normalized score reaches `threshold` of the best.
ClusterModel kmeans_bic(const std::vector<std::vector<double>>& points, int maxk,
                        uint64_t seed, int restarts = 5, double threshold = 0.9);

// Basic block vectors per whole interval: every executed instruction counts
// one toward its block (a full block execution contributes its length),
// normalized to sum 1. The partial tail interval is dropped. Row dimension =
// basic block count of `p`.
std::vector<std::vector<double>> bbv_profile(const trace::Trace& t, const asmfe::Program& p,
                                             uint64_t interval_length);

// Metric cores against an explicit per-interval representative CPI series:
// mape_vs = (1/n) sum |rep_i - CPI_i| / CPI_i,
// mean_error_vs = |sum (rep_i - CPI_i)| / sum CPI_i.
double mape_vs(const std::vector<double>& cpi, const std::vector<double>& rep);
double mean_error_vs(const std::vector<double>& cpi, const std::vector<double>& rep);

// The same metrics with the representative CPI taken from each interval's
// cluster representative.
double mape(const std::vector<double>& cpi, const ClusterModel& m);
double mean_error(const std::vector<double>& cpi, const ClusterModel& m);

// Baseline for comparison: uniformly random cluster assignment into k groups
// with a random member as each representative.
double random_representative_mape(const std::vector<double>& cpi, int k, uint64_t seed);

// Per-instruction-class costs plus a direct-mapped cache penalty on memory
// references. Cache state persists across interval boundaries.
struct CostModelConfig {
    double nop_cost = 1.0;
    double alu_cost = 1.0;
    double branch_cost = 2.0;
    double mem_hit_cost = 2.0;    // added to alu_cost on a cache hit
    double mem_miss_cost = 20.0;  // added to alu_cost on a cache miss
    uint64_t cache_lines = 64;
    uint64_t line_bytes = 64;
};

// CPI per whole interval; the partial tail interval is dropped.
std::vector<double> synthetic_cpi(const trace::Trace& t, const asmfe::Program& p,
                                  uint64_t interval_length, const CostModelConfig& cfg);

// simpoints.csv rows: cluster, representative interval, weight = size/n.
void write_simpoints(const ClusterModel& m, const std::string& path);

// eval.csv: one row of metrics plus the settings that produced them.
struct EvalRow {
    std::string method;  // "nps" or "bbv"
    double mape = 0.0;
    double me = 0.0;
    int k = 0;
    int maxk = 0;
    uint64_t interval_length = 0;
    uint64_t seed = 0;
};

void write_eval(const std::vector<EvalRow>& rows, const std::string& path);
std::vector<EvalRow> read_eval(const std::string& path);

void write_cpi(const std::vector<double>& cpi, const std::string& path);
std::vector<double> read_cpi(const std::string& path);

}  // namespace nps::sample
