#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "nps/embed/embedding.hpp"
#include "nps/nn/model.hpp"
#include "nps/sample/sampler.hpp"
#include "nps/util/config.hpp"

namespace nps::cli {

// Problems a user can fix (bad paths, malformed inputs, invalid settings);
// mapped to exit code 1. Anything else is an internal invariant (exit 2).
class UserError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct PipelineConfig {
    // paths
    std::string asm_path;
    std::string init_path;  // optional [regs]/[mem] initial state
    std::string workdir = "out";

    // tracing
    uint64_t max_insts = 2'000'000;

    embed::IntervalSpec interval;
    nn::ModelConfig model;
    uint64_t train_max_snapshots = 2000;  // training subsample cap (0 = all)

    // sampler
    int maxk = 20;
    double threshold = 0.9;
    int restarts = 5;

    // aggregation
    embed::AggregationMode mode = embed::AggregationMode::Mean;
    bool l2_normalize = false;
    int ae_epochs = 30;
    double ae_lr = 1e-3;

    sample::CostModelConfig cost;

    uint64_t seed = 0;

    // derived artifact paths inside workdir
    std::string trace_path() const { return workdir + "/trace.txt"; }
    std::string graph_path() const { return workdir + "/graph.json"; }
    std::string snapshots_path() const { return workdir + "/snapshots.jsonl"; }
    std::string checkpoint_path() const { return workdir + "/model.ckpt"; }
    std::string autoencoder_path() const { return workdir + "/autoencoder.bin"; }
    std::string embeddings_path() const { return workdir + "/embeddings.bin"; }
    std::string simpoints_path() const { return workdir + "/simpoints.csv"; }
    std::string cpi_path() const { return workdir + "/cpi.csv"; }
    std::string eval_nps_path() const { return workdir + "/eval_nps.csv"; }
    std::string eval_bbv_path() const { return workdir + "/eval_bbv.csv"; }
    std::string pca_path() const { return workdir + "/pca.csv"; }
};

// `preset` is "desk" (h=64/heads=4, higher lr for short runs) or "paper"
// (h=256/heads=8, lr 1e-5). Config values override the preset; `seed_override`
// (when >= 0 semantics: use has_seed flag) overrides the config seed.
PipelineConfig make_config(const util::Config& cfg, const std::string& preset);

// Individual stages; each consumes only the previous stage's artifact files.
void stage_trace(const PipelineConfig& c);
void stage_build_graph(const PipelineConfig& c);
void stage_snapshot(const PipelineConfig& c);
void stage_train(const PipelineConfig& c);
void stage_embed(const PipelineConfig& c);
void stage_sample(const PipelineConfig& c);
void stage_eval(const PipelineConfig& c);
void stage_pca(const PipelineConfig& c);

// All stages in order; removes a failing stage's partial outputs and
// rethrows with the stage name attached.
void run_pipeline(const PipelineConfig& c);

// Side-by-side report for two eval CSVs; throws UserError when the runs'
// settings (interval length, maxk) differ. Returns the report text.
std::string compare_report(const std::string& nps_eval_path,
                           const std::string& bbv_eval_path);

}  // namespace nps::cli
