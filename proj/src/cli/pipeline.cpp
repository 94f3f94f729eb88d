#include "nps/cli/pipeline.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>

#include "nps/asmfe/parser.hpp"
#include "nps/graph/asmgraph.hpp"
#include "nps/nn/autoencoder.hpp"
#include "nps/nn/train.hpp"
#include "nps/sample/pca.hpp"
#include "nps/snapshot/snapshot.hpp"
#include "nps/trace/tracer.hpp"

namespace nps::cli {

namespace fs = std::filesystem;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw UserError("cannot open file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

asmfe::Program load_program(const PipelineConfig& c) {
    try {
        return asmfe::parse_program(read_file(c.asm_path));
    } catch (const asmfe::ParseError& e) {
        throw UserError(c.asm_path + ": " + e.what());
    }
}

trace::MachineState load_init(const PipelineConfig& c) {
    if (c.init_path.empty()) return trace::MachineState{};
    return trace::initial_state(c.init_path);
}

}  // namespace

PipelineConfig make_config(const util::Config& cfg, const std::string& preset) {
    PipelineConfig c;
    if (preset == "desk") {
        c.model.h = 64;
        c.model.heads = 4;
        c.model.layers = 4;
        c.model.hidden = 256;
        // short desk-scale runs need a faster schedule than the long-horizon
        // default rate
        c.model.lr = 1e-3;
        c.model.epochs = 8;
    } else if (preset == "paper") {
        c.model.h = 256;
        c.model.heads = 8;
        c.model.layers = 4;
        c.model.hidden = 256;
        c.model.lr = 1e-5;
        c.model.epochs = 10;
    } else if (!preset.empty()) {
        throw UserError("unknown preset: " + preset + " (expected desk or paper)");
    }

    c.asm_path = cfg.get_string("paths.asm", c.asm_path);
    c.init_path = cfg.get_string("paths.init", c.init_path);
    c.workdir = cfg.get_string("paths.workdir", c.workdir);

    c.max_insts = cfg.get_uint("trace.max_insts", c.max_insts);

    c.interval.interval_length = cfg.get_uint("interval.length", c.interval.interval_length);
    c.interval.cadence = cfg.get_uint("interval.cadence", c.interval.cadence);
    c.interval.subsequence = cfg.get_uint("interval.subsequence", c.interval.subsequence);

    c.model.layers = static_cast<int>(cfg.get_int("model.layers", c.model.layers));
    c.model.h = static_cast<int>(cfg.get_int("model.h", c.model.h));
    c.model.heads = static_cast<int>(cfg.get_int("model.heads", c.model.heads));
    c.model.vocab = static_cast<int>(cfg.get_int("model.vocab", c.model.vocab));
    c.model.hidden = static_cast<int>(cfg.get_int("model.hidden", c.model.hidden));
    c.model.max_depth = static_cast<int>(cfg.get_int("model.max_depth", c.model.max_depth));
    c.model.lr = cfg.get_double("model.lr", c.model.lr);
    c.model.epochs = static_cast<int>(cfg.get_int("model.epochs", c.model.epochs));
    c.model.batch = static_cast<int>(cfg.get_int("model.batch", c.model.batch));
    c.train_max_snapshots = cfg.get_uint("model.train_max_snapshots", c.train_max_snapshots);

    c.maxk = static_cast<int>(cfg.get_int("sampler.maxk", c.maxk));
    c.threshold = cfg.get_double("sampler.threshold", c.threshold);
    c.restarts = static_cast<int>(cfg.get_int("sampler.restarts", c.restarts));

    std::string mode = cfg.get_string("aggregation.mode", "mean");
    if (mode == "mean")
        c.mode = embed::AggregationMode::Mean;
    else if (mode == "autoencoder")
        c.mode = embed::AggregationMode::Autoencoder;
    else
        throw UserError("unknown aggregation mode: " + mode);
    c.l2_normalize = cfg.get_bool("aggregation.l2_normalize", c.l2_normalize);
    c.ae_epochs = static_cast<int>(cfg.get_int("aggregation.ae_epochs", c.ae_epochs));
    c.ae_lr = cfg.get_double("aggregation.ae_lr", c.ae_lr);

    c.cost.nop_cost = cfg.get_double("cost.nop", c.cost.nop_cost);
    c.cost.alu_cost = cfg.get_double("cost.alu", c.cost.alu_cost);
    c.cost.branch_cost = cfg.get_double("cost.branch", c.cost.branch_cost);
    c.cost.mem_hit_cost = cfg.get_double("cost.mem_hit", c.cost.mem_hit_cost);
    c.cost.mem_miss_cost = cfg.get_double("cost.mem_miss", c.cost.mem_miss_cost);
    c.cost.cache_lines = cfg.get_uint("cost.cache_lines", c.cost.cache_lines);
    c.cost.line_bytes = cfg.get_uint("cost.line_bytes", c.cost.line_bytes);

    if (!cfg.has("run.seed") && !cfg.has("seed"))
        throw UserError("config must set a seed (run.seed); wall-clock defaults are not used");
    c.seed = cfg.has("run.seed") ? cfg.get_uint("run.seed", 0) : cfg.get_uint("seed", 0);
    c.model.seed = c.seed;

    if (c.asm_path.empty()) throw UserError("config must set paths.asm");
    if (!fs::exists(c.asm_path)) throw UserError("assembly file does not exist: " + c.asm_path);
    if (!c.init_path.empty() && !fs::exists(c.init_path))
        throw UserError("initial-state file does not exist: " + c.init_path);
    try {
        c.model.validate();
    } catch (const std::exception& e) {
        throw UserError(e.what());
    }
    return c;
}

void stage_trace(const PipelineConfig& c) {
    asmfe::Program p = load_program(c);
    trace::Trace t = trace::run(p, load_init(c), c.max_insts);
    trace::write_trace(t, c.trace_path());
}

void stage_build_graph(const PipelineConfig& c) {
    asmfe::Program p = load_program(c);
    graph::export_graph(graph::build_graph(p), c.graph_path());
}

void stage_snapshot(const PipelineConfig& c) {
    asmfe::Program p = load_program(c);
    graph::AsmGraph g = graph::import_graph(c.graph_path());
    auto snaps = snapshot::extract_over_run(p, g, load_init(c), c.max_insts,
                                            c.interval.cadence, c.model.max_depth);
    snapshot::write_corpus(snaps, c.snapshots_path());
}

void stage_train(const PipelineConfig& c) {
    auto snaps = snapshot::read_corpus(c.snapshots_path());
    // Subsample evenly to bound training time on long executions.
    std::vector<snapshot::GraphSnapshot> subset;
    if (c.train_max_snapshots > 0 && snaps.size() > c.train_max_snapshots) {
        double stride = static_cast<double>(snaps.size()) /
                        static_cast<double>(c.train_max_snapshots);
        for (uint64_t i = 0; i < c.train_max_snapshots; ++i)
            subset.push_back(snaps[static_cast<size_t>(i * stride)]);
    } else {
        subset = std::move(snaps);
    }
    nn::TrainOptions opts;
    nn::TrainResult result = nn::train(subset, c.model, opts);
    nn::save_checkpoint(result.params, c.checkpoint_path());
}

void stage_embed(const PipelineConfig& c) {
    auto snaps = snapshot::read_corpus(c.snapshots_path());
    nn::ModelParams params = nn::load_checkpoint(c.checkpoint_path(), &c.model);
    trace::Trace t = trace::read_trace(c.trace_path());
    uint64_t total = t.records.size();

    if (c.mode == embed::AggregationMode::Autoencoder) {
        // Train the sequence autoencoder on per-interval chunk-mean
        // sequences, then aggregate with it.
        embed::EmbeddingMatrix mean_rows = embed::interval_embeddings(
            params, snaps, c.interval, total, embed::AggregationMode::Mean);
        std::vector<std::vector<std::vector<double>>> sequences;
        uint64_t n_intervals = total / c.interval.interval_length;
        std::vector<std::vector<std::vector<double>>> per_interval(n_intervals);
        for (const auto& s : snaps) {
            uint64_t iv = s.root_seq / c.interval.interval_length;
            if (iv < n_intervals)
                per_interval[iv].push_back(embed::snapshot_embedding(params, s));
        }
        for (auto& embs : per_interval)
            if (!embs.empty())
                sequences.push_back(
                    embed::chunk_means(embs, static_cast<size_t>(c.interval.subsequence)));
        nn::AutoencoderConfig ae_cfg{c.model.h, c.ae_lr, c.ae_epochs, c.seed};
        nn::AutoencoderTrainResult ae = nn::train_autoencoder(sequences, ae_cfg);
        nn::save_autoencoder(ae.params, c.autoencoder_path());
        embed::EmbeddingMatrix m = embed::interval_embeddings(
            params, snaps, c.interval, total, embed::AggregationMode::Autoencoder, &ae.params,
            c.l2_normalize);
        embed::write_embeddings(m, c.embeddings_path());
    } else {
        embed::EmbeddingMatrix m =
            embed::interval_embeddings(params, snaps, c.interval, total,
                                       embed::AggregationMode::Mean, nullptr, c.l2_normalize);
        embed::write_embeddings(m, c.embeddings_path());
    }
}

void stage_sample(const PipelineConfig& c) {
    embed::EmbeddingMatrix m = embed::read_embeddings(c.embeddings_path());
    sample::ClusterModel model =
        sample::kmeans_bic(m.rows, c.maxk, c.seed, c.restarts, c.threshold);
    sample::write_simpoints(model, c.simpoints_path());
}

void stage_eval(const PipelineConfig& c) {
    asmfe::Program p = load_program(c);
    trace::Trace t = trace::read_trace(c.trace_path());
    std::vector<double> cpi =
        sample::synthetic_cpi(t, p, c.interval.interval_length, c.cost);
    sample::write_cpi(cpi, c.cpi_path());

    embed::EmbeddingMatrix m = embed::read_embeddings(c.embeddings_path());
    if (m.rows.size() != cpi.size())
        throw std::runtime_error("eval: embedding rows do not match CPI intervals");
    sample::ClusterModel nps_model =
        sample::kmeans_bic(m.rows, c.maxk, c.seed, c.restarts, c.threshold);
    sample::EvalRow nps_row{"nps",
                            sample::mape(cpi, nps_model),
                            sample::mean_error(cpi, nps_model),
                            nps_model.k,
                            c.maxk,
                            c.interval.interval_length,
                            c.seed};
    sample::write_eval({nps_row}, c.eval_nps_path());

    auto bbv = sample::bbv_profile(t, p, c.interval.interval_length);
    sample::ClusterModel bbv_model =
        sample::kmeans_bic(bbv, c.maxk, c.seed, c.restarts, c.threshold);
    sample::EvalRow bbv_row{"bbv",
                            sample::mape(cpi, bbv_model),
                            sample::mean_error(cpi, bbv_model),
                            bbv_model.k,
                            c.maxk,
                            c.interval.interval_length,
                            c.seed};
    sample::write_eval({bbv_row}, c.eval_bbv_path());
}

void stage_pca(const PipelineConfig& c) {
    embed::EmbeddingMatrix m = embed::read_embeddings(c.embeddings_path());
    if (m.rows.size() < 2) throw UserError("pca: need at least 2 embedding rows");
    sample::Pca2 pca = sample::pca2(m.rows);
    if (pca.degenerate)
        std::fprintf(stderr, "warning: embeddings are rank-0; PCA components are zero\n");
    std::vector<int> clusters;
    const std::vector<int>* cluster_ptr = nullptr;
    if (fs::exists(c.simpoints_path())) {
        sample::ClusterModel model =
            sample::kmeans_bic(m.rows, c.maxk, c.seed, c.restarts, c.threshold);
        clusters = model.assignment;
        cluster_ptr = &clusters;
    }
    sample::write_pca_csv(pca, cluster_ptr, c.pca_path());
}

void run_pipeline(const PipelineConfig& c) {
    fs::create_directories(c.workdir);
    struct Stage {
        const char* name;
        std::function<void(const PipelineConfig&)> fn;
        std::vector<std::string> outputs;
    };
    const std::vector<Stage> stages = {
        {"trace", stage_trace, {c.trace_path()}},
        {"build-graph", stage_build_graph, {c.graph_path()}},
        {"snapshot", stage_snapshot, {c.snapshots_path()}},
        {"train", stage_train, {c.checkpoint_path()}},
        {"embed",
         stage_embed,
         {c.embeddings_path(), c.embeddings_path() + ".idx", c.autoencoder_path()}},
        {"sample", stage_sample, {c.simpoints_path()}},
        {"eval", stage_eval, {c.cpi_path(), c.eval_nps_path(), c.eval_bbv_path()}},
        {"pca", stage_pca, {c.pca_path()}},
    };
    for (const auto& stage : stages) {
        try {
            stage.fn(c);
        } catch (const std::exception& e) {
            for (const auto& out : stage.outputs) {
                std::error_code ec;
                fs::remove(out, ec);
            }
            throw std::runtime_error(std::string("stage ") + stage.name + " failed: " +
                                     e.what());
        }
    }
}

std::string compare_report(const std::string& nps_eval_path,
                           const std::string& bbv_eval_path) {
    std::vector<sample::EvalRow> nps, bbv;
    try {
        nps = sample::read_eval(nps_eval_path);
        bbv = sample::read_eval(bbv_eval_path);
    } catch (const std::exception& e) {
        throw UserError(e.what());
    }
    if (nps.empty() || bbv.empty()) throw UserError("compare: empty eval file");

    std::ostringstream out;
    out << "method,mape,me,k,maxk,interval_length\n";
    for (size_t i = 0; i < std::max(nps.size(), bbv.size()); ++i) {
        if (i >= nps.size() || i >= bbv.size())
            throw UserError("compare: eval files have different row counts");
        const auto& a = nps[i];
        const auto& b = bbv[i];
        if (a.interval_length != b.interval_length || a.maxk != b.maxk)
            throw UserError("compare: eval rows come from different settings");
        char buf[256];
        std::snprintf(buf, sizeof buf, "%s,%.12f,%.12f,%d,%d,%llu\n", a.method.c_str(),
                      a.mape, a.me, a.k, a.maxk,
                      static_cast<unsigned long long>(a.interval_length));
        out << buf;
        std::snprintf(buf, sizeof buf, "%s,%.12f,%.12f,%d,%d,%llu\n", b.method.c_str(),
                      b.mape, b.me, b.k, b.maxk,
                      static_cast<unsigned long long>(b.interval_length));
        out << buf;
        double reduction =
            b.mape > 0 ? (b.mape - a.mape) / b.mape * 100.0 : 0.0;
        std::snprintf(buf, sizeof buf, "relative MAPE reduction: %.2f%%\n", reduction);
        out << buf;
    }
    return out.str();
}

}  // namespace nps::cli
