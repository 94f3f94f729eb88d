#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "nps/asmfe/parser.hpp"
#include "nps/cli/pipeline.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUser = 1;
constexpr int kExitInternal = 2;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::string seed;  // raw text; empty = not given
};

void add_common(CLI::App* cmd, CommonOpts& opts, bool config_required) {
    auto* c = cmd->add_option("--config", opts.config_path, "pipeline config file");
    if (config_required) c->required();
    cmd->add_option("--preset", opts.preset, "desk or paper parameter preset")
        ->check(CLI::IsMember({"desk", "paper"}));
    cmd->add_option("--seed", opts.seed, "override the config seed");
}

nps::cli::PipelineConfig build_config(const CommonOpts& opts) {
    nps::util::Config cfg;
    if (!opts.config_path.empty()) {
        try {
            cfg = nps::util::Config::load(opts.config_path);
        } catch (const std::exception& e) {
            throw nps::cli::UserError(e.what());
        }
    }
    if (!opts.seed.empty()) cfg.set("run.seed", opts.seed);
    return nps::cli::make_config(cfg, opts.preset);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"program sampling via typed execution graphs and graph attention"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string parse_path;
    std::string compare_nps, compare_bbv;

    auto* cmd_parse = app.add_subcommand("parse", "parse an assembly file and echo it");
    cmd_parse->add_option("asm", parse_path, "assembly file")->required();

    auto* cmd_trace = app.add_subcommand("trace", "execute the program and write the trace");
    auto* cmd_graph = app.add_subcommand("build-graph", "build the typed execution graph");
    auto* cmd_snapshot = app.add_subcommand("snapshot", "extract graph snapshots");
    auto* cmd_train = app.add_subcommand("train", "train the address-prediction model");
    auto* cmd_embed = app.add_subcommand("embed", "compute interval embeddings");
    auto* cmd_sample = app.add_subcommand("sample", "cluster embeddings into simpoints");
    auto* cmd_eval = app.add_subcommand("eval", "evaluate sampling error against the cost model");
    auto* cmd_pca = app.add_subcommand("pca", "export a 2-D PCA projection of the embeddings");
    auto* cmd_pipeline = app.add_subcommand("pipeline", "run every stage in order");
    auto* cmd_compare = app.add_subcommand("compare", "compare two eval CSVs side by side");
    cmd_compare->add_option("nps_eval", compare_nps, "eval CSV of the graph-embedding run")
        ->required();
    cmd_compare->add_option("bbv_eval", compare_bbv, "eval CSV of the BBV baseline run")
        ->required();

    for (CLI::App* cmd : {cmd_trace, cmd_graph, cmd_snapshot, cmd_train, cmd_embed,
                          cmd_sample, cmd_eval, cmd_pca, cmd_pipeline})
        add_common(cmd, opts, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUser;
    }

    try {
        if (cmd_parse->parsed()) {
            std::ifstream in(parse_path, std::ios::binary);
            if (!in) throw nps::cli::UserError("cannot open file: " + parse_path);
            std::ostringstream ss;
            ss << in.rdbuf();
            nps::asmfe::Program p;
            try {
                p = nps::asmfe::parse_program(ss.str());
            } catch (const nps::asmfe::ParseError& e) {
                throw nps::cli::UserError(parse_path + ": " + e.what());
            }
            std::cout << nps::asmfe::pretty_print(p);
            return kExitOk;
        }
        if (cmd_compare->parsed()) {
            std::cout << nps::cli::compare_report(compare_nps, compare_bbv);
            return kExitOk;
        }

        nps::cli::PipelineConfig cfg = build_config(opts);
        std::filesystem::create_directories(cfg.workdir);
        if (cmd_trace->parsed()) nps::cli::stage_trace(cfg);
        if (cmd_graph->parsed()) nps::cli::stage_build_graph(cfg);
        if (cmd_snapshot->parsed()) nps::cli::stage_snapshot(cfg);
        if (cmd_train->parsed()) nps::cli::stage_train(cfg);
        if (cmd_embed->parsed()) nps::cli::stage_embed(cfg);
        if (cmd_sample->parsed()) nps::cli::stage_sample(cfg);
        if (cmd_eval->parsed()) nps::cli::stage_eval(cfg);
        if (cmd_pca->parsed()) nps::cli::stage_pca(cfg);
        if (cmd_pipeline->parsed()) nps::cli::run_pipeline(cfg);
        return kExitOk;
    } catch (const nps::cli::UserError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUser;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return kExitInternal;
    }
}
