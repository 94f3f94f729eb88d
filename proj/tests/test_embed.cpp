#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <vector>

#include "nps/asmfe/parser.hpp"
#include "nps/embed/embedding.hpp"
#include "nps/graph/asmgraph.hpp"
#include "nps/trace/tracer.hpp"

using namespace nps;
using embed::AggregationMode;
using embed::EmbeddingMatrix;
using embed::IntervalSpec;
using nn::Tensor;

namespace {

std::vector<std::vector<double>> random_seq(std::mt19937_64& rng, size_t n, size_t h) {
    std::vector<std::vector<double>> out(n, std::vector<double>(h));
    for (auto& row : out)
        for (auto& v : row)
            v = static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
    return out;
}

struct Fixture {
    asmfe::Program p;
    graph::AsmGraph g;
    std::vector<snapshot::GraphSnapshot> snaps;
    nn::ModelParams params;

    Fixture()
        : p(asmfe::parse_program("mov rcx, 0\n"
                                 "L: mov rax, [rcx*8 + 4096]\n"
                                 "mov [rcx*8 + 8192], rax\n"
                                 "inc rcx\n"
                                 "cmp rcx, 200\n"
                                 "jl L\n"
                                 "halt\n")),
          g(graph::build_graph(p)) {
        snaps = snapshot::extract_over_run(p, g, trace::MachineState{}, 100000, 25, 3);
        nn::ModelConfig cfg;
        cfg.layers = 2;
        cfg.h = 8;
        cfg.heads = 2;
        cfg.hidden = 8;
        cfg.seed = 3;
        params = nn::init_params(cfg);
    }
};

}  // namespace

TEST_CASE("readout is the column sum, additive under node duplication") {
    Tensor emb(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) emb.at(i, j) = i * 10 + j;
    auto r = embed::readout(emb);
    REQUIRE(r.size() == 4);
    for (int j = 0; j < 4; ++j) CHECK(r[j] == doctest::Approx(30 + 3 * j));

    // duplicating every row doubles the readout
    Tensor twice(6, 4);
    for (int i = 0; i < 6; ++i)
        for (int j = 0; j < 4; ++j) twice.at(i, j) = emb.at(i % 3, j);
    auto r2 = embed::readout(twice);
    for (int j = 0; j < 4; ++j) CHECK(r2[j] == doctest::Approx(2 * r[j]));

    // permutation invariance
    Tensor perm(3, 4);
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) perm.at(i, j) = emb.at(2 - i, j);
    auto r3 = embed::readout(perm);
    for (int j = 0; j < 4; ++j) CHECK(r3[j] == doctest::Approx(r[j]));
}

TEST_CASE("aggregate_mean is order-invariant") {
    std::mt19937_64 rng(5);
    auto embs = random_seq(rng, 7, 5);
    auto a = embed::aggregate_mean(embs);
    std::reverse(embs.begin(), embs.end());
    auto b = embed::aggregate_mean(embs);
    REQUIRE(a.size() == 5);
    for (size_t j = 0; j < 5; ++j) CHECK(a[j] == doctest::Approx(b[j]).epsilon(1e-12));
}

TEST_CASE("chunk_means: sizes and values, short tail included") {
    std::mt19937_64 rng(6);
    auto embs = random_seq(rng, 10, 3);
    auto chunks = embed::chunk_means(embs, 4);
    REQUIRE(chunks.size() == 3);  // 4 + 4 + 2
    for (size_t j = 0; j < 3; ++j) {
        double want = (embs[8][j] + embs[9][j]) / 2.0;
        CHECK(chunks[2][j] == doctest::Approx(want).epsilon(1e-12));
    }
    CHECK(embed::chunk_means({}, 4).empty());
}

TEST_CASE("autoencoder aggregation is order-sensitive, unlike the mean") {
    std::mt19937_64 rng(8);
    nn::AutoencoderConfig cfg;
    cfg.h = 6;
    cfg.seed = 2;
    nn::AutoencoderParams ae = nn::init_autoencoder(cfg);

    auto seq = random_seq(rng, 5, 6);
    auto fwd = embed::aggregate_autoencoder(seq, ae);
    auto rev_seq = seq;
    std::reverse(rev_seq.begin(), rev_seq.end());
    auto rev = embed::aggregate_autoencoder(rev_seq, ae);
    REQUIRE(fwd.size() == 6);
    bool differs = false;
    for (size_t j = 0; j < fwd.size(); ++j)
        if (std::abs(fwd[j] - rev[j]) > 1e-9) differs = true;
    CHECK(differs);

    // deterministic
    auto again = embed::aggregate_autoencoder(seq, ae);
    CHECK(again == fwd);
}

TEST_CASE("autoencoder training reduces reconstruction error and round-trips") {
    std::mt19937_64 rng(9);
    nn::AutoencoderConfig cfg;
    cfg.h = 6;
    cfg.seed = 4;
    cfg.epochs = 40;
    cfg.lr = 5e-3;

    std::vector<std::vector<std::vector<double>>> seqs;
    for (int i = 0; i < 4; ++i) seqs.push_back(random_seq(rng, 5, 6));

    auto r = nn::train_autoencoder(seqs, cfg);
    REQUIRE(r.epoch_loss.size() == static_cast<size_t>(cfg.epochs));
    CHECK(r.epoch_loss.back() < r.epoch_loss.front());

    nn::save_autoencoder(r.params, "ae_test.bin");
    auto back = nn::load_autoencoder("ae_test.bin");
    CHECK(back.names == r.params.names);
    auto e1 = embed::aggregate_autoencoder(seqs[0], r.params);
    auto e2 = embed::aggregate_autoencoder(seqs[0], back);
    for (size_t j = 0; j < e1.size(); ++j)
        CHECK(e2[j] == doctest::Approx(e1[j]).epsilon(1e-6));
    std::remove("ae_test.bin");
}

TEST_CASE("interval embeddings: grouping, whole intervals, zero rows") {
    Fixture f;
    IntervalSpec spec;
    spec.interval_length = 100;
    spec.cadence = 25;
    spec.subsequence = 2;

    uint64_t total = 1000;  // instructions actually executed exceed this
    EmbeddingMatrix m = embed::interval_embeddings(f.params, f.snaps, spec, total,
                                                   AggregationMode::Mean);
    CHECK(m.rows.size() == 10);  // whole intervals only
    CHECK(m.index.size() == m.rows.size());
    for (size_t i = 0; i < m.index.size(); ++i) {
        CHECK(m.index[i].first == i * 100);
        CHECK(m.index[i].second == 100);
    }

    // manual recomputation of interval 2's mean aggregate
    std::vector<std::vector<double>> members;
    for (const auto& s : f.snaps)
        if (s.root_seq >= 200 && s.root_seq < 300)
            members.push_back(embed::snapshot_embedding(f.params, s));
    REQUIRE(!members.empty());
    auto want = embed::aggregate_mean(members);
    for (size_t j = 0; j < want.size(); ++j)
        CHECK(m.rows[2][j] == doctest::Approx(want[j]).epsilon(1e-12));
}

TEST_CASE("l2 normalization rescales non-zero rows to unit length") {
    Fixture f;
    IntervalSpec spec;
    spec.interval_length = 100;
    spec.cadence = 25;
    EmbeddingMatrix m = embed::interval_embeddings(f.params, f.snaps, spec, 500,
                                                   AggregationMode::Mean, nullptr, true);
    for (const auto& row : m.rows) {
        double norm = 0;
        for (double v : row) norm += v * v;
        if (norm > 0) CHECK(std::sqrt(norm) == doctest::Approx(1.0).epsilon(1e-9));
    }
}

TEST_CASE("embedding file round-trip at float32 precision, with index") {
    Fixture f;
    IntervalSpec spec;
    spec.interval_length = 100;
    spec.cadence = 25;
    EmbeddingMatrix m = embed::interval_embeddings(f.params, f.snaps, spec, 700,
                                                   AggregationMode::Mean);
    embed::write_embeddings(m, "emb_test.bin");
    EmbeddingMatrix back = embed::read_embeddings("emb_test.bin");
    CHECK(back.h == m.h);
    CHECK(back.mode == m.mode);
    CHECK(back.index == m.index);
    REQUIRE(back.rows.size() == m.rows.size());
    for (size_t i = 0; i < m.rows.size(); ++i)
        for (size_t j = 0; j < m.rows[i].size(); ++j)
            CHECK(back.rows[i][j] == doctest::Approx(m.rows[i][j]).epsilon(1e-6));
    std::remove("emb_test.bin");
    std::remove("emb_test.bin.idx");
}

TEST_CASE("interval embeddings are deterministic") {
    Fixture f;
    IntervalSpec spec;
    spec.interval_length = 50;
    spec.cadence = 25;
    auto a = embed::interval_embeddings(f.params, f.snaps, spec, 600, AggregationMode::Mean);
    auto b = embed::interval_embeddings(f.params, f.snaps, spec, 600, AggregationMode::Mean);
    CHECK(a.rows == b.rows);
    CHECK(a.index == b.index);
}
