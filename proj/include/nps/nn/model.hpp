#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nps/nn/tape.hpp"
#include "nps/snapshot/snapshot.hpp"

namespace nps::nn {

struct ModelConfig {
    int layers = 4;
    int h = 256;        // node dimension
    int heads = 8;
    int edge_types = 5;
    int vocab = 300;
    int hidden = 256;   // prediction-head hidden width
    int max_depth = 20;
    double lr = 1e-5;
    uint64_t seed = 0;
    // trainer knobs
    int epochs = 10;
    int batch = 16;

    void validate() const;  // throws on h % heads != 0 etc.
    bool same_architecture(const ModelConfig& o) const;
};

// Named parameter tensors in a fixed, checkpoint-stable order.
struct ModelParams {
    ModelConfig cfg;
    std::vector<std::string> names;
    std::vector<Tensor> tensors;

    int index_of(const std::string& name) const;  // -1 when absent
    Tensor& operator[](const std::string& name);
    const Tensor& operator[](const std::string& name) const;
};

// Deterministic initialization from cfg.seed.
ModelParams init_params(const ModelConfig& cfg);

// Indices into a Tape for one forward pass; `params[i]` is the leaf holding
// tensor i of the ModelParams (gradients are read back from there).
struct ForwardGraph {
    std::vector<Tape::Idx> params;
    Tape::Idx node_emb = -1;   // N x h initial embeddings
    Tape::Idx final_emb = -1;  // N x h after message passing
    Tape::Idx depth_emb = -1;  // max_depth x h
    Tape::Idx logits = -1;     // max_depth x 64
    Tape::Idx loss = -1;       // scalar, only when with_loss
};

ForwardGraph build_forward(Tape& t, const ModelParams& p, const snapshot::GraphSnapshot& s,
                           bool with_loss);

// Stage entry points used by tests; `pidx` as produced by register_params.
std::vector<Tape::Idx> register_params(Tape& t, const ModelParams& p);
Tape::Idx embed_nodes(Tape& t, const snapshot::GraphSnapshot& s, const ModelParams& p,
                      const std::vector<Tape::Idx>& pidx);
Tape::Idx gat_forward(Tape& t, const snapshot::GraphSnapshot& s, Tape::Idx x,
                      const ModelParams& p, const std::vector<Tape::Idx>& pidx);
Tape::Idx select_path(Tape& t, const snapshot::GraphSnapshot& s, Tape::Idx out,
                      const ModelParams& p, const std::vector<Tape::Idx>& pidx);
Tape::Idx predict_addresses(Tape& t, Tape::Idx depth_emb, const ModelParams& p,
                            const std::vector<Tape::Idx>& pidx);

// max_depth x 64 bit matrices (LSB first); mask rows 0..D-1 are ones.
Tensor labels_tensor(const snapshot::GraphSnapshot& s, int max_depth);
Tensor mask_tensor(const snapshot::GraphSnapshot& s, int max_depth);

// bit b of row d set iff logit > 0 (logistic > 0.5); first `depth` rows.
std::vector<uint64_t> decode_addresses(const Tensor& logits, int depth);

struct ForwardOutput {
    Tensor node_embeddings;
    Tensor final_embeddings;
    Tensor depth_embeddings;
    Tensor logits;
    double loss = 0.0;
};

ForwardOutput forward(const ModelParams& p, const snapshot::GraphSnapshot& s,
                      bool with_loss = false);

// Fraction of snapshots whose D predicted addresses all match the labels in
// order; D = 0 snapshots are excluded from the denominator.
double prefetch_accuracy(const ModelParams& p,
                         const std::vector<snapshot::GraphSnapshot>& snaps);

// Versioned binary checkpoint (little-endian 32-bit float tensors). The
// loader rejects architecture mismatches when `expect` is given.
void save_checkpoint(const ModelParams& p, const std::string& path);
ModelParams load_checkpoint(const std::string& path, const ModelConfig* expect = nullptr);

}  // namespace nps::nn
