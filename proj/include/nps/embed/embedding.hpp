#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nps/nn/autoencoder.hpp"
#include "nps/nn/model.hpp"
#include "nps/snapshot/snapshot.hpp"

namespace nps::embed {

enum class AggregationMode : uint32_t { Mean = 0, Autoencoder = 1 };

struct IntervalSpec {
    uint64_t interval_length = 10000;  // dynamic instructions per interval
    uint64_t cadence = 50;             // instructions between snapshots
    uint64_t subsequence = 32;         // snapshots per mean-aggregated chunk
};

// Permutation-invariant readout: column-wise sum of node embeddings.
std::vector<double> readout(const nn::Tensor& node_emb);

// Full inference for one snapshot: embed + message passing + readout.
std::vector<double> snapshot_embedding(const nn::ModelParams& p,
                                       const snapshot::GraphSnapshot& s);

std::vector<double> aggregate_mean(const std::vector<std::vector<double>>& embs);

// Mean per chunk of `per_chunk` consecutive embeddings (last chunk may be
// shorter). Empty input yields an empty sequence.
std::vector<std::vector<double>> chunk_means(const std::vector<std::vector<double>>& embs,
                                             size_t per_chunk);

// Encoder final state over the chunk-mean sequence; order-sensitive.
std::vector<double> aggregate_autoencoder(const std::vector<std::vector<double>>& chunk_means,
                                          const nn::AutoencoderParams& ae);

struct EmbeddingMatrix {
    int h = 0;
    AggregationMode mode = AggregationMode::Mean;
    std::vector<std::vector<double>> rows;                 // one per interval
    std::vector<std::pair<uint64_t, uint64_t>> index;      // (start, length)
};

// One embedding row per whole interval of `spec.interval_length`
// instructions, aggregating the snapshots whose root position falls inside.
// Intervals without snapshots get zero rows. `l2_normalize` rescales each
// non-zero row to unit length.
EmbeddingMatrix interval_embeddings(const nn::ModelParams& p,
                                    const std::vector<snapshot::GraphSnapshot>& snaps,
                                    const IntervalSpec& spec, uint64_t total_insts,
                                    AggregationMode mode,
                                    const nn::AutoencoderParams* ae = nullptr,
                                    bool l2_normalize = false);

// Binary rows file (little-endian 32-bit floats) plus a `path + ".idx"` CSV
// mapping row -> (interval start, length).
void write_embeddings(const EmbeddingMatrix& m, const std::string& path);
EmbeddingMatrix read_embeddings(const std::string& path);

}  // namespace nps::embed
