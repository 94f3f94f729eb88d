#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nps/nn/tape.hpp"

namespace nps::nn {

// Gated recurrent sequence autoencoder: a GRU encoder compresses an ordered
// sequence of h-vectors into its final hidden state; a GRU decoder
// (consuming its own previous reconstruction) rebuilds the sequence, trained
// on reconstruction MSE.
struct AutoencoderConfig {
    int h = 64;
    double lr = 1e-3;
    int epochs = 50;
    uint64_t seed = 0;
};

struct AutoencoderParams {
    AutoencoderConfig cfg;
    std::vector<std::string> names;
    std::vector<Tensor> tensors;

    int index_of(const std::string& name) const;
    const Tensor& operator[](const std::string& name) const;
};

AutoencoderParams init_autoencoder(const AutoencoderConfig& cfg);

// Encoder final hidden state for one sequence (each element an h-vector).
std::vector<double> encode_sequence(const AutoencoderParams& p,
                                    const std::vector<std::vector<double>>& seq);

// Reconstruction MSE of one sequence under the current parameters.
double reconstruction_error(const AutoencoderParams& p,
                            const std::vector<std::vector<double>>& seq);

struct AutoencoderTrainResult {
    AutoencoderParams params;
    std::vector<double> epoch_loss;
};

AutoencoderTrainResult train_autoencoder(
    const std::vector<std::vector<std::vector<double>>>& sequences,
    const AutoencoderConfig& cfg);

void save_autoencoder(const AutoencoderParams& p, const std::string& path);
AutoencoderParams load_autoencoder(const std::string& path);

}  // namespace nps::nn
