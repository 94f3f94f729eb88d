#pragma once

#include <string>
#include <vector>

#include "nps/nn/model.hpp"

namespace nps::nn {

struct TrainOptions {
    std::string checkpoint_dir;   // per-epoch checkpoints when non-empty
    double train_fraction = 0.7;  // rest held out for testing
    bool verbose = false;         // per-epoch progress on stderr
};

struct TrainResult {
    ModelParams params;
    std::vector<double> epoch_loss;  // mean training loss per completed epoch
    double train_accuracy = 0.0;
    double test_accuracy = 0.0;
    int epochs_run = 0;
    bool aborted_nan = false;  // params hold the last good epoch's state
};

// Adam (betas 0.9/0.999, eps 1e-8) at the fixed configured learning rate,
// deterministic given cfg.seed: fixed init, fixed shuffle order, fixed
// gradient accumulation order. Unlabeled or depth-0 snapshots are skipped.
TrainResult train(const std::vector<snapshot::GraphSnapshot>& snaps, const ModelConfig& cfg,
                  const TrainOptions& opts = {});

// Adam optimizer state over a list of tensors, reusable by other trainers.
class Adam {
  public:
    Adam(const std::vector<Tensor>& params, double lr);

    // grads parallel to params; updates params in place.
    void step(std::vector<Tensor>& params, const std::vector<Tensor>& grads);

  private:
    double lr_;
    long t_ = 0;
    std::vector<Tensor> m_, v_;
};

}  // namespace nps::nn
