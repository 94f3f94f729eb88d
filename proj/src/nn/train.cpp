#include "nps/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <stdexcept>

namespace nps::nn {

Adam::Adam(const std::vector<Tensor>& params, double lr) : lr_(lr) {
    for (const auto& p : params) {
        m_.emplace_back(p.rows, p.cols);
        v_.emplace_back(p.rows, p.cols);
    }
}

void Adam::step(std::vector<Tensor>& params, const std::vector<Tensor>& grads) {
    constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
    ++t_;
    double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (size_t i = 0; i < params.size(); ++i) {
        double* p = params[i].data.data();
        const double* g = grads[i].data.data();
        double* m = m_[i].data.data();
        double* v = v_[i].data.data();
        for (size_t j = 0; j < params[i].size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            p[j] -= lr_ * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
        }
    }
}

namespace {

double accuracy_over(const ModelParams& p,
                     const std::vector<const snapshot::GraphSnapshot*>& set) {
    size_t total = 0, hit = 0;
    for (const auto* s : set) {
        if (s->depth_count == 0 || !s->has_labels()) continue;
        ++total;
        int depth = std::min(s->depth_count, p.cfg.max_depth);
        ForwardOutput out = forward(p, *s, false);
        std::vector<uint64_t> pred = decode_addresses(out.logits, depth);
        bool ok = static_cast<int>(s->labels.size()) >= depth;
        for (int d = 0; ok && d < depth; ++d) ok = pred[d] == s->labels[d];
        if (ok) ++hit;
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace

TrainResult train(const std::vector<snapshot::GraphSnapshot>& snaps, const ModelConfig& cfg,
                  const TrainOptions& opts) {
    cfg.validate();
    std::vector<const snapshot::GraphSnapshot*> usable;
    for (const auto& s : snaps)
        if (s.depth_count > 0 && s.has_labels()) usable.push_back(&s);
    if (usable.empty()) throw std::invalid_argument("train: no labeled snapshots");

    std::mt19937_64 rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
    std::vector<size_t> order(usable.size());
    std::iota(order.begin(), order.end(), size_t{0});
    for (size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng() % i]);

    size_t n_train = std::max<size_t>(
        1, static_cast<size_t>(opts.train_fraction * static_cast<double>(order.size())));
    std::vector<const snapshot::GraphSnapshot*> train_set, test_set;
    for (size_t i = 0; i < order.size(); ++i)
        (i < n_train ? train_set : test_set).push_back(usable[order[i]]);

    TrainResult result;
    result.params = init_params(cfg);
    ModelParams& params = result.params;
    Adam adam(params.tensors, cfg.lr);

    std::vector<Tensor> grads;
    for (const auto& t : params.tensors) grads.emplace_back(t.rows, t.cols);

    ModelParams last_good = params;
    std::vector<size_t> epoch_order(train_set.size());
    std::iota(epoch_order.begin(), epoch_order.end(), size_t{0});

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        for (size_t i = epoch_order.size(); i > 1; --i)
            std::swap(epoch_order[i - 1], epoch_order[rng() % i]);

        double epoch_sum = 0.0;
        size_t epoch_count = 0;
        for (size_t start = 0; start < epoch_order.size();
             start += static_cast<size_t>(cfg.batch)) {
            size_t end = std::min(epoch_order.size(), start + static_cast<size_t>(cfg.batch));
            for (auto& g : grads) g.zero();
            double batch_loss = 0.0;
            for (size_t i = start; i < end; ++i) {
                Tape tape;
                ForwardGraph fg = build_forward(tape, params, *train_set[epoch_order[i]], true);
                batch_loss += tape.value(fg.loss).at(0, 0);
                tape.backward(fg.loss);
                for (size_t t = 0; t < grads.size(); ++t) {
                    const Tensor& g = tape.grad(fg.params[t]);
                    for (size_t j = 0; j < g.size(); ++j) grads[t].data[j] += g.data[j];
                }
            }
            double scale = 1.0 / static_cast<double>(end - start);
            batch_loss *= scale;
            if (!std::isfinite(batch_loss)) {
                result.params = last_good;
                result.aborted_nan = true;
                result.train_accuracy = accuracy_over(result.params, train_set);
                result.test_accuracy = accuracy_over(result.params, test_set);
                return result;
            }
            for (auto& g : grads)
                for (double& v : g.data) v *= scale;
            adam.step(params.tensors, grads);
            epoch_sum += batch_loss * static_cast<double>(end - start);
            epoch_count += end - start;
        }
        result.epoch_loss.push_back(epoch_sum / static_cast<double>(epoch_count));
        result.epochs_run = epoch + 1;
        last_good = params;
        if (!opts.checkpoint_dir.empty())
            save_checkpoint(params, opts.checkpoint_dir + "/epoch-" + std::to_string(epoch + 1) +
                                        ".ckpt");
        if (opts.verbose)
            std::fprintf(stderr, "epoch %d/%d loss %.6f\n", epoch + 1, cfg.epochs,
                         result.epoch_loss.back());
    }

    result.train_accuracy = accuracy_over(result.params, train_set);
    result.test_accuracy = accuracy_over(result.params, test_set);
    return result;
}

}  // namespace nps::nn
