#pragma once

#include <functional>
#include <vector>

#include "nps/nn/tensor.hpp"

namespace nps::nn {

// Reverse-mode differentiation over a dynamically built op graph. Each
// forward call appends a node; backward() replays the recorded adjoint
// closures in reverse. Gradient accumulation order is fixed by construction
// order, keeping results bit-identical across runs.
class Tape {
  public:
    using Idx = int;

    // Leaves. `constant` participates in the graph but is never
    // differentiated into (its gradient buffer exists but is ignored).
    Idx leaf(Tensor t);
    Idx constant(Tensor t) { return leaf(std::move(t)); }

    const Tensor& value(Idx i) const { return nodes_[i].value; }
    const Tensor& grad(Idx i) const { return nodes_[i].grad; }
    Tensor& grad_mut(Idx i) { return nodes_[i].grad; }

    // out = a @ b
    Idx matmul(Idx a, Idx b);
    // out = a + b (same shape)
    Idx add(Idx a, Idx b);
    // out[i,:] = a[i,:] + bias[0,:]
    Idx add_row(Idx a, Idx bias);
    // out = a * b elementwise (same shape)
    Idx mul(Idx a, Idx b);
    // out = s * a
    Idx scale(Idx a, double s);
    // columns of a then columns of b
    Idx concat_cols(Idx a, Idx b);
    Idx tanh(Idx a);
    Idx sigmoid(Idx a);
    Idx leaky_relu(Idx a, double slope);
    // out = 1 - a
    Idx one_minus(Idx a);
    // out[r,:] = a[index[r],:]
    Idx gather_rows(Idx a, std::vector<int> index);
    // out[i,:] = rowmask[i] * a[i,:] (constant mask)
    Idx mask_rows(Idx a, std::vector<double> rowmask);
    // a is (n,1); softmax within each group of equal seg values
    Idx segment_softmax(Idx a, std::vector<int> seg);
    // out[i,:] = w[i,0] * a[i,:]
    Idx scale_rows(Idx a, Idx w);
    // out (out_rows, a.cols); out[seg[i],:] += a[i,:]; seg[i] < 0 drops row i
    Idx segment_sum_rows(Idx a, std::vector<int> seg, int out_rows);
    // view of the same elements with a new shape (rows*cols preserved)
    Idx reshape(Idx a, int rows, int cols);
    // scalar: sum over elements of mask * [softplus(x) - x*y], the
    // numerically stable sigmoid cross-entropy with target y
    Idx sigmoid_ce_masked(Idx logits, const Tensor& labels, const Tensor& mask);
    // scalar: sum((a - target)^2) / a.size()
    Idx mse(Idx a, const Tensor& target);

    // Seeds d(seed)=1 and runs all adjoints in reverse order.
    void backward(Idx seed);

    size_t node_count() const { return nodes_.size(); }

  private:
    struct Node {
        Tensor value;
        Tensor grad;
        std::function<void()> back;  // null for leaves
    };

    Idx push(Tensor value, std::function<void()> back = nullptr);
    std::vector<Node> nodes_;
};

}  // namespace nps::nn
