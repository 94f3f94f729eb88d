#include "nps/nn/tape.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>

#include "nps/kernels/kernels.hpp"

namespace nps::nn {

namespace {

double softplus(double x) {
    // log(1 + exp(x)) without overflow
    return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

Tape::Idx Tape::push(Tensor value, std::function<void()> back) {
    Node n;
    n.grad = Tensor(value.rows, value.cols);
    n.value = std::move(value);
    n.back = std::move(back);
    nodes_.push_back(std::move(n));
    return static_cast<Idx>(nodes_.size()) - 1;
}

Tape::Idx Tape::leaf(Tensor t) { return push(std::move(t)); }

Tape::Idx Tape::matmul(Idx a, Idx b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (va.cols != vb.rows) throw std::invalid_argument("matmul: shape mismatch");
    Tensor out(va.rows, vb.cols);
    kernels::active().gemm_acc(va.data.data(), vb.data.data(), out.data.data(), va.rows,
                               va.cols, vb.cols);
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, b, o]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& va2 = nodes_[a].value;
        const Tensor& vb2 = nodes_[b].value;
        // dA += g @ B^T ; dB += A^T @ g
        Tensor bt = transpose(vb2);
        kernels::active().gemm_acc(g.data.data(), bt.data.data(),
                                   nodes_[a].grad.data.data(), g.rows, g.cols, bt.cols);
        Tensor at = transpose(va2);
        kernels::active().gemm_acc(at.data.data(), g.data.data(),
                                   nodes_[b].grad.data.data(), at.rows, at.cols, g.cols);
    };
    return o;
}

Tape::Idx Tape::add(Idx a, Idx b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (!va.same_shape(vb)) throw std::invalid_argument("add: shape mismatch");
    Tensor out = va;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] += vb.data[i];
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, b, o]() {
        const Tensor& g = nodes_[o].grad;
        kernels::active().axpy(1.0, g.data.data(), nodes_[a].grad.data.data(), g.size());
        kernels::active().axpy(1.0, g.data.data(), nodes_[b].grad.data.data(), g.size());
    };
    return o;
}

Tape::Idx Tape::add_row(Idx a, Idx bias) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[bias].value;
    if (vb.rows != 1 || vb.cols != va.cols)
        throw std::invalid_argument("add_row: bias shape mismatch");
    Tensor out = va;
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) += vb.at(0, j);
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, bias, o]() {
        const Tensor& g = nodes_[o].grad;
        kernels::active().axpy(1.0, g.data.data(), nodes_[a].grad.data.data(), g.size());
        Tensor& gb = nodes_[bias].grad;
        for (int i = 0; i < g.rows; ++i)
            for (int j = 0; j < g.cols; ++j) gb.at(0, j) += g.at(i, j);
    };
    return o;
}

Tape::Idx Tape::mul(Idx a, Idx b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (!va.same_shape(vb)) throw std::invalid_argument("mul: shape mismatch");
    Tensor out = va;
    for (size_t i = 0; i < out.size(); ++i) out.data[i] *= vb.data[i];
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, b, o]() {
        const Tensor& g = nodes_[o].grad;
        for (size_t i = 0; i < g.size(); ++i) {
            nodes_[a].grad.data[i] += g.data[i] * nodes_[b].value.data[i];
            nodes_[b].grad.data[i] += g.data[i] * nodes_[a].value.data[i];
        }
    };
    return o;
}

Tape::Idx Tape::scale(Idx a, double s) {
    Tensor out = nodes_[a].value;
    for (double& v : out.data) v *= s;
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, s]() {
        const Tensor& g = nodes_[o].grad;
        kernels::active().axpy(s, g.data.data(), nodes_[a].grad.data.data(), g.size());
    };
    return o;
}

Tape::Idx Tape::concat_cols(Idx a, Idx b) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vb = nodes_[b].value;
    if (va.rows != vb.rows) throw std::invalid_argument("concat_cols: row mismatch");
    Tensor out(va.rows, va.cols + vb.cols);
    for (int i = 0; i < out.rows; ++i) {
        std::copy(va.row(i), va.row(i) + va.cols, out.row(i));
        std::copy(vb.row(i), vb.row(i) + vb.cols, out.row(i) + va.cols);
    }
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, b, o]() {
        const Tensor& g = nodes_[o].grad;
        Tensor& ga = nodes_[a].grad;
        Tensor& gb = nodes_[b].grad;
        for (int i = 0; i < g.rows; ++i) {
            for (int j = 0; j < ga.cols; ++j) ga.at(i, j) += g.at(i, j);
            for (int j = 0; j < gb.cols; ++j) gb.at(i, j) += g.at(i, ga.cols + j);
        }
    };
    return o;
}

Tape::Idx Tape::tanh(Idx a) {
    const Tensor& va = nodes_[a].value;
    Tensor out(va.rows, va.cols);
    kernels::active().tanh_vec(va.data.data(), out.data.data(), va.size());
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& y = nodes_[o].value;
        for (size_t i = 0; i < g.size(); ++i)
            nodes_[a].grad.data[i] += g.data[i] * (1.0 - y.data[i] * y.data[i]);
    };
    return o;
}

Tape::Idx Tape::sigmoid(Idx a) {
    Tensor out = nodes_[a].value;
    for (double& v : out.data) v = logistic(v);
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& y = nodes_[o].value;
        for (size_t i = 0; i < g.size(); ++i)
            nodes_[a].grad.data[i] += g.data[i] * y.data[i] * (1.0 - y.data[i]);
    };
    return o;
}

Tape::Idx Tape::leaky_relu(Idx a, double slope) {
    Tensor out = nodes_[a].value;
    for (double& v : out.data)
        if (v < 0) v *= slope;
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, slope]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& x = nodes_[a].value;
        for (size_t i = 0; i < g.size(); ++i)
            nodes_[a].grad.data[i] += g.data[i] * (x.data[i] < 0 ? slope : 1.0);
    };
    return o;
}

Tape::Idx Tape::one_minus(Idx a) {
    Tensor out = nodes_[a].value;
    for (double& v : out.data) v = 1.0 - v;
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o]() {
        const Tensor& g = nodes_[o].grad;
        kernels::active().axpy(-1.0, g.data.data(), nodes_[a].grad.data.data(), g.size());
    };
    return o;
}

Tape::Idx Tape::gather_rows(Idx a, std::vector<int> index) {
    const Tensor& va = nodes_[a].value;
    Tensor out(static_cast<int>(index.size()), va.cols);
    for (size_t r = 0; r < index.size(); ++r) {
        if (index[r] < 0 || index[r] >= va.rows)
            throw std::out_of_range("gather_rows: index out of range");
        std::copy(va.row(index[r]), va.row(index[r]) + va.cols, out.row(static_cast<int>(r)));
    }
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, index = std::move(index)]() {
        const Tensor& g = nodes_[o].grad;
        Tensor& ga = nodes_[a].grad;
        for (size_t r = 0; r < index.size(); ++r)
            kernels::active().axpy(1.0, g.row(static_cast<int>(r)), ga.row(index[r]),
                                   g.cols);
    };
    return o;
}

Tape::Idx Tape::mask_rows(Idx a, std::vector<double> rowmask) {
    const Tensor& va = nodes_[a].value;
    if (static_cast<int>(rowmask.size()) != va.rows)
        throw std::invalid_argument("mask_rows: mask size mismatch");
    Tensor out = va;
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) *= rowmask[i];
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, rowmask = std::move(rowmask)]() {
        const Tensor& g = nodes_[o].grad;
        Tensor& ga = nodes_[a].grad;
        for (int i = 0; i < g.rows; ++i)
            kernels::active().axpy(rowmask[i], g.row(i), ga.row(i), g.cols);
    };
    return o;
}

Tape::Idx Tape::segment_softmax(Idx a, std::vector<int> seg) {
    const Tensor& va = nodes_[a].value;
    if (va.cols != 1 || static_cast<int>(seg.size()) != va.rows)
        throw std::invalid_argument("segment_softmax: expects (n,1) and n segment ids");
    // group rows by segment id (stable within group)
    std::map<int, std::vector<int>> groups;
    for (int i = 0; i < va.rows; ++i) groups[seg[i]].push_back(i);

    Tensor out(va.rows, 1);
    for (auto& [id, rows] : groups) {
        double mx = va.at(rows[0], 0);
        for (int r : rows) mx = std::max(mx, va.at(r, 0));
        double denom = 0.0;
        for (int r : rows) denom += std::exp(va.at(r, 0) - mx);
        for (int r : rows) out.at(r, 0) = std::exp(va.at(r, 0) - mx) / denom;
    }
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, groups = std::move(groups)]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& y = nodes_[o].value;
        Tensor& ga = nodes_[a].grad;
        for (const auto& [id, rows] : groups) {
            double dot = 0.0;
            for (int r : rows) dot += g.at(r, 0) * y.at(r, 0);
            for (int r : rows) ga.at(r, 0) += y.at(r, 0) * (g.at(r, 0) - dot);
        }
    };
    return o;
}

Tape::Idx Tape::scale_rows(Idx a, Idx w) {
    const Tensor& va = nodes_[a].value;
    const Tensor& vw = nodes_[w].value;
    if (vw.cols != 1 || vw.rows != va.rows)
        throw std::invalid_argument("scale_rows: weight shape mismatch");
    Tensor out = va;
    for (int i = 0; i < out.rows; ++i)
        for (int j = 0; j < out.cols; ++j) out.at(i, j) *= vw.at(i, 0);
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, w, o]() {
        const Tensor& g = nodes_[o].grad;
        const Tensor& va2 = nodes_[a].value;
        const Tensor& vw2 = nodes_[w].value;
        Tensor& ga = nodes_[a].grad;
        Tensor& gw = nodes_[w].grad;
        for (int i = 0; i < g.rows; ++i) {
            kernels::active().axpy(vw2.at(i, 0), g.row(i), ga.row(i), g.cols);
            gw.at(i, 0) += kernels::active().dot(g.row(i), va2.row(i), g.cols);
        }
    };
    return o;
}

Tape::Idx Tape::segment_sum_rows(Idx a, std::vector<int> seg, int out_rows) {
    const Tensor& va = nodes_[a].value;
    if (static_cast<int>(seg.size()) != va.rows)
        throw std::invalid_argument("segment_sum_rows: segment size mismatch");
    Tensor out(out_rows, va.cols);
    for (int i = 0; i < va.rows; ++i) {
        if (seg[i] < 0) continue;
        if (seg[i] >= out_rows) throw std::out_of_range("segment_sum_rows: id out of range");
        kernels::active().axpy(1.0, va.row(i), out.row(seg[i]), va.cols);
    }
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, seg = std::move(seg)]() {
        const Tensor& g = nodes_[o].grad;
        Tensor& ga = nodes_[a].grad;
        for (int i = 0; i < ga.rows; ++i) {
            if (seg[i] < 0) continue;
            kernels::active().axpy(1.0, g.row(seg[i]), ga.row(i), g.cols);
        }
    };
    return o;
}

Tape::Idx Tape::reshape(Idx a, int rows, int cols) {
    const Tensor& va = nodes_[a].value;
    if (static_cast<size_t>(rows) * cols != va.size())
        throw std::invalid_argument("reshape: element count mismatch");
    Tensor out(rows, cols);
    out.data = va.data;
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o]() {
        const Tensor& g = nodes_[o].grad;
        kernels::active().axpy(1.0, g.data.data(), nodes_[a].grad.data.data(), g.size());
    };
    return o;
}

Tape::Idx Tape::sigmoid_ce_masked(Idx logits, const Tensor& labels, const Tensor& mask) {
    const Tensor& x = nodes_[logits].value;
    if (!x.same_shape(labels) || !x.same_shape(mask))
        throw std::invalid_argument("sigmoid_ce_masked: shape mismatch");
    double total = 0.0;
    for (size_t i = 0; i < x.size(); ++i)
        total += mask.data[i] * (softplus(x.data[i]) - x.data[i] * labels.data[i]);
    Tensor out(1, 1);
    out.at(0, 0) = total;
    Idx o = push(std::move(out));
    nodes_[o].back = [this, logits, o, labels, mask]() {
        double g = nodes_[o].grad.at(0, 0);
        const Tensor& x2 = nodes_[logits].value;
        Tensor& gx = nodes_[logits].grad;
        for (size_t i = 0; i < x2.size(); ++i)
            gx.data[i] += g * mask.data[i] * (logistic(x2.data[i]) - labels.data[i]);
    };
    return o;
}

Tape::Idx Tape::mse(Idx a, const Tensor& target) {
    const Tensor& x = nodes_[a].value;
    if (!x.same_shape(target)) throw std::invalid_argument("mse: shape mismatch");
    double total = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        double d = x.data[i] - target.data[i];
        total += d * d;
    }
    Tensor out(1, 1);
    out.at(0, 0) = total / static_cast<double>(x.size());
    Idx o = push(std::move(out));
    nodes_[o].back = [this, a, o, target]() {
        double g = nodes_[o].grad.at(0, 0);
        const Tensor& x2 = nodes_[a].value;
        Tensor& gx = nodes_[a].grad;
        double s = 2.0 / static_cast<double>(x2.size());
        for (size_t i = 0; i < x2.size(); ++i)
            gx.data[i] += g * s * (x2.data[i] - target.data[i]);
    };
    return o;
}

void Tape::backward(Idx seed) {
    const Tensor& v = nodes_[seed].value;
    if (v.rows != 1 || v.cols != 1)
        throw std::invalid_argument("backward: seed must be a scalar");
    nodes_[seed].grad.at(0, 0) = 1.0;
    for (Idx i = seed; i >= 0; --i)
        if (nodes_[i].back) nodes_[i].back();
}

}  // namespace nps::nn
