#include "nps/nn/model.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>

namespace nps::nn {

using snapshot::GraphSnapshot;
using snapshot::NodeInit;

void ModelConfig::validate() const {
    if (layers < 1) throw std::invalid_argument("model: layers must be >= 1");
    if (h < 1 || heads < 1 || h % heads != 0)
        throw std::invalid_argument("model: h must be a positive multiple of heads");
    if (edge_types != graph::kEdgeKindCount)
        throw std::invalid_argument("model: edge-types must match the edge-kind count");
    if (vocab < graph::kVocabUsed)
        throw std::invalid_argument("model: vocabulary smaller than the token set");
    if (hidden < 1) throw std::invalid_argument("model: hidden must be >= 1");
    if (max_depth < 1 || max_depth > snapshot::kMaxDepth)
        throw std::invalid_argument("model: max-depth out of range");
}

bool ModelConfig::same_architecture(const ModelConfig& o) const {
    return layers == o.layers && h == o.h && heads == o.heads && edge_types == o.edge_types &&
           vocab == o.vocab && hidden == o.hidden && max_depth == o.max_depth;
}

int ModelParams::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

Tensor& ModelParams::operator[](const std::string& name) {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no parameter tensor named " + name);
    return tensors[i];
}

const Tensor& ModelParams::operator[](const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no parameter tensor named " + name);
    return tensors[i];
}

namespace {

// Head output width at layer l: hidden layers concatenate heads (h/heads
// each); the final layer averages full-width heads.
int head_dim(const ModelConfig& cfg, int layer) {
    return layer == cfg.layers - 1 ? cfg.h : cfg.h / cfg.heads;
}

// Platform-independent uniform double in [0, 1).
double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

void fill_uniform(Tensor& t, double scale, std::mt19937_64& rng) {
    for (double& v : t.data) v = (2.0 * next_uniform(rng) - 1.0) * scale;
}

std::string pname(int layer, int etype, int head, const char* leaf) {
    return "l" + std::to_string(layer) + ".e" + std::to_string(etype) + ".h" +
           std::to_string(head) + "." + leaf;
}

constexpr double kLeakySlope = 0.2;

}  // namespace

ModelParams init_params(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.cfg = cfg;
    std::mt19937_64 rng(cfg.seed);

    auto add = [&](const std::string& name, int r, int c, double scale) {
        Tensor t(r, c);
        if (scale > 0) fill_uniform(t, scale, rng);
        p.names.push_back(name);
        p.tensors.push_back(std::move(t));
    };
    // Biases feeding leaky-ReLU units start at a small positive constant so
    // all-zero rows do not sit exactly on the activation kink (where central
    // finite differences of the piecewise-linear response disagree with the
    // one-sided analytic derivative).
    auto add_bias = [&](const std::string& name, int c) {
        Tensor t(1, c);
        for (double& v : t.data) v = 0.01;
        p.names.push_back(name);
        p.tensors.push_back(std::move(t));
    };
    auto glorot = [](int fan_in) { return std::sqrt(1.0 / fan_in); };

    add("embed.token", cfg.vocab, cfg.h, 0.1);
    add("embed.value_w", 64, cfg.h, glorot(64));
    add("embed.value_b", 1, cfg.h, 0.0);
    for (int l = 0; l < cfg.layers; ++l) {
        int dh = head_dim(cfg, l);
        for (int e = 0; e < cfg.edge_types; ++e) {
            for (int a = 0; a < cfg.heads; ++a) {
                add(pname(l, e, a, "W"), cfg.h, dh, glorot(cfg.h));
                add(pname(l, e, a, "asrc"), dh, 1, glorot(dh));
                add(pname(l, e, a, "adst"), dh, 1, glorot(dh));
            }
        }
        add("l" + std::to_string(l) + ".U", 2 * cfg.h, cfg.h, glorot(2 * cfg.h));
        add_bias("l" + std::to_string(l) + ".b", cfg.h);
    }
    add("path.w", cfg.h, 1, glorot(cfg.h));
    add("path.b", 1, 1, 0.0);
    add("pred.w1", cfg.max_depth * cfg.h, cfg.hidden, glorot(cfg.max_depth * cfg.h));
    add_bias("pred.b1", cfg.hidden);
    add("pred.w2", cfg.hidden, 64 * cfg.max_depth, glorot(cfg.hidden));
    add("pred.b2", 1, 64 * cfg.max_depth, 0.0);
    return p;
}

std::vector<Tape::Idx> register_params(Tape& t, const ModelParams& p) {
    std::vector<Tape::Idx> idx;
    idx.reserve(p.tensors.size());
    for (const auto& tensor : p.tensors) idx.push_back(t.leaf(tensor));
    return idx;
}

namespace {

Tape::Idx param_idx(const ModelParams& p, const std::vector<Tape::Idx>& pidx,
                    const std::string& name) {
    int i = p.index_of(name);
    if (i < 0) throw std::out_of_range("no parameter tensor named " + name);
    return pidx[i];
}

}  // namespace

Tape::Idx embed_nodes(Tape& t, const GraphSnapshot& s, const ModelParams& p,
                      const std::vector<Tape::Idx>& pidx) {
    const int n = static_cast<int>(s.nodes.size());
    std::vector<int> token_ids(n, 0);
    std::vector<double> token_mask(n, 0.0), value_mask(n, 0.0);
    Tensor bits(n, 64);
    for (int i = 0; i < n; ++i) {
        const auto& node = s.nodes[i];
        switch (node.init) {
            case NodeInit::Token:
                if (node.token >= p.cfg.vocab)
                    throw std::out_of_range("embed_nodes: token id beyond vocabulary");
                token_ids[i] = node.token;
                token_mask[i] = 1.0;
                break;
            case NodeInit::Value: {
                value_mask[i] = 1.0;
                Tensor b = bit_expand(node.init_value);
                std::copy(b.data.begin(), b.data.end(), bits.row(i));
                break;
            }
            case NodeInit::Zero:
                break;
        }
    }
    Tape::Idx tok = t.mask_rows(
        t.gather_rows(param_idx(p, pidx, "embed.token"), std::move(token_ids)),
        std::move(token_mask));
    Tape::Idx val = t.mask_rows(
        t.add_row(t.matmul(t.constant(std::move(bits)), param_idx(p, pidx, "embed.value_w")),
                  param_idx(p, pidx, "embed.value_b")),
        std::move(value_mask));
    return t.add(tok, val);
}

Tape::Idx gat_forward(Tape& t, const GraphSnapshot& s, Tape::Idx x, const ModelParams& p,
                      const std::vector<Tape::Idx>& pidx) {
    const int n = static_cast<int>(s.nodes.size());
    // Edge endpoints per edge type.
    std::vector<std::vector<int>> srcs(p.cfg.edge_types), dsts(p.cfg.edge_types);
    for (const auto& e : s.edges) {
        int k = static_cast<int>(e.kind);
        srcs[k].push_back(e.src);
        dsts[k].push_back(e.dst);
    }

    Tape::Idx h_cur = x;
    for (int l = 0; l < p.cfg.layers; ++l) {
        int dh = head_dim(p.cfg, l);
        bool final_layer = l == p.cfg.layers - 1;
        std::optional<Tape::Idx> combined;
        for (int a = 0; a < p.cfg.heads; ++a) {
            std::optional<Tape::Idx> head_msg;
            for (int e = 0; e < p.cfg.edge_types; ++e) {
                if (srcs[e].empty()) continue;  // no neighbors: zero message
                Tape::Idx wh = t.matmul(h_cur, param_idx(p, pidx, pname(l, e, a, "W")));
                Tape::Idx s_src = t.matmul(wh, param_idx(p, pidx, pname(l, e, a, "asrc")));
                Tape::Idx s_dst = t.matmul(wh, param_idx(p, pidx, pname(l, e, a, "adst")));
                Tape::Idx score = t.leaky_relu(
                    t.add(t.gather_rows(s_src, srcs[e]), t.gather_rows(s_dst, dsts[e])),
                    kLeakySlope);
                Tape::Idx alpha = t.segment_softmax(score, dsts[e]);
                Tape::Idx msgs = t.scale_rows(t.gather_rows(wh, srcs[e]), alpha);
                Tape::Idx m = t.segment_sum_rows(msgs, dsts[e], n);
                head_msg = head_msg ? t.add(*head_msg, m) : m;
            }
            if (!head_msg) head_msg = t.constant(Tensor(n, dh));
            if (!combined)
                combined = *head_msg;
            else
                combined = final_layer ? t.add(*combined, *head_msg)
                                       : t.concat_cols(*combined, *head_msg);
        }
        Tape::Idx g = final_layer ? t.scale(*combined, 1.0 / p.cfg.heads) : *combined;
        std::string ls = "l" + std::to_string(l);
        // Leaky ReLU keeps the update non-saturating: bounded activations
        // were observed to collapse small value-dependent differences once
        // training drives the easy (constant) output bits to confident
        // logits, freezing the rest at the marginal solution.
        h_cur = t.leaky_relu(
            t.add_row(t.matmul(t.concat_cols(g, h_cur), param_idx(p, pidx, ls + ".U")),
                      param_idx(p, pidx, ls + ".b")),
            kLeakySlope);
    }
    return h_cur;
}

Tape::Idx select_path(Tape& t, const GraphSnapshot& s, Tape::Idx out, const ModelParams& p,
                      const std::vector<Tape::Idx>& pidx) {
    // Valid task nodes: mem_ref nodes at unmasked depths 1..D.
    std::vector<int> task_ids, depth_seg;
    std::vector<bool> seen(p.cfg.max_depth, false);
    for (const auto& node : s.nodes) {
        if (node.type != graph::NodeType::MemRef) continue;
        if (node.depth < 1 || node.depth > s.depth_count) continue;  // masked out
        task_ids.push_back(node.id);
        depth_seg.push_back(node.depth - 1);
        seen[node.depth - 1] = true;
    }
    for (int d = 0; d < std::min(s.depth_count, p.cfg.max_depth); ++d)
        if (!seen[d])
            throw std::runtime_error("select_path: unmasked depth group " +
                                     std::to_string(d + 1) + " has no task node");

    Tape::Idx emb = t.gather_rows(out, task_ids);
    Tape::Idx scores = t.add_row(t.matmul(emb, param_idx(p, pidx, "path.w")),
                                 param_idx(p, pidx, "path.b"));
    Tape::Idx alpha = t.segment_softmax(scores, depth_seg);
    Tape::Idx weighted = t.scale_rows(emb, alpha);
    return t.segment_sum_rows(weighted, depth_seg, p.cfg.max_depth);
}

Tape::Idx predict_addresses(Tape& t, Tape::Idx depth_emb, const ModelParams& p,
                            const std::vector<Tape::Idx>& pidx) {
    Tape::Idx flat = t.reshape(depth_emb, 1, p.cfg.max_depth * p.cfg.h);
    Tape::Idx hid = t.leaky_relu(t.add_row(t.matmul(flat, param_idx(p, pidx, "pred.w1")),
                                           param_idx(p, pidx, "pred.b1")),
                                 kLeakySlope);
    Tape::Idx out = t.add_row(t.matmul(hid, param_idx(p, pidx, "pred.w2")),
                              param_idx(p, pidx, "pred.b2"));
    return t.reshape(out, p.cfg.max_depth, 64);
}

Tensor labels_tensor(const GraphSnapshot& s, int max_depth) {
    Tensor labels(max_depth, 64);
    for (int d = 0; d < std::min<int>(static_cast<int>(s.labels.size()), max_depth); ++d) {
        Tensor b = bit_expand(s.labels[d]);
        std::copy(b.data.begin(), b.data.end(), labels.row(d));
    }
    return labels;
}

Tensor mask_tensor(const GraphSnapshot& s, int max_depth) {
    Tensor mask(max_depth, 64);
    for (int d = 0; d < std::min(s.depth_count, max_depth); ++d)
        for (int b = 0; b < 64; ++b) mask.at(d, b) = 1.0;
    return mask;
}

ForwardGraph build_forward(Tape& t, const ModelParams& p, const GraphSnapshot& s,
                           bool with_loss) {
    ForwardGraph fg;
    fg.params = register_params(t, p);
    fg.node_emb = embed_nodes(t, s, p, fg.params);
    fg.final_emb = gat_forward(t, s, fg.node_emb, p, fg.params);
    fg.depth_emb = select_path(t, s, fg.final_emb, p, fg.params);
    fg.logits = predict_addresses(t, fg.depth_emb, p, fg.params);
    if (with_loss) {
        if (static_cast<int>(s.labels.size()) < std::min(s.depth_count, p.cfg.max_depth))
            throw std::invalid_argument("forward: snapshot lacks labels for its depth");
        fg.loss = t.sigmoid_ce_masked(fg.logits, labels_tensor(s, p.cfg.max_depth),
                                      mask_tensor(s, p.cfg.max_depth));
    }
    return fg;
}

std::vector<uint64_t> decode_addresses(const Tensor& logits, int depth) {
    std::vector<uint64_t> out;
    for (int d = 0; d < depth && d < logits.rows; ++d) {
        uint64_t a = 0;
        for (int b = 0; b < 64; ++b)
            if (logits.at(d, b) > 0.0) a |= (uint64_t{1} << b);
        out.push_back(a);
    }
    return out;
}

ForwardOutput forward(const ModelParams& p, const GraphSnapshot& s, bool with_loss) {
    Tape t;
    ForwardGraph fg = build_forward(t, p, s, with_loss);
    ForwardOutput out;
    out.node_embeddings = t.value(fg.node_emb);
    out.final_embeddings = t.value(fg.final_emb);
    out.depth_embeddings = t.value(fg.depth_emb);
    out.logits = t.value(fg.logits);
    if (with_loss) out.loss = t.value(fg.loss).at(0, 0);
    return out;
}

double prefetch_accuracy(const ModelParams& p,
                         const std::vector<GraphSnapshot>& snaps) {
    size_t total = 0, hit = 0;
    for (const auto& s : snaps) {
        if (s.depth_count == 0 || !s.has_labels()) continue;
        ++total;
        int depth = std::min(s.depth_count, p.cfg.max_depth);
        ForwardOutput out = forward(p, s, false);
        std::vector<uint64_t> pred = decode_addresses(out.logits, depth);
        bool ok = static_cast<int>(s.labels.size()) >= depth;
        for (int d = 0; ok && d < depth; ++d) ok = pred[d] == s.labels[d];
        if (ok) ++hit;
    }
    return total == 0 ? 0.0 : static_cast<double>(hit) / static_cast<double>(total);
}

}  // namespace nps::nn
