#include "nps/nn/autoencoder.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

#include "nps/nn/train.hpp"
#include "serialize.hpp"

namespace nps::nn {

int AutoencoderParams::index_of(const std::string& name) const {
    for (size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<int>(i);
    return -1;
}

const Tensor& AutoencoderParams::operator[](const std::string& name) const {
    int i = index_of(name);
    if (i < 0) throw std::out_of_range("no autoencoder tensor named " + name);
    return tensors[i];
}

namespace {

double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

const char* kGateNames[] = {"Wz", "Uz", "bz", "Wr", "Ur", "br", "Wh", "Uh", "bh"};

// One GRU step: h' = (1-z)*h + z*tanh(Wh x + Uh (r*h) + bh).
Tape::Idx gru_step(Tape& t, Tape::Idx x, Tape::Idx h, const AutoencoderParams& p,
                   const std::vector<Tape::Idx>& pidx, const std::string& prefix) {
    auto P = [&](const char* n) {
        int i = p.index_of(prefix + n);
        if (i < 0) throw std::out_of_range("no autoencoder tensor named " + prefix + n);
        return pidx[i];
    };
    Tape::Idx z = t.sigmoid(t.add_row(t.add(t.matmul(x, P("Wz")), t.matmul(h, P("Uz"))),
                                      P("bz")));
    Tape::Idx r = t.sigmoid(t.add_row(t.add(t.matmul(x, P("Wr")), t.matmul(h, P("Ur"))),
                                      P("br")));
    Tape::Idx c = t.tanh(t.add_row(t.add(t.matmul(x, P("Wh")), t.matmul(t.mul(r, h), P("Uh"))),
                                   P("bh")));
    return t.add(t.mul(t.one_minus(z), h), t.mul(z, c));
}

std::vector<Tape::Idx> register_ae(Tape& t, const AutoencoderParams& p) {
    std::vector<Tape::Idx> idx;
    for (const auto& tensor : p.tensors) idx.push_back(t.leaf(tensor));
    return idx;
}

struct AeGraph {
    std::vector<Tape::Idx> params;
    Tape::Idx encoding = -1;  // 1 x h
    Tape::Idx loss = -1;      // scalar, when with_loss
};

AeGraph build_ae(Tape& t, const AutoencoderParams& p,
                 const std::vector<std::vector<double>>& seq, bool with_loss) {
    if (seq.empty()) throw std::invalid_argument("autoencoder: empty sequence");
    int h = p.cfg.h;
    for (const auto& v : seq)
        if (static_cast<int>(v.size()) != h)
            throw std::invalid_argument("autoencoder: element dimension mismatch");

    AeGraph g;
    g.params = register_ae(t, p);

    auto as_row = [&](const std::vector<double>& v) {
        Tensor row(1, h);
        std::copy(v.begin(), v.end(), row.data.begin());
        return t.constant(std::move(row));
    };

    Tape::Idx hidden = t.constant(Tensor(1, h));
    for (const auto& x : seq) hidden = gru_step(t, as_row(x), hidden, p, g.params, "enc.");
    g.encoding = hidden;

    if (with_loss) {
        int wo = p.index_of("dec.Wo"), bo = p.index_of("dec.bo");
        Tape::Idx dh = hidden;
        Tape::Idx prev = t.constant(Tensor(1, h));
        Tensor target(static_cast<int>(seq.size()), h);
        std::vector<Tape::Idx> outs;
        for (size_t i = 0; i < seq.size(); ++i) {
            dh = gru_step(t, prev, dh, p, g.params, "dec.");
            Tape::Idx o = t.add_row(t.matmul(dh, g.params[wo]), g.params[bo]);
            outs.push_back(o);
            prev = o;
            std::copy(seq[i].begin(), seq[i].end(), target.row(static_cast<int>(i)));
        }
        // Stack the 1 x h step outputs into a (T, h) reconstruction:
        // concatenating columns of row vectors then reshaping preserves
        // row-major order.
        Tape::Idx wide = outs[0];
        for (size_t i = 1; i < outs.size(); ++i) wide = t.concat_cols(wide, outs[i]);
        g.loss = t.mse(t.reshape(wide, static_cast<int>(outs.size()), h), target);
    }
    return g;
}

}  // namespace

AutoencoderParams init_autoencoder(const AutoencoderConfig& cfg) {
    if (cfg.h < 1) throw std::invalid_argument("autoencoder: h must be >= 1");
    AutoencoderParams p;
    p.cfg = cfg;
    std::mt19937_64 rng(cfg.seed ^ 0x6a09e667f3bcc909ull);
    double scale = std::sqrt(1.0 / cfg.h);
    auto add = [&](const std::string& name, int r, int c, bool init) {
        Tensor t(r, c);
        if (init)
            for (double& v : t.data) v = (2.0 * next_uniform(rng) - 1.0) * scale;
        p.names.push_back(name);
        p.tensors.push_back(std::move(t));
    };
    for (const char* side : {"enc.", "dec."}) {
        for (const char* g : kGateNames) {
            bool is_bias = g[0] == 'b';
            add(std::string(side) + g, is_bias ? 1 : cfg.h, cfg.h, !is_bias);
        }
    }
    add("dec.Wo", cfg.h, cfg.h, true);
    add("dec.bo", 1, cfg.h, false);
    return p;
}

std::vector<double> encode_sequence(const AutoencoderParams& p,
                                    const std::vector<std::vector<double>>& seq) {
    Tape t;
    AeGraph g = build_ae(t, p, seq, false);
    return t.value(g.encoding).data;
}

double reconstruction_error(const AutoencoderParams& p,
                            const std::vector<std::vector<double>>& seq) {
    Tape t;
    AeGraph g = build_ae(t, p, seq, true);
    return t.value(g.loss).at(0, 0);
}

AutoencoderTrainResult train_autoencoder(
    const std::vector<std::vector<std::vector<double>>>& sequences,
    const AutoencoderConfig& cfg) {
    if (sequences.empty()) throw std::invalid_argument("autoencoder: no training sequences");
    AutoencoderTrainResult result;
    result.params = init_autoencoder(cfg);
    Adam adam(result.params.tensors, cfg.lr);
    std::vector<Tensor> grads;
    for (const auto& t : result.params.tensors) grads.emplace_back(t.rows, t.cols);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        double total = 0.0;
        for (const auto& seq : sequences) {
            Tape tape;
            AeGraph g = build_ae(tape, result.params, seq, true);
            total += tape.value(g.loss).at(0, 0);
            tape.backward(g.loss);
            for (auto& gr : grads) gr.zero();
            for (size_t t = 0; t < grads.size(); ++t) grads[t] = tape.grad(g.params[t]);
            adam.step(result.params.tensors, grads);
        }
        result.epoch_loss.push_back(total / static_cast<double>(sequences.size()));
    }
    return result;
}

namespace {
constexpr char kAeMagic[8] = {'N', 'P', 'S', 'A', 'E', '0', '0', '1'};
}

void save_autoencoder(const AutoencoderParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open autoencoder file for writing: " + path);
    out.write(kAeMagic, 8);
    detail::write_u32(out, 1);
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.h));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.epochs));
    detail::write_f64(out, p.cfg.lr);
    detail::write_u64(out, p.cfg.seed);
    detail::write_tensors(out, p.names, p.tensors);
    if (!out) throw std::runtime_error("I/O error writing autoencoder file: " + path);
}

AutoencoderParams load_autoencoder(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open autoencoder file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kAeMagic, 8) != 0)
        throw std::runtime_error("not an autoencoder file: " + path);
    if (detail::read_u32(in) != 1)
        throw std::runtime_error("unsupported autoencoder version in " + path);
    AutoencoderParams p;
    p.cfg.h = static_cast<int>(detail::read_u32(in));
    p.cfg.epochs = static_cast<int>(detail::read_u32(in));
    p.cfg.lr = detail::read_f64(in);
    p.cfg.seed = detail::read_u64(in);
    detail::read_tensors(in, p.names, p.tensors);
    return p;
}

}  // namespace nps::nn
