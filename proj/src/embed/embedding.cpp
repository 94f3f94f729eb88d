#include "nps/embed/embedding.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace nps::embed {

std::vector<double> readout(const nn::Tensor& node_emb) {
    std::vector<double> out(node_emb.cols, 0.0);
    for (int i = 0; i < node_emb.rows; ++i)
        for (int j = 0; j < node_emb.cols; ++j) out[j] += node_emb.at(i, j);
    return out;
}

std::vector<double> snapshot_embedding(const nn::ModelParams& p,
                                       const snapshot::GraphSnapshot& s) {
    nn::ForwardOutput out = nn::forward(p, s, false);
    return readout(out.final_embeddings);
}

std::vector<double> aggregate_mean(const std::vector<std::vector<double>>& embs) {
    if (embs.empty()) throw std::invalid_argument("aggregate_mean: empty sequence");
    std::vector<double> out(embs[0].size(), 0.0);
    for (const auto& e : embs)
        for (size_t j = 0; j < out.size(); ++j) out[j] += e[j];
    for (double& v : out) v /= static_cast<double>(embs.size());
    return out;
}

std::vector<std::vector<double>> chunk_means(const std::vector<std::vector<double>>& embs,
                                             size_t per_chunk) {
    if (per_chunk == 0) throw std::invalid_argument("chunk_means: per_chunk must be > 0");
    std::vector<std::vector<double>> out;
    for (size_t start = 0; start < embs.size(); start += per_chunk) {
        size_t end = std::min(embs.size(), start + per_chunk);
        out.push_back(aggregate_mean(
            std::vector<std::vector<double>>(embs.begin() + static_cast<long>(start),
                                             embs.begin() + static_cast<long>(end))));
    }
    return out;
}

std::vector<double> aggregate_autoencoder(const std::vector<std::vector<double>>& chunk_means,
                                          const nn::AutoencoderParams& ae) {
    return nn::encode_sequence(ae, chunk_means);
}

EmbeddingMatrix interval_embeddings(const nn::ModelParams& p,
                                    const std::vector<snapshot::GraphSnapshot>& snaps,
                                    const IntervalSpec& spec, uint64_t total_insts,
                                    AggregationMode mode, const nn::AutoencoderParams* ae,
                                    bool l2_normalize) {
    if (spec.interval_length == 0)
        throw std::invalid_argument("interval_embeddings: interval length must be > 0");
    if (mode == AggregationMode::Autoencoder && ae == nullptr)
        throw std::invalid_argument("interval_embeddings: autoencoder mode without parameters");

    uint64_t n_intervals = total_insts / spec.interval_length;  // whole intervals only
    EmbeddingMatrix m;
    m.h = p.cfg.h;
    m.mode = mode;

    // Snapshot graph embeddings grouped by interval, preserving order.
    std::vector<std::vector<std::vector<double>>> per_interval(n_intervals);
    for (const auto& s : snaps) {
        uint64_t interval = s.root_seq / spec.interval_length;
        if (interval >= n_intervals) continue;
        per_interval[interval].push_back(snapshot_embedding(p, s));
    }

    for (uint64_t i = 0; i < n_intervals; ++i) {
        std::vector<double> row(m.h, 0.0);
        if (!per_interval[i].empty()) {
            if (mode == AggregationMode::Mean)
                row = aggregate_mean(per_interval[i]);
            else
                row = aggregate_autoencoder(
                    chunk_means(per_interval[i], static_cast<size_t>(spec.subsequence)), *ae);
        }
        if (l2_normalize) {
            double norm = 0.0;
            for (double v : row) norm += v * v;
            norm = std::sqrt(norm);
            if (norm > 0)
                for (double& v : row) v /= norm;
        }
        m.rows.push_back(std::move(row));
        m.index.emplace_back(i * spec.interval_length, spec.interval_length);
    }
    return m;
}

namespace {

constexpr char kMagic[8] = {'N', 'P', 'S', 'E', 'M', 'B', '0', '1'};

void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
}

uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("embedding file: unexpected end of file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

}  // namespace

void write_embeddings(const EmbeddingMatrix& m, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open embedding file for writing: " + path);
    out.write(kMagic, 8);
    write_u32(out, 1);  // version
    write_u32(out, static_cast<uint32_t>(m.h));
    write_u32(out, static_cast<uint32_t>(m.rows.size()));
    write_u32(out, static_cast<uint32_t>(m.mode));
    for (const auto& row : m.rows) {
        for (double v : row) {
            float f = static_cast<float>(v);
            uint32_t bits;
            std::memcpy(&bits, &f, 4);
            write_u32(out, bits);
        }
    }
    if (!out) throw std::runtime_error("I/O error writing embedding file: " + path);

    std::ofstream idx(path + ".idx");
    if (!idx) throw std::runtime_error("cannot open index file for writing: " + path + ".idx");
    idx << "row,start,length\n";
    for (size_t i = 0; i < m.index.size(); ++i)
        idx << i << "," << m.index[i].first << "," << m.index[i].second << "\n";
    if (!idx) throw std::runtime_error("I/O error writing index file: " + path + ".idx");
}

EmbeddingMatrix read_embeddings(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open embedding file: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not an embedding file: " + path);
    if (read_u32(in) != 1) throw std::runtime_error("unsupported embedding version in " + path);

    EmbeddingMatrix m;
    m.h = static_cast<int>(read_u32(in));
    uint32_t rows = read_u32(in);
    uint32_t mode = read_u32(in);
    if (mode > 1) throw std::runtime_error("unknown aggregation mode in " + path);
    m.mode = static_cast<AggregationMode>(mode);
    for (uint32_t i = 0; i < rows; ++i) {
        std::vector<double> row(m.h);
        for (double& v : row) {
            uint32_t bits = read_u32(in);
            float f;
            std::memcpy(&f, &bits, 4);
            v = static_cast<double>(f);
        }
        m.rows.push_back(std::move(row));
    }

    std::ifstream idx(path + ".idx");
    if (idx) {
        std::string line;
        std::getline(idx, line);  // header
        while (std::getline(idx, line)) {
            if (line.empty()) continue;
            std::istringstream ss(line);
            std::string row_s, start_s, len_s;
            if (!std::getline(ss, row_s, ',') || !std::getline(ss, start_s, ',') ||
                !std::getline(ss, len_s, ','))
                throw std::runtime_error("malformed index line in " + path + ".idx: " + line);
            m.index.emplace_back(std::stoull(start_s), std::stoull(len_s));
        }
        if (m.index.size() != m.rows.size())
            throw std::runtime_error("index row count does not match embeddings in " + path);
    }
    return m;
}

}  // namespace nps::embed
