#include <fstream>
#include <stdexcept>

#include "nps/nn/model.hpp"
#include "serialize.hpp"

namespace nps::nn {

namespace {

constexpr char kMagic[8] = {'N', 'P', 'S', 'C', 'K', '0', '0', '1'};
constexpr uint32_t kVersion = 1;

}  // namespace

void save_checkpoint(const ModelParams& p, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open checkpoint for writing: " + path);
    out.write(kMagic, 8);
    detail::write_u32(out, kVersion);
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.layers));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.h));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.heads));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.edge_types));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.vocab));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.hidden));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.max_depth));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.epochs));
    detail::write_u32(out, static_cast<uint32_t>(p.cfg.batch));
    detail::write_f64(out, p.cfg.lr);
    detail::write_u64(out, p.cfg.seed);
    detail::write_tensors(out, p.names, p.tensors);
    if (!out) throw std::runtime_error("I/O error writing checkpoint: " + path);
}

ModelParams load_checkpoint(const std::string& path, const ModelConfig* expect) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kMagic, 8) != 0)
        throw std::runtime_error("not a model checkpoint file: " + path);
    if (detail::read_u32(in) != kVersion)
        throw std::runtime_error("unsupported checkpoint version in " + path);

    ModelParams p;
    p.cfg.layers = static_cast<int>(detail::read_u32(in));
    p.cfg.h = static_cast<int>(detail::read_u32(in));
    p.cfg.heads = static_cast<int>(detail::read_u32(in));
    p.cfg.edge_types = static_cast<int>(detail::read_u32(in));
    p.cfg.vocab = static_cast<int>(detail::read_u32(in));
    p.cfg.hidden = static_cast<int>(detail::read_u32(in));
    p.cfg.max_depth = static_cast<int>(detail::read_u32(in));
    p.cfg.epochs = static_cast<int>(detail::read_u32(in));
    p.cfg.batch = static_cast<int>(detail::read_u32(in));
    p.cfg.lr = detail::read_f64(in);
    p.cfg.seed = detail::read_u64(in);
    detail::read_tensors(in, p.names, p.tensors);
    if (expect && !p.cfg.same_architecture(*expect))
        throw std::runtime_error("checkpoint architecture does not match the configuration: " +
                                 path);
    return p;
}

}  // namespace nps::nn
