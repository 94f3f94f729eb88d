#pragma once

// Private helpers shared by the checkpoint and autoencoder serializers:
// named tensors as little-endian 32-bit floats with shape metadata.

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "nps/nn/tensor.hpp"

namespace nps::nn::detail {

inline void write_u32(std::ostream& out, uint32_t v) {
    char b[4] = {static_cast<char>(v), static_cast<char>(v >> 8),
                 static_cast<char>(v >> 16), static_cast<char>(v >> 24)};
    out.write(b, 4);
}

inline void write_u64(std::ostream& out, uint64_t v) {
    write_u32(out, static_cast<uint32_t>(v));
    write_u32(out, static_cast<uint32_t>(v >> 32));
}

inline void write_f64(std::ostream& out, double v) {
    uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, 8);
    write_u64(out, bits);
}

inline void write_f32(std::ostream& out, float v) {
    uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(out, bits);
}

inline uint32_t read_u32(std::istream& in) {
    unsigned char b[4];
    in.read(reinterpret_cast<char*>(b), 4);
    if (!in) throw std::runtime_error("checkpoint: unexpected end of file");
    return static_cast<uint32_t>(b[0]) | (static_cast<uint32_t>(b[1]) << 8) |
           (static_cast<uint32_t>(b[2]) << 16) | (static_cast<uint32_t>(b[3]) << 24);
}

inline uint64_t read_u64(std::istream& in) {
    uint64_t lo = read_u32(in);
    uint64_t hi = read_u32(in);
    return lo | (hi << 32);
}

inline double read_f64(std::istream& in) {
    uint64_t bits = read_u64(in);
    double v;
    std::memcpy(&v, &bits, 8);
    return v;
}

inline float read_f32(std::istream& in) {
    uint32_t bits = read_u32(in);
    float v;
    std::memcpy(&v, &bits, 4);
    return v;
}

inline void write_tensors(std::ostream& out, const std::vector<std::string>& names,
                          const std::vector<Tensor>& tensors) {
    write_u32(out, static_cast<uint32_t>(tensors.size()));
    for (size_t i = 0; i < tensors.size(); ++i) {
        write_u32(out, static_cast<uint32_t>(names[i].size()));
        out.write(names[i].data(), static_cast<std::streamsize>(names[i].size()));
        write_u32(out, static_cast<uint32_t>(tensors[i].rows));
        write_u32(out, static_cast<uint32_t>(tensors[i].cols));
        for (double v : tensors[i].data) write_f32(out, static_cast<float>(v));
    }
}

inline void read_tensors(std::istream& in, std::vector<std::string>& names,
                         std::vector<Tensor>& tensors) {
    uint32_t count = read_u32(in);
    names.clear();
    tensors.clear();
    for (uint32_t i = 0; i < count; ++i) {
        uint32_t len = read_u32(in);
        std::string name(len, '\0');
        in.read(name.data(), len);
        uint32_t rows = read_u32(in);
        uint32_t cols = read_u32(in);
        Tensor t(static_cast<int>(rows), static_cast<int>(cols));
        for (double& v : t.data) v = static_cast<double>(read_f32(in));
        if (!in) throw std::runtime_error("checkpoint: truncated tensor data");
        names.push_back(std::move(name));
        tensors.push_back(std::move(t));
    }
}

}  // namespace nps::nn::detail
