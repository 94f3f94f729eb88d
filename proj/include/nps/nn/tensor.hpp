#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace nps::nn {

// Dense row-major matrix of doubles. Vectors are 1 x n or n x 1.
struct Tensor {
    int rows = 0;
    int cols = 0;
    std::vector<double> data;

    Tensor() = default;
    Tensor(int r, int c) : rows(r), cols(c), data(static_cast<size_t>(r) * c, 0.0) {}

    double& at(int i, int j) { return data[static_cast<size_t>(i) * cols + j]; }
    double at(int i, int j) const { return data[static_cast<size_t>(i) * cols + j]; }
    size_t size() const { return data.size(); }
    bool same_shape(const Tensor& o) const { return rows == o.rows && cols == o.cols; }
    void zero() { std::fill(data.begin(), data.end(), 0.0); }

    const double* row(int i) const { return data.data() + static_cast<size_t>(i) * cols; }
    double* row(int i) { return data.data() + static_cast<size_t>(i) * cols; }
};

Tensor transpose(const Tensor& a);

// 64-bit value as a 1 x 64 bit row, least-significant bit first.
Tensor bit_expand(uint64_t value);

}  // namespace nps::nn
