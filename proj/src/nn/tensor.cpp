#include "nps/nn/tensor.hpp"

namespace nps::nn {

Tensor transpose(const Tensor& a) {
    Tensor t(a.cols, a.rows);
    for (int i = 0; i < a.rows; ++i)
        for (int j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Tensor bit_expand(uint64_t value) {
    Tensor t(1, 64);
    for (int b = 0; b < 64; ++b) t.at(0, b) = static_cast<double>((value >> b) & 1u);
    return t;
}

}  // namespace nps::nn
