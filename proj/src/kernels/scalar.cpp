#include <cmath>

#include "nps/kernels/kernels.hpp"

namespace nps::kernels {

namespace {

double dot_scalar(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) s += a[i] * b[i];
    return s;
}

void axpy_scalar(double alpha, const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

void gemm_acc_scalar(const double* a, const double* b, double* c, size_t m, size_t k,
                     size_t n) {
    for (size_t i = 0; i < m; ++i) {
        const double* arow = a + i * k;
        double* crow = c + i * n;
        for (size_t p = 0; p < k; ++p) {
            double av = arow[p];
            if (av == 0.0) continue;
            const double* brow = b + p * n;
            for (size_t j = 0; j < n; ++j) crow[j] += av * brow[j];
        }
    }
}

double squared_distance_scalar(const double* a, const double* b, size_t n) {
    double s = 0.0;
    for (size_t i = 0; i < n; ++i) {
        double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

void tanh_vec_scalar(const double* x, double* y, size_t n) {
    for (size_t i = 0; i < n; ++i) y[i] = std::tanh(x[i]);
}

constexpr Ops kScalarOps = {
    "scalar", dot_scalar, axpy_scalar, gemm_acc_scalar, squared_distance_scalar,
    tanh_vec_scalar,
};

}  // namespace

const Ops& scalar_ops() { return kScalarOps; }

}  // namespace nps::kernels
