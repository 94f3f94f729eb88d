#pragma once

#include <cstddef>
#include <string>

namespace nps::kernels {

// Data-parallel primitives behind the numeric code (autodiff matmuls,
// attention, k-means distances). Each has a scalar reference implementation
// and an AVX2 variant; the active table is chosen once at startup from
// cpuid, overridable with NPS_KERNELS=scalar|avx2 for equivalence testing.
struct Ops {
    const char* name;

    double (*dot)(const double* a, const double* b, size_t n);
    // y += alpha * x
    void (*axpy)(double alpha, const double* x, double* y, size_t n);
    // C (m x n) += A (m x k) * B (k x n), all row-major, C preinitialized.
    void (*gemm_acc)(const double* a, const double* b, double* c, size_t m, size_t k,
                     size_t n);
    double (*squared_distance)(const double* a, const double* b, size_t n);
    void (*tanh_vec)(const double* x, double* y, size_t n);
};

const Ops& scalar_ops();
const Ops& avx2_ops();   // falls back to scalar when unavailable
bool avx2_available();

// The dispatched table used by callers.
const Ops& active();

// Test hook: force a specific implementation ("scalar" or "avx2").
void force_implementation(const std::string& name);

}  // namespace nps::kernels
