#include <doctest.h>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "nps/kernels/kernels.hpp"

using namespace nps;

namespace {

std::vector<double> random_vec(std::mt19937_64& rng, size_t n) {
    std::vector<double> v(n);
    for (auto& x : v) {
        // mix magnitudes to exercise accumulation order sensitivity mildly
        x = (static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5) *
            (rng() % 2 ? 1.0 : 100.0);
    }
    return v;
}

}  // namespace

TEST_CASE("scalar dot/axpy/squared_distance agree with hand values") {
    const auto& ops = kernels::scalar_ops();
    std::vector<double> a{1, 2, 3}, b{4, 5, 6};
    CHECK(ops.dot(a.data(), b.data(), 3) == doctest::Approx(32.0).epsilon(1e-15));
    CHECK(ops.squared_distance(a.data(), b.data(), 3) ==
          doctest::Approx(27.0).epsilon(1e-15));
    std::vector<double> y{1, 1, 1};
    ops.axpy(2.0, a.data(), y.data(), 3);
    CHECK(y == std::vector<double>{3, 5, 7});
}

TEST_CASE("scalar gemm_acc matches a naive triple loop") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        size_t m = 1 + rng() % 7, k = 1 + rng() % 9, n = 1 + rng() % 8;
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        auto c = random_vec(rng, m * n);
        auto want = c;
        for (size_t i = 0; i < m; ++i)
            for (size_t j = 0; j < n; ++j)
                for (size_t l = 0; l < k; ++l) want[i * n + j] += a[i * k + l] * b[l * n + j];
        kernels::scalar_ops().gemm_acc(a.data(), b.data(), c.data(), m, k, n);
        for (size_t i = 0; i < m * n; ++i)
            CHECK(c[i] == doctest::Approx(want[i]).epsilon(1e-12));
    }
}

TEST_CASE("avx2 variants match scalar, including remainder lanes") {
    if (!kernels::avx2_available()) {
        MESSAGE("avx2 not available; the avx2 table falls back to scalar");
    }
    const auto& s = kernels::scalar_ops();
    const auto& v = kernels::avx2_ops();
    std::mt19937_64 rng(17);

    // sizes straddling the 4-wide vector width, including 0
    for (size_t n : {size_t{0}, size_t{1}, size_t{2}, size_t{3}, size_t{4}, size_t{5},
                     size_t{7}, size_t{8}, size_t{13}, size_t{64}, size_t{65}, size_t{257}}) {
        auto a = random_vec(rng, n);
        auto b = random_vec(rng, n);

        CHECK(v.dot(a.data(), b.data(), n) ==
              doctest::Approx(s.dot(a.data(), b.data(), n)).epsilon(1e-12));
        CHECK(v.squared_distance(a.data(), b.data(), n) ==
              doctest::Approx(s.squared_distance(a.data(), b.data(), n)).epsilon(1e-12));

        auto y1 = random_vec(rng, n);
        auto y2 = y1;
        s.axpy(1.75, a.data(), y1.data(), n);
        v.axpy(1.75, a.data(), y2.data(), n);
        for (size_t i = 0; i < n; ++i) CHECK(y2[i] == doctest::Approx(y1[i]).epsilon(1e-13));

        std::vector<double> t1(n), t2(n);
        s.tanh_vec(a.data(), t1.data(), n);
        v.tanh_vec(a.data(), t2.data(), n);
        for (size_t i = 0; i < n; ++i) CHECK(t2[i] == doctest::Approx(t1[i]).epsilon(1e-12));
    }
}

TEST_CASE("avx2 gemm_acc matches scalar on awkward shapes") {
    const auto& s = kernels::scalar_ops();
    const auto& v = kernels::avx2_ops();
    std::mt19937_64 rng(23);
    for (int trial = 0; trial < 30; ++trial) {
        size_t m = 1 + rng() % 11, k = 1 + rng() % 17, n = 1 + rng() % 13;
        auto a = random_vec(rng, m * k);
        auto b = random_vec(rng, k * n);
        auto c1 = random_vec(rng, m * n);
        auto c2 = c1;
        s.gemm_acc(a.data(), b.data(), c1.data(), m, k, n);
        v.gemm_acc(a.data(), b.data(), c2.data(), m, k, n);
        for (size_t i = 0; i < m * n; ++i)
            CHECK(c2[i] == doctest::Approx(c1[i]).epsilon(1e-12));
    }
}

TEST_CASE("force_implementation switches the active table") {
    kernels::force_implementation("scalar");
    CHECK(std::string(kernels::active().name) == "scalar");
    kernels::force_implementation("avx2");
    if (kernels::avx2_available())
        CHECK(std::string(kernels::active().name) == "avx2");
    else
        CHECK(std::string(kernels::active().name) == "scalar");
    CHECK_THROWS_AS(kernels::force_implementation("sse9000"), std::exception);

    // restore the default dispatch for other tests in this binary
    kernels::force_implementation(kernels::avx2_available() ? "avx2" : "scalar");
}

TEST_CASE("tanh_vec handles extreme inputs without NaN") {
    std::vector<double> x{-1000.0, -20.0, 0.0, 20.0, 1000.0};
    std::vector<double> y(x.size());
    for (const auto* ops : {&kernels::scalar_ops(), &kernels::avx2_ops()}) {
        ops->tanh_vec(x.data(), y.data(), x.size());
        CHECK(y[0] == doctest::Approx(-1.0));
        CHECK(y[2] == doctest::Approx(0.0));
        CHECK(y[4] == doctest::Approx(1.0));
        for (double v : y) CHECK(std::isfinite(v));
    }
}
