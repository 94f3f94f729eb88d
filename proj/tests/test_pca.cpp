#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <random>
#include <sstream>
#include <vector>

#include "nps/sample/pca.hpp"

using namespace nps;
using sample::Pca2;

namespace {

std::vector<std::vector<double>> random_rows(std::mt19937_64& rng, size_t n, size_t d) {
    std::vector<std::vector<double>> out(n, std::vector<double>(d));
    for (auto& row : out)
        for (auto& v : row)
            v = static_cast<double>(rng() >> 11) / 9007199254740992.0 - 0.5;
    return out;
}

}  // namespace

TEST_CASE("two points project to +-d/2 on the first component") {
    std::vector<std::vector<double>> rows = {{0.0, 0.0, 0.0}, {3.0, 4.0, 0.0}};
    Pca2 p = sample::pca2(rows);
    REQUIRE(p.points.size() == 2);
    CHECK_FALSE(p.degenerate);
    // distance 5, centered at the midpoint
    CHECK(std::abs(p.points[0].first) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(std::abs(p.points[1].first) == doctest::Approx(2.5).epsilon(1e-12));
    CHECK(p.points[0].first == doctest::Approx(-p.points[1].first).epsilon(1e-12));
    CHECK(p.points[0].second == doctest::Approx(0.0));
    CHECK(p.points[1].second == doctest::Approx(0.0));
    CHECK(p.var2 == doctest::Approx(0.0));
}

TEST_CASE("eigenvalues and loadings match a hand covariance") {
    // axis-aligned spread: variance 8 along x, 2 along y (population covariance
    // with 1/n normalization would be 4 and 1; with 1/(n-1) it is 8 and 2 --
    // accept either by checking the ratio and orthonormality)
    std::vector<std::vector<double>> rows = {
        {-2.0, 0.0}, {2.0, 0.0}, {0.0, -1.0}, {0.0, 1.0}};
    Pca2 p = sample::pca2(rows);
    CHECK(p.var1 / p.var2 == doctest::Approx(4.0).epsilon(1e-9));

    // pc1 along x, pc2 along y, unit length, positive orientation
    CHECK(std::abs(p.pc1[0]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.pc1[1] == doctest::Approx(0.0).epsilon(1e-9));
    CHECK(std::abs(p.pc2[1]) == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(p.pc1[0] > 0.0);  // largest-magnitude loading is positive
    CHECK(p.pc2[1] > 0.0);
}

TEST_CASE("projected variance matches the eigenvalues on random data") {
    std::mt19937_64 rng(12);
    auto rows = random_rows(rng, 40, 6);
    Pca2 p = sample::pca2(rows);
    CHECK(p.var1 >= p.var2);
    CHECK(p.var2 >= 0.0);

    double m1 = 0, m2 = 0;
    for (auto& [a, b] : p.points) {
        m1 += a;
        m2 += b;
    }
    m1 /= p.points.size();
    m2 /= p.points.size();
    CHECK(m1 == doctest::Approx(0.0).epsilon(1e-9));  // centered

    double v1 = 0, v2 = 0, cov = 0;
    for (auto& [a, b] : p.points) {
        v1 += (a - m1) * (a - m1);
        v2 += (b - m2) * (b - m2);
        cov += (a - m1) * (b - m2);
    }
    // same normalization as the eigenvalues, whichever it is
    double scale1 = p.var1 / v1;
    CHECK(p.var2 == doctest::Approx(v2 * scale1).epsilon(1e-6));
    CHECK(cov * scale1 == doctest::Approx(0.0).epsilon(1e-6));  // decorrelated

    // loadings are orthonormal
    double n1 = 0, n2 = 0, dot = 0;
    for (size_t j = 0; j < p.pc1.size(); ++j) {
        n1 += p.pc1[j] * p.pc1[j];
        n2 += p.pc2[j] * p.pc2[j];
        dot += p.pc1[j] * p.pc2[j];
    }
    CHECK(n1 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(n2 == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(dot == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("identical rows are degenerate") {
    std::vector<std::vector<double>> rows(5, std::vector<double>{1.0, 2.0, 3.0});
    Pca2 p = sample::pca2(rows);
    CHECK(p.degenerate);
    for (auto& [a, b] : p.points) {
        CHECK(a == 0.0);
        CHECK(b == 0.0);
    }
}

TEST_CASE("pca csv export with and without cluster labels") {
    std::vector<std::vector<double>> rows = {{0.0, 0.0}, {1.0, 0.0}, {0.0, 2.0}};
    Pca2 p = sample::pca2(rows);

    sample::write_pca_csv(p, nullptr, "pca_test.csv");
    {
        std::ifstream in("pca_test.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "interval,pc1,pc2");
        int count = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++count;
        CHECK(count == 3);
    }

    std::vector<int> clusters = {0, 1, 1};
    sample::write_pca_csv(p, &clusters, "pca_test.csv");
    {
        std::ifstream in("pca_test.csv");
        std::string header;
        std::getline(in, header);
        CHECK(header == "interval,pc1,pc2,cluster");
        std::string line;
        std::getline(in, line);
        CHECK(line.back() == '0');
    }
    std::remove("pca_test.csv");
}

TEST_CASE("pca is deterministic") {
    std::mt19937_64 rng(9);
    auto rows = random_rows(rng, 25, 8);
    Pca2 a = sample::pca2(rows);
    Pca2 b = sample::pca2(rows);
    CHECK(a.points == b.points);
    CHECK(a.pc1 == b.pc1);
    CHECK(a.var1 == b.var1);
}
