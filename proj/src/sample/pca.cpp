#include "nps/sample/pca.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <vector>

namespace nps::sample {

namespace {

// Cyclic Jacobi rotations on a symmetric matrix; returns eigenvalues on the
// diagonal with eigenvectors in the columns of V.
void jacobi_eigen(std::vector<std::vector<double>>& a, std::vector<std::vector<double>>& v) {
    const int n = static_cast<int>(a.size());
    v.assign(n, std::vector<double>(n, 0.0));
    for (int i = 0; i < n; ++i) v[i][i] = 1.0;

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j) off += a[i][j] * a[i][j];
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                if (std::abs(a[p][q]) < 1e-300) continue;
                double theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                double t = (theta >= 0 ? 1.0 : -1.0) /
                           (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                double c = 1.0 / std::sqrt(t * t + 1.0);
                double s = t * c;
                for (int i = 0; i < n; ++i) {
                    double aip = a[i][p], aiq = a[i][q];
                    a[i][p] = c * aip - s * aiq;
                    a[i][q] = s * aip + c * aiq;
                }
                for (int i = 0; i < n; ++i) {
                    double api = a[p][i], aqi = a[q][i];
                    a[p][i] = c * api - s * aqi;
                    a[q][i] = s * api + c * aqi;
                }
                for (int i = 0; i < n; ++i) {
                    double vip = v[i][p], viq = v[i][q];
                    v[i][p] = c * vip - s * viq;
                    v[i][q] = s * vip + c * viq;
                }
            }
        }
    }
}

}  // namespace

Pca2 pca2(const std::vector<std::vector<double>>& rows) {
    if (rows.size() < 2) throw std::invalid_argument("pca2: need at least 2 rows");
    const size_t n = rows.size();
    const size_t d = rows[0].size();
    for (const auto& r : rows)
        if (r.size() != d) throw std::invalid_argument("pca2: ragged input");

    std::vector<double> mean(d, 0.0);
    for (const auto& r : rows)
        for (size_t j = 0; j < d; ++j) mean[j] += r[j];
    for (double& m : mean) m /= static_cast<double>(n);

    std::vector<std::vector<double>> cov(d, std::vector<double>(d, 0.0));
    for (const auto& r : rows)
        for (size_t i = 0; i < d; ++i)
            for (size_t j = i; j < d; ++j)
                cov[i][j] += (r[i] - mean[i]) * (r[j] - mean[j]);
    for (size_t i = 0; i < d; ++i)
        for (size_t j = i; j < d; ++j) {
            cov[i][j] /= static_cast<double>(n - 1);
            cov[j][i] = cov[i][j];
        }

    std::vector<std::vector<double>> vecs;
    jacobi_eigen(cov, vecs);

    // top-2 eigenvalues
    int i1 = 0, i2 = -1;
    for (size_t i = 1; i < d; ++i)
        if (cov[i][i] > cov[i1][i1]) i1 = static_cast<int>(i);
    for (size_t i = 0; i < d; ++i) {
        if (static_cast<int>(i) == i1) continue;
        if (i2 < 0 || cov[i][i] > cov[i2][i2]) i2 = static_cast<int>(i);
    }
    if (d == 1) i2 = i1;

    Pca2 out;
    out.var1 = std::max(0.0, cov[i1][i1]);
    out.var2 = i2 >= 0 ? std::max(0.0, cov[i2][i2]) : 0.0;
    out.pc1.resize(d);
    out.pc2.resize(d);
    for (size_t j = 0; j < d; ++j) {
        out.pc1[j] = vecs[j][i1];
        out.pc2[j] = i2 >= 0 ? vecs[j][i2] : 0.0;
    }
    // fixed sign: largest-magnitude loading positive
    for (auto* pc : {&out.pc1, &out.pc2}) {
        size_t arg = 0;
        for (size_t j = 1; j < d; ++j)
            if (std::abs((*pc)[j]) > std::abs((*pc)[arg])) arg = j;
        if ((*pc)[arg] < 0)
            for (double& x : *pc) x = -x;
    }

    out.degenerate = out.var1 < 1e-18;
    for (const auto& r : rows) {
        double x = 0.0, y = 0.0;
        if (!out.degenerate) {
            for (size_t j = 0; j < d; ++j) {
                x += (r[j] - mean[j]) * out.pc1[j];
                y += (r[j] - mean[j]) * out.pc2[j];
            }
            if (out.var2 < 1e-18) y = 0.0;
        }
        out.points.emplace_back(x, y);
    }
    if (out.degenerate) {
        std::fill(out.pc1.begin(), out.pc1.end(), 0.0);
        std::fill(out.pc2.begin(), out.pc2.end(), 0.0);
    }
    return out;
}

void write_pca_csv(const Pca2& p, const std::vector<int>* cluster_of,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot open PCA file for writing: " + path);
    out << (cluster_of ? "interval,pc1,pc2,cluster\n" : "interval,pc1,pc2\n");
    for (size_t i = 0; i < p.points.size(); ++i) {
        char buf[96];
        std::snprintf(buf, sizeof buf, "%.9f,%.9f", p.points[i].first, p.points[i].second);
        out << i << "," << buf;
        if (cluster_of) out << "," << (*cluster_of)[i];
        out << "\n";
    }
    if (!out) throw std::runtime_error("I/O error writing PCA file: " + path);
}

}  // namespace nps::sample
