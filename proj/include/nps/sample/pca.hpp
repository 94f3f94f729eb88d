#pragma once

#include <string>
#include <utility>
#include <vector>

namespace nps::sample {

// Mean-centered projection onto the top two principal components of the
// covariance (Jacobi eigendecomposition). Sign convention: each component's
// largest-magnitude loading is positive. All-identical rows are degenerate
// (rank 0): both projections are zero and `degenerate` is set.
struct Pca2 {
    std::vector<std::pair<double, double>> points;
    std::vector<double> pc1, pc2;  // loadings
    double var1 = 0.0, var2 = 0.0;  // eigenvalues
    bool degenerate = false;
};

Pca2 pca2(const std::vector<std::vector<double>>& rows);

// CSV rows (interval-index, pc1, pc2[, cluster]) for scatterplotting.
void write_pca_csv(const Pca2& p, const std::vector<int>* cluster_of,
                   const std::string& path);

}  // namespace nps::sample
