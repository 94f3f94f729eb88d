#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>

#include "nps/kernels/kernels.hpp"
#include "nps/sample/sampler.hpp"

namespace nps::sample {

namespace {

double next_uniform(std::mt19937_64& rng) {
    return static_cast<double>(rng() >> 11) * (1.0 / 9007199254740992.0);
}

double sqdist(const std::vector<double>& a, const std::vector<double>& b) {
    return kernels::active().squared_distance(a.data(), b.data(), a.size());
}

// k-means++ seeding: first centroid uniform, then proportional to squared
// distance from the nearest chosen centroid.
std::vector<std::vector<double>> seed_centroids(const std::vector<std::vector<double>>& pts,
                                                int k, std::mt19937_64& rng) {
    std::vector<std::vector<double>> centroids;
    centroids.push_back(pts[rng() % pts.size()]);
    std::vector<double> d2(pts.size());
    while (static_cast<int>(centroids.size()) < k) {
        double total = 0.0;
        for (size_t i = 0; i < pts.size(); ++i) {
            double best = sqdist(pts[i], centroids[0]);
            for (size_t c = 1; c < centroids.size(); ++c)
                best = std::min(best, sqdist(pts[i], centroids[c]));
            d2[i] = best;
            total += best;
        }
        size_t pick = 0;
        if (total <= 0.0) {
            pick = rng() % pts.size();
        } else {
            double r = next_uniform(rng) * total;
            double acc = 0.0;
            for (size_t i = 0; i < pts.size(); ++i) {
                acc += d2[i];
                pick = i;
                if (acc >= r) break;
            }
        }
        centroids.push_back(pts[pick]);
    }
    return centroids;
}

KmeansRun lloyd(const std::vector<std::vector<double>>& pts, int k, std::mt19937_64& rng) {
    const size_t n = pts.size();
    const size_t d = pts[0].size();
    KmeansRun run;
    run.centroids = seed_centroids(pts, k, rng);
    run.assignment.assign(n, 0);

    for (int iter = 0; iter < 300; ++iter) {
        // assignment step
        double inertia = 0.0;
        for (size_t i = 0; i < n; ++i) {
            int best = 0;
            double best_d = sqdist(pts[i], run.centroids[0]);
            for (int c = 1; c < k; ++c) {
                double dist = sqdist(pts[i], run.centroids[c]);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            run.assignment[i] = best;
            inertia += best_d;
        }
        run.inertia_trace.push_back(inertia);
        run.inertia = inertia;

        // update step
        std::vector<std::vector<double>> next(k, std::vector<double>(d, 0.0));
        std::vector<size_t> count(k, 0);
        for (size_t i = 0; i < n; ++i) {
            for (size_t j = 0; j < d; ++j) next[run.assignment[i]][j] += pts[i][j];
            ++count[run.assignment[i]];
        }
        for (int c = 0; c < k; ++c) {
            if (count[c] == 0) {
                // empty cluster: restart its centroid at the point farthest
                // from its current centroid assignment
                size_t far = 0;
                double far_d = -1.0;
                for (size_t i = 0; i < n; ++i) {
                    double dist = sqdist(pts[i], run.centroids[run.assignment[i]]);
                    if (dist > far_d) {
                        far_d = dist;
                        far = i;
                    }
                }
                next[c] = pts[far];
            } else {
                for (size_t j = 0; j < d; ++j) next[c][j] /= static_cast<double>(count[c]);
            }
        }

        double shift = 0.0;
        for (int c = 0; c < k; ++c) shift = std::max(shift, sqdist(run.centroids[c], next[c]));
        run.centroids = std::move(next);
        if (std::sqrt(shift) < 1e-8) break;
    }

    // final assignment against the converged centroids
    double inertia = 0.0;
    for (size_t i = 0; i < n; ++i) {
        int best = 0;
        double best_d = sqdist(pts[i], run.centroids[0]);
        for (int c = 1; c < k; ++c) {
            double dist = sqdist(pts[i], run.centroids[c]);
            if (dist < best_d) {
                best_d = dist;
                best = c;
            }
        }
        run.assignment[i] = best;
        inertia += best_d;
    }
    run.inertia_trace.push_back(inertia);
    run.inertia = inertia;
    return run;
}

}  // namespace

KmeansRun kmeans(const std::vector<std::vector<double>>& points, int k, uint64_t seed,
                 int restarts) {
    if (points.empty()) throw std::invalid_argument("kmeans: empty input");
    if (k < 1 || k > static_cast<int>(points.size()))
        throw std::invalid_argument("kmeans: k out of range");
    if (restarts < 1) throw std::invalid_argument("kmeans: restarts must be >= 1");

    KmeansRun best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (int r = 0; r < restarts; ++r) {
        std::mt19937_64 rng(seed ^ (0x243f6a8885a308d3ull + static_cast<uint64_t>(k) * 1000003 +
                                    static_cast<uint64_t>(r)));
        KmeansRun run = lloyd(points, k, rng);
        if (run.inertia < best.inertia) best = std::move(run);
    }
    return best;
}

double bic_score(const std::vector<std::vector<double>>& points, const KmeansRun& run) {
    const double n = static_cast<double>(points.size());
    const double d = static_cast<double>(points[0].size());
    const int k = static_cast<int>(run.centroids.size());

    std::vector<double> sizes(k, 0.0);
    for (int a : run.assignment) sizes[a] += 1.0;

    double variance = run.inertia / (d * std::max(1.0, n - k));
    variance = std::max(variance, 1e-12);  // degenerate exact fits

    double loglik = 0.0;
    for (int c = 0; c < k; ++c)
        if (sizes[c] > 0) loglik += sizes[c] * std::log(sizes[c] / n);
    loglik -= n * d / 2.0 * std::log(2.0 * M_PI * variance);
    loglik -= d * (n - k) / 2.0;

    double p = static_cast<double>(k) * (d + 1.0);
    return loglik - p / 2.0 * std::log(n);
}

ClusterModel kmeans_bic(const std::vector<std::vector<double>>& points, int maxk,
                        uint64_t seed, int restarts, double threshold) {
    if (points.empty()) throw std::invalid_argument("kmeans_bic: empty input");
    if (maxk < 1) throw std::invalid_argument("kmeans_bic: maxk must be >= 1");
    int upper = std::min<int>(maxk, static_cast<int>(points.size()));

    std::vector<KmeansRun> runs;
    std::vector<double> scores;
    for (int k = 1; k <= upper; ++k) {
        runs.push_back(kmeans(points, k, seed, restarts));
        scores.push_back(bic_score(points, runs.back()));
    }

    // Min-max normalize so the threshold rule works with negative scores.
    double lo = *std::min_element(scores.begin(), scores.end());
    double hi = *std::max_element(scores.begin(), scores.end());
    int chosen = 0;  // index = k-1
    if (hi > lo) {
        for (int i = 0; i < static_cast<int>(scores.size()); ++i) {
            if ((scores[i] - lo) / (hi - lo) >= threshold) {
                chosen = i;
                break;
            }
        }
    }

    const KmeansRun& run = runs[chosen];
    ClusterModel m;
    m.k = chosen + 1;
    m.centroids = run.centroids;
    m.assignment = run.assignment;
    m.bic_scores = scores;
    m.inertia = run.inertia;
    m.representative.assign(m.k, -1);
    std::vector<double> best_d(m.k, std::numeric_limits<double>::infinity());
    for (size_t i = 0; i < points.size(); ++i) {
        int c = m.assignment[i];
        double dist = sqdist(points[i], m.centroids[c]);
        if (dist < best_d[c]) {
            best_d[c] = dist;
            m.representative[c] = static_cast<int>(i);
        }
    }
    return m;
}

double random_representative_mape(const std::vector<double>& cpi, int k, uint64_t seed) {
    if (cpi.empty()) throw std::invalid_argument("random baseline: empty CPI series");
    std::mt19937_64 rng(seed ^ 0x452821e638d01377ull);
    int kk = std::min<int>(k, static_cast<int>(cpi.size()));
    std::vector<int> assignment(cpi.size());
    std::vector<std::vector<int>> members(kk);
    for (size_t i = 0; i < cpi.size(); ++i) {
        assignment[i] = static_cast<int>(rng() % static_cast<uint64_t>(kk));
        members[assignment[i]].push_back(static_cast<int>(i));
    }
    std::vector<int> rep(kk, -1);
    for (int c = 0; c < kk; ++c)
        if (!members[c].empty()) rep[c] = members[c][rng() % members[c].size()];

    double total = 0.0;
    for (size_t i = 0; i < cpi.size(); ++i) {
        if (cpi[i] <= 0) throw std::invalid_argument("random baseline: CPI must be positive");
        double rep_cpi = cpi[rep[assignment[i]]];
        total += std::abs(rep_cpi - cpi[i]) / cpi[i];
    }
    return total / static_cast<double>(cpi.size());
}

}  // namespace nps::sample
