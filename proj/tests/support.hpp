#pragma once

// Shared helpers for the test binaries; not part of the library.

#include <cstddef>
#include <random>
#include <vector>

#include "colmat/matrix.hpp"
#include "colmat/parallel.hpp"
#include "colmat/rng.hpp"

namespace testsupport {

inline colmat::Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    colmat::Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return m;
}

// Random symmetric doubly stochastic matrix with diagonal >= blend (blend in
// (0.5, 1) forces strict diagonal dominance): Sinkhorn-style row
// normalization alternated with symmetrization drives a random positive
// matrix to doubly stochastic, then blending with the identity lifts the
// diagonal while preserving both properties.
inline colmat::Matrix random_dominant_doubly_stochastic(std::size_t K, colmat::Rng& rng,
                                                        double blend = 0.65) {
    std::uniform_real_distribution<double> u(0.05, 1.0);
    colmat::Matrix a(K, K);
    for (double& v : a.data) v = u(rng);
    for (int pass = 0; pass < 500; ++pass) {
        for (std::size_t i = 0; i < K; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < K; ++j) sum += a.at(i, j);
            for (std::size_t j = 0; j < K; ++j) a.at(i, j) /= sum;
        }
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = i + 1; j < K; ++j) {
                const double m = 0.5 * (a.at(i, j) + a.at(j, i));
                a.at(i, j) = m;
                a.at(j, i) = m;
            }
    }
    colmat::Matrix s(K, K);
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j)
            s.at(i, j) = (i == j ? blend : 0.0) + (1.0 - blend) * a.at(i, j);
    return s;
}

// Identity perturbed by uniform +-noise with rows re-normalized.
inline colmat::Matrix perturbed_identity(std::size_t K, double noise, colmat::Rng& rng) {
    std::uniform_real_distribution<double> u(-noise, noise);
    colmat::Matrix x = colmat::Matrix::identity(K);
    for (double& v : x.data) v += u(rng);
    for (std::size_t i = 0; i < K; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < K; ++j) sum += x.at(i, j);
        for (std::size_t j = 0; j < K; ++j) x.at(i, j) /= sum;
    }
    return x;
}

// Random point on the simplex (normalized exponentials).
inline std::vector<double> random_simplex_point(std::size_t K, colmat::Rng& rng) {
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> y(K);
    double sum = 0.0;
    for (double& v : y) {
        v = ex(rng);
        sum += v;
    }
    for (double& v : y) v /= sum;
    return y;
}

// Restores the serial/parallel switch at scope exit.
struct ParallelGuard {
    bool saved;
    ParallelGuard() : saved(colmat::parallel_enabled()) {}
    ~ParallelGuard() { colmat::set_parallel_enabled(saved); }
};

} // namespace testsupport
