#pragma once

#include <cstdint>
#include <vector>

#include "colmat/contrastive.hpp"
#include "colmat/dataset.hpp"
#include "colmat/matrix.hpp"

namespace colmat {

// Per-class reference points used to turn similarity scores into posteriors.
struct ComparisonSets {
    std::size_t d = 0;
    std::vector<std::vector<double>> points; // K buffers, counts[k] x d
    std::vector<std::size_t> counts;

    const double* point(std::size_t k, std::size_t i) const {
        return points[k].data() + i * d;
    }
};

// m points per class sampled without replacement (capped at the class size).
// An empty class throws UnusableClassError.
ComparisonSets make_comparison_sets(const Dataset& data, std::size_t m, std::uint64_t seed);

// q_k(x) = mean over the class-k comparison set of V(x, x~).
std::vector<double> expected_similarity_scores(const SimilarityFn& v, const ComparisonSets& sets,
                                               const double* x);

struct PosteriorEstimate {
    std::vector<double> y_hat; // simplex-projected solve of S y = q
    std::vector<double> raw;   // unprojected solution
    std::vector<double> q_hat;
    double projection_distance = 0.0; // L1 gap between raw and y_hat
    double condition_estimate = 0.0;  // 1-norm condition estimate of S
    bool dominance_warning = false;   // S not strictly diagonally dominant
};

// Solves S y = q: the class-k score averages y_j over D_k, so q_k equals
// sum_j S_kj y_j(x). A condition estimate above 1e8 throws
// SingularMatrixError; losing strict diagonal dominance only sets the flag.
PosteriorEstimate posterior_from_similarity(const Matrix& s, const std::vector<double>& q_hat);

PosteriorEstimate estimate_posterior(const SimilarityFn& v, const Matrix& s,
                                     const ComparisonSets& sets, const double* x);

// Chunk-parallel over query rows.
std::vector<PosteriorEstimate> estimate_posterior_batch(const SimilarityFn& v, const Matrix& s,
                                                        const ComparisonSets& sets,
                                                        const std::vector<double>& queries,
                                                        std::size_t n, std::size_t d);

} // namespace colmat
