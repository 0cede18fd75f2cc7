#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "colmat/contrastive.hpp"
#include "colmat/dataset.hpp"
#include "colmat/matrix.hpp"

namespace colmat {

struct GramianEstimate {
    Matrix g;           // symmetrized estimate of S S^T
    Matrix std_error;   // per-entry standard error after symmetrization
    Matrix pair_counts; // pairs averaged per cell (before symmetrization)
};

// G_ij estimated as the mean of V over m_per_cell pairs from T_i x T_j
// (uniform with replacement; full enumeration once m_per_cell covers the
// product). Standard errors decompose the pair-mean variance into a pure pair
// term plus per-dataset terms shared across cells in a row/column, so the
// (G + G^T)/2 average halves only the independent part.
GramianEstimate estimate_gramian(const SimilarityFn& v, const Dataset& data,
                                 std::size_t m_per_cell, std::uint64_t seed);

struct RecoveryConfig {
    double learning_rate = 1e-2; // initial step, backtracks by halving
    double lambda = 10.0;        // weight of the stochasticity/negativity penalty
    double gamma = -1.0;         // residual target; < 0 means 1e-4 * K
    std::size_t max_iterations = 50000;
    std::optional<Matrix> init; // default: identity
    bool enforce_symmetry = true;
};

struct RecoveryResult {
    Matrix s_hat;    // projected estimate: non-negative rows, each summing to 1
    Matrix best_raw; // unprojected iterate with the smallest residual
    double residual = 0.0; // ||best_raw best_raw^T - G||_F
    std::size_t iterations = 0;
    bool converged = false;
    bool stalled = false;
    bool diagonally_dominant = false;
    double initial_objective = 0.0;
    double final_objective = 0.0;
    double max_step_increase = 0.0; // largest accepted objective increase (0 when monotone)
    std::vector<std::string> warnings;
};

// Gradient descent on ||X X^T - G||_F^2 with the row-sum and negativity
// penalties applied through their exact proximal maps, backtracking line
// search, and optional symmetry enforcement. Requires G square, symmetric
// within 1e-6, entries in [-1e-6, 1 + 1e-6].
RecoveryResult recover_collision_matrix(const Matrix& g, const RecoveryConfig& config = {});

// Analytic gradient 2(E + E^T)X of the smooth fit term ||X X^T - G||_F^2,
// exposed so it can be checked against finite differences.
Matrix recovery_smooth_gradient(const Matrix& x, const Matrix& g);

struct PrecisionRecall {
    std::vector<std::optional<double>> precision; // empty optional when column mass is zero
    std::vector<double> recall;
};

// precision_i = pi_i S_ii / sum_k pi_k S_ki, recall_i = S_ii.
PrecisionRecall precision_recall_from_s(const Matrix& s, const SimplexVector& priors);

// 1 - 2 S_12 for two-class matrices, clamped to [0, 1].
double collision_divergence_from_s(const Matrix& s);

} // namespace colmat
