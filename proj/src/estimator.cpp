#include "colmat/estimator.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"
#include "colmat/rng.hpp"

namespace colmat {

GramianEstimate estimate_gramian(const SimilarityFn& v, const Dataset& data,
                                 std::size_t m_per_cell, std::uint64_t seed) {
    if (m_per_cell == 0) throw ConfigError("m_per_cell must be positive");
    const int K = data.K;
    const auto by_class = indices_by_class(data);
    for (int k = 0; k < K; ++k)
        if (by_class[static_cast<std::size_t>(k)].empty())
            throw UnusableClassError("class " + data.label_names[static_cast<std::size_t>(k)] +
                                         " has no rows",
                                     static_cast<std::size_t>(k));
    const std::size_t Ks = static_cast<std::size_t>(K);
    Matrix raw(Ks, Ks);
    Matrix pair_counts(Ks, Ks);
    // Variance of each raw cell split into the pair-subsampling part (pv) and
    // the dataset part (ds); they recombine differently after symmetrization.
    Matrix pv(Ks, Ks), ds(Ks, Ks);

    for_each_chunk(Ks * Ks, [&](std::size_t cell) {
        const std::size_t i = cell / Ks;
        const std::size_t j = cell % Ks;
        const auto& rows_i = by_class[i];
        const auto& rows_j = by_class[j];
        const std::size_t ni = rows_i.size();
        const std::size_t nj = rows_j.size();
        const bool exhaustive = m_per_cell >= ni * nj;
        const std::size_t m = exhaustive ? ni * nj : m_per_cell;

        double sum = 0.0, sumsq = 0.0;
        std::vector<double> sum_a(ni, 0.0), sum_b(nj, 0.0);
        std::vector<std::size_t> cnt_a(ni, 0), cnt_b(nj, 0);
        Rng rng = make_rng(derive_seed(seed, cell));
        std::uniform_int_distribution<std::size_t> pick_a(0, ni - 1), pick_b(0, nj - 1);
        for (std::size_t t = 0; t < m; ++t) {
            std::size_t pa, pb;
            if (exhaustive) {
                pa = t / nj;
                pb = t % nj;
            } else {
                pa = pick_a(rng);
                pb = pick_b(rng);
            }
            const double val = v(data.row(rows_i[pa]), data.row(rows_j[pb]));
            sum += val;
            sumsq += val * val;
            sum_a[pa] += val;
            ++cnt_a[pa];
            sum_b[pb] += val;
            ++cnt_b[pb];
        }
        const double md = static_cast<double>(m);
        const double mean = sum / md;
        raw.at(i, j) = mean;
        pair_counts.at(i, j) = md;

        double s2_total = 0.0;
        if (m > 1) s2_total = std::max(0.0, (sumsq - md * mean * mean) / (md - 1.0));

        // One-way ANOVA per grouping: the between-group variance component is
        // s2_total minus the within-group mean square; a grouping with one
        // observation per group cannot separate them, so fall back to the
        // conservative full total.
        auto between = [&](const std::vector<double>& gs, const std::vector<std::size_t>& gc) {
            double group_sq = 0.0;
            std::size_t groups = 0;
            for (std::size_t a = 0; a < gs.size(); ++a) {
                if (gc[a] == 0) continue;
                group_sq += gs[a] * gs[a] / static_cast<double>(gc[a]);
                ++groups;
            }
            const double denom = md - static_cast<double>(groups);
            if (denom <= 0.0) return s2_total;
            const double within = std::max(0.0, (sumsq - group_sq) / denom);
            return std::max(0.0, s2_total - within);
        };
        const double sigma_a = between(sum_a, cnt_a);
        const double sigma_b = between(sum_b, cnt_b);

        pv.at(i, j) = exhaustive ? 0.0 : s2_total / md;
        ds.at(i, j) = i == j ? 4.0 * sigma_a / static_cast<double>(ni)
                             : sigma_a / static_cast<double>(ni) +
                                   sigma_b / static_cast<double>(nj);
    });

    GramianEstimate est{Matrix(Ks, Ks), Matrix(Ks, Ks), std::move(pair_counts)};
    for (std::size_t i = 0; i < Ks; ++i) {
        for (std::size_t j = 0; j < Ks; ++j) {
            est.g.at(i, j) = 0.5 * (raw.at(i, j) + raw.at(j, i));
            // Pair-subsampling noise is independent across the transposed
            // cells, so averaging quarters it; the dataset terms are shared
            // and survive the average in full.
            est.std_error.at(i, j) = std::sqrt(0.25 * (pv.at(i, j) + pv.at(j, i)) +
                                               0.5 * (ds.at(i, j) + ds.at(j, i)));
        }
    }
    return est;
}

namespace {

double penalty(const Matrix& x, double lambda) {
    double p = 0.0;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) {
            const double v = x.at(i, j);
            row_sum += v;
            if (v < 0.0) p -= v;
        }
        p += std::abs(row_sum - 1.0);
    }
    return lambda * p;
}

double fit_residual(const Matrix& x, const Matrix& g, Matrix& e) {
    e = gramian(x);
    double acc = 0.0;
    for (std::size_t t = 0; t < e.data.size(); ++t) {
        e.data[t] -= g.data[t];
        acc += e.data[t] * e.data[t];
    }
    return acc; // squared Frobenius norm of X X^T - G
}

void smooth_gradient(const Matrix& x, const Matrix& e, Matrix& grad) {
    // d/dX ||X X^T - G||_F^2 = 2 (E + E^T) X with E = X X^T - G.
    Matrix sym_e(e.rows, e.cols);
    for (std::size_t i = 0; i < e.rows; ++i)
        for (std::size_t j = 0; j < e.cols; ++j)
            sym_e.at(i, j) = e.at(i, j) + e.at(j, i);
    grad = matmul(sym_e, x);
    for (double& v : grad.data) v *= 2.0;
}

void prox_step(Matrix& x, double step_lambda, bool symmetrize) {
    // Row-sum piece: the prox of s |sum(row) - 1| shifts the whole row toward
    // sum 1, at most s per entry.
    const std::size_t K = x.cols;
    for (std::size_t i = 0; i < x.rows; ++i) {
        double row_sum = 0.0;
        for (std::size_t j = 0; j < K; ++j) row_sum += x.at(i, j);
        const double r = row_sum - 1.0;
        const double c = (r >= 0.0 ? 1.0 : -1.0) *
                         std::min(std::abs(r) / static_cast<double>(K), step_lambda);
        for (std::size_t j = 0; j < K; ++j) x.at(i, j) -= c;
    }
    // Negativity piece is separable: shrink values in (-s, 0) to zero, shift
    // anything below -s up by s.
    for (double& v : x.data) {
        if (v >= 0.0) continue;
        v = v < -step_lambda ? v + step_lambda : 0.0;
    }
    if (symmetrize) {
        for (std::size_t i = 0; i < x.rows; ++i)
            for (std::size_t j = i + 1; j < x.cols; ++j) {
                const double m = 0.5 * (x.at(i, j) + x.at(j, i));
                x.at(i, j) = m;
                x.at(j, i) = m;
            }
    }
}

} // namespace

RecoveryResult recover_collision_matrix(const Matrix& g, const RecoveryConfig& config) {
    if (!g.square()) throw DimensionError("gramian must be square");
    const std::size_t K = g.rows;
    for (std::size_t i = 0; i < K; ++i)
        for (std::size_t j = 0; j < K; ++j) {
            if (std::abs(g.at(i, j) - g.at(j, i)) > 1e-6)
                throw ConfigError("gramian is not symmetric");
            if (g.at(i, j) < -1e-6 || g.at(i, j) > 1.0 + 1e-6)
                throw ConfigError("gramian entries must lie in [0, 1]");
        }
    if (!(config.learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
    if (config.lambda < 0.0) throw ConfigError("lambda must be non-negative");

    const double gamma = config.gamma >= 0.0 ? config.gamma : 1e-4 * static_cast<double>(K);
    Matrix x = config.init ? *config.init : Matrix::identity(K);
    if (x.rows != K || x.cols != K) throw DimensionError("init shape does not match gramian");
    if (config.enforce_symmetry) {
        for (std::size_t i = 0; i < K; ++i)
            for (std::size_t j = i + 1; j < K; ++j) {
                const double m = 0.5 * (x.at(i, j) + x.at(j, i));
                x.at(i, j) = m;
                x.at(j, i) = m;
            }
    }

    RecoveryResult result;
    Matrix e(K, K), grad(K, K);
    double fit = fit_residual(x, g, e);
    double objective = fit + penalty(x, config.lambda);
    result.initial_objective = objective;
    result.best_raw = x;
    result.residual = std::sqrt(fit);
    double best_residual = result.residual;

    std::size_t iter = 0;
    if (best_residual <= gamma) result.converged = true;
    while (!result.converged && iter < config.max_iterations) {
        smooth_gradient(x, e, grad);
        double t = config.learning_rate;
        Matrix candidate(K, K);
        bool accepted = false;
        double cand_fit = 0.0, cand_obj = 0.0;
        Matrix cand_e(K, K);
        while (t >= 1e-15) {
            candidate = x;
            for (std::size_t idx = 0; idx < candidate.data.size(); ++idx)
                candidate.data[idx] -= t * grad.data[idx];
            prox_step(candidate, t * config.lambda, config.enforce_symmetry);
            cand_fit = fit_residual(candidate, g, cand_e);
            cand_obj = cand_fit + penalty(candidate, config.lambda);
            if (cand_obj <= objective + 1e-12) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }
        if (!accepted) {
            result.stalled = true;
            result.warnings.push_back("line search stalled before reaching the residual target");
            break;
        }
        result.max_step_increase = std::max(result.max_step_increase, cand_obj - objective);
        x = std::move(candidate);
        e = std::move(cand_e);
        fit = cand_fit;
        objective = cand_obj;
        ++iter;
        const double res = std::sqrt(fit);
        if (res < best_residual) {
            best_residual = res;
            result.best_raw = x;
        }
        if (res <= gamma) result.converged = true;
    }

    result.iterations = iter;
    result.final_objective = objective;
    result.residual = best_residual;
    if (!result.converged && !result.stalled)
        result.warnings.push_back("iteration budget exhausted before the residual target");

    // Feasible output: clip negatives and renormalize each row; a row with no
    // positive mass falls back to uniform.
    result.s_hat = result.best_raw;
    for (std::size_t i = 0; i < K; ++i) {
        std::vector<double> row(result.s_hat.data.begin() + static_cast<std::ptrdiff_t>(i * K),
                                result.s_hat.data.begin() + static_cast<std::ptrdiff_t>((i + 1) * K));
        try {
            const SimplexVector proj = project_to_simplex(row);
            std::copy(proj.p.begin(), proj.p.end(),
                      result.s_hat.data.begin() + static_cast<std::ptrdiff_t>(i * K));
        } catch (const DegenerateVectorError&) {
            for (std::size_t j = 0; j < K; ++j)
                result.s_hat.at(i, j) = 1.0 / static_cast<double>(K);
            result.warnings.push_back("row " + std::to_string(i + 1) +
                                      " had no positive mass; projected to uniform");
        }
    }
    result.diagonally_dominant = is_strictly_diag_dominant(result.s_hat);
    return result;
}

Matrix recovery_smooth_gradient(const Matrix& x, const Matrix& g) {
    if (!x.square() || !g.square() || x.rows != g.rows)
        throw DimensionError("gradient needs matching square matrices");
    Matrix e(x.rows, x.cols), grad(x.rows, x.cols);
    fit_residual(x, g, e);
    smooth_gradient(x, e, grad);
    return grad;
}

PrecisionRecall precision_recall_from_s(const Matrix& s, const SimplexVector& priors) {
    if (!s.square() || s.rows != priors.size())
        throw DimensionError("collision matrix and priors disagree on K");
    const std::size_t K = s.rows;
    PrecisionRecall pr;
    pr.precision.resize(K);
    pr.recall.resize(K);
    for (std::size_t i = 0; i < K; ++i) {
        pr.recall[i] = s.at(i, i);
        double col_mass = 0.0;
        for (std::size_t k = 0; k < K; ++k) col_mass += priors.p[k] * s.at(k, i);
        if (col_mass > 0.0)
            pr.precision[i] = priors.p[i] * s.at(i, i) / col_mass;
    }
    return pr;
}

double collision_divergence_from_s(const Matrix& s) {
    if (s.rows != 2 || s.cols != 2)
        throw DimensionError("collision divergence from S needs a 2x2 matrix");
    return std::clamp(1.0 - 2.0 * s.at(0, 1), 0.0, 1.0);
}

} // namespace colmat
