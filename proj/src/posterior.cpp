#include "colmat/posterior.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"
#include "colmat/rng.hpp"

namespace colmat {

ComparisonSets make_comparison_sets(const Dataset& data, std::size_t m, std::uint64_t seed) {
    if (m == 0) throw ConfigError("comparison set size must be positive");
    const auto by_class = indices_by_class(data);
    ComparisonSets sets;
    sets.d = data.d;
    sets.points.resize(static_cast<std::size_t>(data.K));
    sets.counts.resize(static_cast<std::size_t>(data.K));
    for (int k = 0; k < data.K; ++k) {
        const std::size_t ks = static_cast<std::size_t>(k);
        std::vector<std::size_t> members = by_class[ks];
        if (members.empty())
            throw UnusableClassError("class " + data.label_names[ks] + " has no rows", ks);
        Rng rng = make_rng(derive_seed(seed, ks));
        std::shuffle(members.begin(), members.end(), rng);
        const std::size_t take = std::min(m, members.size());
        sets.counts[ks] = take;
        sets.points[ks].resize(take * data.d);
        for (std::size_t i = 0; i < take; ++i)
            std::copy(data.row(members[i]), data.row(members[i]) + data.d,
                      sets.points[ks].data() + i * data.d);
    }
    return sets;
}

std::vector<double> expected_similarity_scores(const SimilarityFn& v, const ComparisonSets& sets,
                                               const double* x) {
    std::vector<double> q(sets.counts.size());
    for (std::size_t k = 0; k < sets.counts.size(); ++k) {
        double acc = 0.0;
        for (std::size_t i = 0; i < sets.counts[k]; ++i) acc += v(x, sets.point(k, i));
        q[k] = acc / static_cast<double>(sets.counts[k]);
    }
    return q;
}

PosteriorEstimate posterior_from_similarity(const Matrix& s, const std::vector<double>& q_hat) {
    if (!s.square() || s.rows != q_hat.size())
        throw DimensionError("score vector length does not match S");
    PosteriorEstimate est;
    est.q_hat = q_hat;
    est.condition_estimate = condition_estimate_1norm(s);
    if (!(est.condition_estimate < 1e8))
        throw SingularMatrixError("collision matrix is too ill-conditioned to invert", 0);
    est.dominance_warning = !is_strictly_diag_dominant(s);
    est.raw = solve_linear(s, q_hat);
    est.y_hat = project_to_simplex(est.raw).p;
    est.projection_distance = 0.0;
    for (std::size_t i = 0; i < est.raw.size(); ++i)
        est.projection_distance += std::abs(est.raw[i] - est.y_hat[i]);
    return est;
}

PosteriorEstimate estimate_posterior(const SimilarityFn& v, const Matrix& s,
                                     const ComparisonSets& sets, const double* x) {
    return posterior_from_similarity(s, expected_similarity_scores(v, sets, x));
}

std::vector<PosteriorEstimate> estimate_posterior_batch(const SimilarityFn& v, const Matrix& s,
                                                        const ComparisonSets& sets,
                                                        const std::vector<double>& queries,
                                                        std::size_t n, std::size_t d) {
    if (queries.size() != n * d) throw DimensionError("query buffer does not match n x d");
    if (d != sets.d) throw DimensionError("query dimension does not match comparison sets");
    std::vector<PosteriorEstimate> out(n);
    const std::size_t chunks = default_chunk_count(n);
    for_each_chunk(chunks, [&](std::size_t c) {
        const auto range = chunk_range(n, chunks, c);
        for (std::size_t i = range.begin; i < range.end; ++i)
            out[i] = estimate_posterior(v, s, sets, queries.data() + i * d);
    });
    return out;
}

} // namespace colmat
