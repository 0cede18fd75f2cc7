// Acceptance gate for the library: every release-blocking criterion runs
// here, prints one PASS/FAIL line with its measured values and runtime, and
// the process exits with the number of failures.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "colmat/baselines.hpp"
#include "colmat/contrastive.hpp"
#include "colmat/estimator.hpp"
#include "colmat/matrix.hpp"
#include "colmat/mixture.hpp"
#include "colmat/net.hpp"
#include "colmat/posterior.hpp"
#include "colmat/rng.hpp"
#include "colmat/scenario.hpp"
#include "support.hpp"

using namespace colmat;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

std::string fmt(const char* pattern, ...) {
    char buf[512];
    va_list args;
    va_start(args, pattern);
    std::vsnprintf(buf, sizeof(buf), pattern, args);
    va_end(args);
    return buf;
}

GaussianMixture scenario_a3() { return *make_preset("scenario-a-k3").mixture; }

Matrix perturb_rows(const Matrix& s, double noise, Rng& rng) {
    std::uniform_real_distribution<double> u(-noise, noise);
    Matrix x = s;
    for (double& v : x.data) v += u(rng);
    for (std::size_t i = 0; i < x.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < x.cols; ++j) sum += x.at(i, j);
        for (std::size_t j = 0; j < x.cols; ++j) x.at(i, j) /= sum;
    }
    return x;
}

// criterion 1: recovering S from its exact Gramian reproduces S from the
// default start and from perturbed starts.
Outcome exact_gramian_recovery() {
    Rng rng = make_rng(derive_seed(2024, 1));
    const std::array<std::size_t, 3> ks = {3, 5, 8};
    double worst = 0.0;
    std::size_t solves = 0;
    for (int rep = 0; rep < 20; ++rep) {
        const std::size_t k = ks[static_cast<std::size_t>(rep) % 3];
        const Matrix s = testsupport::random_dominant_doubly_stochastic(k, rng);
        const Matrix g = gramian(s);
        for (int start = 0; start < 6; ++start) {
            RecoveryConfig config;
            if (start > 0) config.init = perturb_rows(s, 0.01, rng);
            const RecoveryResult rec = recover_collision_matrix(g, config);
            worst = std::max(worst, row_tvd(rec.s_hat, s).max);
            ++solves;
        }
    }
    return {worst < 1e-3,
            fmt("worst max-row TVD %.2e over %zu solves (target < 1e-3)", worst, solves)};
}

// criterion 2: the pair-score Gramian estimator agrees with S S^T within
// combined standard errors (estimator SE plus first-order propagation of the
// Monte Carlo error in S).
Outcome gramian_estimator_consistency() {
    const GaussianMixture gm = scenario_a3();
    const McMatrix s_mc = true_collision_matrix(gm, 1000000, derive_seed(2024, 2));
    const Matrix g_true = gramian(s_mc.value);
    const std::size_t k = s_mc.value.rows;

    const Dataset pool = sample(gm, 250, derive_seed(2024, 3));
    const GramianEstimate est =
        estimate_gramian(oracle_similarity_fn(gm), pool, 10000, derive_seed(2024, 4));

    double worst_ratio = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            double prop_var = 0.0;
            for (std::size_t c = 0; c < k; ++c) {
                const double a = s_mc.value.at(j, c) * s_mc.std_error.at(i, c);
                const double b = s_mc.value.at(i, c) * s_mc.std_error.at(j, c);
                prop_var += a * a + b * b;
            }
            const double combined =
                std::sqrt(est.std_error.at(i, j) * est.std_error.at(i, j) + prop_var);
            const double diff = std::abs(est.g.at(i, j) - g_true.at(i, j));
            worst_ratio = std::max(worst_ratio, diff / std::max(combined, 1e-15));
        }
    }
    return {worst_ratio <= 3.0,
            fmt("worst |G_hat - G|/SE %.2f over %zux%zu cells (target <= 3)", worst_ratio, k, k)};
}

// criterion 3: the full pipeline with a trained pair model beats the naive
// plug-in baseline at desk scale, and lands within 0.15 max-row TVD.
Outcome end_to_end_quality() {
    ScenarioConfig c = make_preset("scenario-a-k3");
    c.seeds = {1, 2, 3, 4, 5};
    c.methods = {"gramian", "naive"};
    c.v_net.hidden_layers = 3;
    c.v_net.hidden_width = 64;
    c.v_train.epochs = 100;
    c.m_net.hidden_layers = 3;
    c.m_net.hidden_width = 64;
    c.m_train.epochs = 100;
    c.truth_mc_samples = 10000;
    const RunOutput out = run_scenario(c);
    const auto& agg = out.report.at("aggregates");
    if (agg.at("gramian").at("seeds_succeeded").get<std::size_t>() != 5 ||
        agg.at("naive").at("seeds_succeeded").get<std::size_t>() != 5)
        return {false, "a seed failed; see report"};
    const double gram = agg.at("gramian").at("median_max_tvd").get<double>();
    const double naive = agg.at("naive").at("median_max_tvd").get<double>();
    return {gram < 0.15 && gram <= naive,
            fmt("median max-row TVD: pipeline %.3f (target < 0.15), naive plug-in %.3f "
                "(pipeline must not exceed it); 5 seeds",
                gram, naive)};
}

// criterion 4: inverting the score identity q = S y recovers y.
Outcome score_inversion_identity() {
    Rng rng = make_rng(derive_seed(2024, 5));
    double worst = 0.0;
    for (int rep = 0; rep < 1000; ++rep) {
        const std::size_t k = 2 + static_cast<std::size_t>(rep % 7);
        const Matrix s = testsupport::random_dominant_doubly_stochastic(k, rng);
        const std::vector<double> y = testsupport::random_simplex_point(k, rng);
        const PosteriorEstimate est = posterior_from_similarity(s, matvec(s, y));
        for (std::size_t i = 0; i < k; ++i)
            worst = std::max(worst, std::abs(est.y_hat[i] - y[i]));
    }
    return {worst < 1e-8, fmt("worst abs error %.2e over 1000 instances (target < 1e-8)", worst)};
}

// criterion 5: with oracle scores and the true S, estimated posteriors track
// the true ones closely in total variation.
Outcome posterior_quality_oracle() {
    const GaussianMixture gm = scenario_a3();
    const Matrix s_true = true_collision_matrix_quadrature(gm).value;
    const SimilarityFn v = oracle_similarity_fn(gm);
    const Dataset pool = sample(gm, 200, derive_seed(2024, 6));
    const ComparisonSets sets = make_comparison_sets(pool, 200, derive_seed(2024, 7));
    const Dataset queries = sample(gm, 334, derive_seed(2024, 8));

    const auto estimates =
        estimate_posterior_batch(v, s_true, sets, queries.features, queries.n, queries.d);
    double acc = 0.0;
    for (std::size_t i = 0; i < queries.n; ++i) {
        const std::vector<double> y = true_posterior(gm, queries.row(i));
        double l1 = 0.0;
        for (std::size_t j = 0; j < y.size(); ++j) l1 += std::abs(estimates[i].y_hat[j] - y[j]);
        acc += 0.5 * l1;
    }
    const double mean_tvd = acc / static_cast<double>(queries.n);
    return {mean_tvd < 0.02,
            fmt("mean TVD %.4f over %zu test points, m = 200 (target < 0.02)", mean_tvd,
                queries.n)};
}

// criterion 6: the simulated probabilistic-Bayes error matches 1 - sum pi_k
// S_kk within binomial noise, with uniform and non-uniform priors.
Outcome pbc_simulation_consistency() {
    struct Case {
        const char* name;
        GaussianMixture gm;
    };
    GaussianMixture skew;
    skew.K = 2;
    skew.d = 1;
    skew.means = {{1.0}, {-1.0}};
    skew.covariance_scale = 1.0;
    skew.priors = SimplexVector({0.7, 0.3});
    const std::vector<Case> cases = {{"3-class", scenario_a3()}, {"skewed 2-class", skew}};

    std::string detail;
    bool pass = true;
    const std::size_t draws = 100000;
    for (const auto& c : cases) {
        const Matrix s = true_collision_matrix_quadrature(c.gm).value;
        const double pber = pber_from_s(s, c.gm.priors);
        const double sim = simulate_pbc_error(c.gm, draws, derive_seed(2024, 9));
        const double se = std::sqrt(pber * (1.0 - pber) / static_cast<double>(draws));
        const double gap = std::abs(sim - pber);
        pass = pass && gap <= 3.0 * se;
        if (!detail.empty()) detail += "; ";
        detail += fmt("%s |sim - PBER| = %.2e (3 SE = %.2e)", c.name, gap, 3.0 * se);
    }
    return {pass, detail};
}

// criterion 7: the two-Gaussian collision divergence starts at exactly zero,
// increases with the mean gap, saturates by mu = 3, and every closed-form
// reference matches its quadrature.
Outcome divergence_curve_shape() {
    std::vector<double> grid;
    for (int i = 0; i <= 12; ++i) grid.push_back(0.25 * static_cast<double>(i));
    const auto rows = divergence_curve(grid);

    bool zero_at_origin = rows.front().collision == 0.0;
    bool increasing = true;
    for (std::size_t i = 1; i < rows.size(); ++i)
        increasing = increasing && rows[i].collision >= rows[i - 1].collision;
    const bool saturates = rows.back().collision > 0.99;

    // cross-check against the posterior-integral quadrature of the same
    // mixture: D = 1 - 2 S_12 for equal priors
    double worst_cross = 0.0;
    double worst_closed = 0.0;
    for (const auto& row : rows) {
        GaussianMixture gm;
        gm.K = 2;
        gm.d = 1;
        gm.means = {{row.mu}, {-row.mu}};
        gm.covariance_scale = 1.0;
        gm.priors = SimplexVector::uniform(2);
        const Matrix s = true_collision_matrix_quadrature(gm).value;
        worst_cross = std::max(worst_cross, std::abs(row.collision - (1.0 - 2.0 * s.at(0, 1))));

        const ReferenceDivergences closed = reference_divergences(row.mu);
        const ReferenceDivergences quad = reference_divergences_quadrature(row.mu);
        worst_closed = std::max({worst_closed, std::abs(closed.tvd - quad.tvd),
                                 std::abs(closed.hellinger_sq - quad.hellinger_sq),
                                 std::abs(closed.kl - quad.kl)});
    }
    const bool pass = zero_at_origin && increasing && saturates && worst_cross < 1e-4 &&
                      worst_closed < 1e-6;
    return {pass,
            fmt("origin %s, weakly increasing %s, D(3) = %.4f (> 0.99), oracle gap %.1e "
                "(< 1e-4), closed-form vs quadrature %.1e (< 1e-6)",
                zero_at_origin ? "exactly 0" : "NOT 0", increasing ? "yes" : "NO",
                rows.back().collision, worst_cross, worst_closed)};
}

double fit_value(const Matrix& x, const Matrix& g) {
    const Matrix e = matmul(x, transpose(x));
    double acc = 0.0;
    for (std::size_t i = 0; i < e.data.size(); ++i) {
        const double d = e.data[i] - g.data[i];
        acc += d * d;
    }
    return acc;
}

// criterion 8: analytic gradients (recovery objective and MLP backprop) match
// central finite differences.
Outcome gradient_checks() {
    Rng rng = make_rng(derive_seed(2024, 10));
    std::uniform_real_distribution<double> unif(0.05, 1.0);

    double worst_recovery = 0.0;
    for (int rep = 0; rep < 10; ++rep) {
        const std::size_t k = 3 + static_cast<std::size_t>(rep % 3);
        const Matrix g = gramian(testsupport::random_dominant_doubly_stochastic(k, rng));
        Matrix x(k, k);
        for (double& v : x.data) v = unif(rng);
        const Matrix analytic = recovery_smooth_gradient(x, g);
        const double h = 1e-6;
        for (std::size_t i = 0; i < x.data.size(); ++i) {
            Matrix xp = x, xm = x;
            xp.data[i] += h;
            xm.data[i] -= h;
            const double fd = (fit_value(xp, g) - fit_value(xm, g)) / (2.0 * h);
            const double rel = std::abs(analytic.data[i] - fd) /
                               std::max({std::abs(analytic.data[i]), std::abs(fd), 1e-6});
            worst_recovery = std::max(worst_recovery, rel);
        }
    }

    double worst_mlp = 0.0;
    std::uniform_real_distribution<double> sym(-1.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        NetSpec spec;
        spec.hidden_layers = 1 + static_cast<std::size_t>(rep % 2);
        spec.hidden_width = 5 + static_cast<std::size_t>(rep % 4);
        const std::size_t in = 2 + static_cast<std::size_t>(rep % 3);
        const std::size_t out = 2 + static_cast<std::size_t>((rep + 1) % 3);
        FeedForwardNet net = make_net(in, out, spec, derive_seed(2024, 11 + static_cast<std::uint64_t>(rep)));

        Batch batch;
        batch.n = 5;
        batch.in_dim = in;
        batch.out_dim = out;
        for (std::size_t i = 0; i < batch.n * in; ++i) batch.inputs.push_back(sym(rng));
        for (std::size_t i = 0; i < batch.n; ++i) {
            std::vector<double> t = testsupport::random_simplex_point(out, rng);
            batch.targets.insert(batch.targets.end(), t.begin(), t.end());
        }

        Grads grads = zero_grads(net);
        net_loss_and_grad(net, batch, grads);
        const double h = 1e-5;
        for (std::size_t l = 0; l < net.layers(); ++l) {
            for (std::size_t i = 0; i < net.weights[l].size(); ++i) {
                const double saved = net.weights[l][i];
                net.weights[l][i] = saved + h;
                const double up = net_loss(net, batch);
                net.weights[l][i] = saved - h;
                const double down = net_loss(net, batch);
                net.weights[l][i] = saved;
                const double fd = (up - down) / (2.0 * h);
                const double an = grads.weights[l][i];
                worst_mlp = std::max(worst_mlp,
                                     std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
            }
            for (std::size_t i = 0; i < net.biases[l].size(); ++i) {
                const double saved = net.biases[l][i];
                net.biases[l][i] = saved + h;
                const double up = net_loss(net, batch);
                net.biases[l][i] = saved - h;
                const double down = net_loss(net, batch);
                net.biases[l][i] = saved;
                const double fd = (up - down) / (2.0 * h);
                const double an = grads.biases[l][i];
                worst_mlp = std::max(worst_mlp,
                                     std::abs(an - fd) / std::max({std::abs(an), std::abs(fd), 1e-6}));
            }
        }
    }
    return {worst_recovery < 1e-4 && worst_mlp < 1e-4,
            fmt("worst relative error: recovery gradient %.2e, MLP backprop %.2e "
                "(targets < 1e-4, 10 instances each)",
                worst_recovery, worst_mlp)};
}

// criterion 9: what this suite deliberately does not reproduce, plus a
// reduced synthetic stand-in exercising every method end to end.
Outcome declared_exclusions() {
    std::printf("  excluded (beyond desk scale, stated explicitly):\n");
    std::printf("    - the MNIST digit-pair collision study (reported 4-vs-9 collision mass "
                "about 0.028): no external dataset downloads here\n");
    std::printf("    - precision/recall sweeps on real image benchmarks\n");
    std::printf("    - 10,000-points-per-class synthetic runs with a Bayesian-neural-network "
                "baseline\n");
    std::printf("  a reduced high-dimensional synthetic run stands in for those pipelines:\n");

    ScenarioConfig c = make_preset("scenario-c");
    c.n_per_class = 500;
    c.seeds = {1};
    c.v_net.hidden_layers = 3;
    c.v_net.hidden_width = 64;
    c.v_train.epochs = 50;
    c.m_net.hidden_layers = 2;
    c.m_net.hidden_width = 32;
    c.m_train.epochs = 50;
    c.m_per_cell = 2000;
    c.mc_dropout_h = 10;
    c.truth_mc_samples = 10000;
    const RunOutput out = run_scenario(c);

    bool pass = true;
    std::string detail = "stand-in (5 classes, d = 20, 500/class):";
    for (const std::string name : {"gramian", "naive", "calibrated", "mc_dropout"}) {
        const auto& mj = out.report.at("runs")[0].at("methods").at(name);
        if (mj.contains("error")) {
            pass = false;
            detail += fmt(" %s FAILED (%s);", name.c_str(),
                          mj.at("error").get<std::string>().c_str());
        } else {
            detail += fmt(" %s max-row TVD %.3f;", name.c_str(), mj.at("tvd_max").get<double>());
        }
    }
    return {pass, detail};
}

} // namespace

int main() {
    struct Row {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> body;
    };
    const std::vector<Row> rows = {
        {1, "exact-Gramian recovery", 60.0, exact_gramian_recovery},
        {2, "Gramian estimator consistency", 120.0, gramian_estimator_consistency},
        {3, "end-to-end quality at desk scale", 600.0, end_to_end_quality},
        {4, "score inversion identity", 5.0, score_inversion_identity},
        {5, "posterior quality with oracle components", 60.0, posterior_quality_oracle},
        {6, "probabilistic-Bayes simulation consistency", 60.0, pbc_simulation_consistency},
        {7, "divergence curve shape", 10.0, divergence_curve_shape},
        {8, "gradient checks", 30.0, gradient_checks},
        {9, "declared exclusions with reduced stand-in", 0.0, declared_exclusions},
    };

    std::printf("acceptance suite (%zu criteria)\n", rows.size());
    int failures = 0;
    for (const auto& row : rows) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = row.body();
        } catch (const std::exception& e) {
            o = {false, std::string("unexpected exception: ") + e.what()};
        }
        const double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_budget = row.budget_s <= 0.0 || secs <= row.budget_s;
        const bool pass = o.pass && in_budget;
        if (!pass) ++failures;
        std::string timing = row.budget_s > 0.0
                                 ? fmt("%.1f s of %.0f s budget%s", secs, row.budget_s,
                                       in_budget ? "" : " EXCEEDED")
                                 : fmt("%.1f s", secs);
        std::printf("%s  criterion %d  %s: %s  [%s]\n", pass ? "PASS" : "FAIL", row.id, row.name,
                    o.detail.c_str(), timing.c_str());
        std::fflush(stdout);
    }
    std::printf("%d of %zu criteria passed\n", static_cast<int>(rows.size()) - failures,
                rows.size());
    return failures;
}
