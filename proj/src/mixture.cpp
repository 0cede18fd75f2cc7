#include "colmat/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"
#include "colmat/quadrature.hpp"
#include "colmat/rng.hpp"

namespace colmat {

void GaussianMixture::validate() const {
    if (K < 2) throw ConfigError("mixture needs at least two classes");
    if (d == 0) throw ConfigError("mixture dimension must be positive");
    if (means.size() != static_cast<std::size_t>(K))
        throw ConfigError("mixture has " + std::to_string(means.size()) + " means for K=" +
                          std::to_string(K));
    for (const auto& mu : means)
        if (mu.size() != d) throw ConfigError("mean vector length does not match dimension");
    if (!(covariance_scale > 0.0)) throw ConfigError("covariance scale must be positive");
    if (priors.size() != static_cast<std::size_t>(K))
        throw ConfigError("prior length does not match K");
}

nlohmann::json mixture_to_json(const GaussianMixture& gm) {
    nlohmann::json j;
    j["K"] = gm.K;
    j["d"] = gm.d;
    j["means"] = gm.means;
    j["covariance_scale"] = gm.covariance_scale;
    j["priors"] = gm.priors.p;
    return j;
}

GaussianMixture mixture_from_json(const nlohmann::json& j) {
    GaussianMixture gm;
    try {
        gm.K = j.at("K").get<int>();
        gm.d = j.at("d").get<std::size_t>();
        gm.means = j.at("means").get<std::vector<std::vector<double>>>();
        gm.covariance_scale = j.at("covariance_scale").get<double>();
        gm.priors = SimplexVector(j.at("priors").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad mixture json: ") + e.what());
    }
    gm.validate();
    return gm;
}

GaussianMixture read_mixture_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad json in ") + path + ": " + e.what());
    }
    return mixture_from_json(j);
}

void write_mixture_json(const GaussianMixture& gm, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << mixture_to_json(gm).dump(2) << '\n';
}

Dataset sample(const GaussianMixture& gm, std::size_t n_per_class, std::uint64_t seed) {
    gm.validate();
    if (n_per_class == 0) throw ConfigError("n_per_class must be positive");
    Dataset data;
    data.K = gm.K;
    data.d = gm.d;
    data.n = n_per_class * static_cast<std::size_t>(gm.K);
    data.features.resize(data.n * gm.d);
    data.labels.resize(data.n);
    data.label_names.resize(gm.K);
    const double sigma = std::sqrt(gm.covariance_scale);
    for (int k = 0; k < gm.K; ++k) {
        data.label_names[k] = std::to_string(k + 1);
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::normal_distribution<double> gauss(0.0, 1.0);
        for (std::size_t i = 0; i < n_per_class; ++i) {
            const std::size_t row = static_cast<std::size_t>(k) * n_per_class + i;
            data.labels[row] = k;
            double* x = data.features.data() + row * gm.d;
            for (std::size_t c = 0; c < gm.d; ++c)
                x[c] = gm.means[k][c] + sigma * gauss(rng);
        }
    }
    return data;
}

std::vector<double> true_posterior(const GaussianMixture& gm, const double* x) {
    // log pi_k f_k(x) = log pi_k - ||x - mu_k||^2 / (2 sigma^2) + const;
    // the shared constant cancels in the softmax.
    std::vector<double> logp(gm.K);
    for (int k = 0; k < gm.K; ++k) {
        double sq = 0.0;
        for (std::size_t c = 0; c < gm.d; ++c) {
            const double diff = x[c] - gm.means[k][c];
            sq += diff * diff;
        }
        const double pk = gm.priors.p[static_cast<std::size_t>(k)];
        logp[static_cast<std::size_t>(k)] =
            (pk > 0.0 ? std::log(pk) : -std::numeric_limits<double>::infinity()) -
            sq / (2.0 * gm.covariance_scale);
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double denom = 0.0;
    for (double& v : logp) {
        v = std::exp(v - mx);
        denom += v;
    }
    for (double& v : logp) v /= denom;
    return logp;
}

McMatrix true_collision_matrix(const GaussianMixture& gm, std::size_t mc_samples,
                               std::uint64_t seed) {
    gm.validate();
    if (mc_samples == 0) throw ConfigError("mc_samples must be positive");
    const int K = gm.K;
    const std::size_t chunks = default_chunk_count(mc_samples);
    const double sigma = std::sqrt(gm.covariance_scale);

    // One row per class: E_{x~D_i}[y(x)] with a per-(class, chunk) stream so
    // the result is independent of thread count.
    Matrix value(static_cast<std::size_t>(K), static_cast<std::size_t>(K));
    Matrix std_error(static_cast<std::size_t>(K), static_cast<std::size_t>(K));
    for (int i = 0; i < K; ++i) {
        std::vector<double> sum(static_cast<std::size_t>(K) * chunks, 0.0);
        std::vector<double> sumsq(static_cast<std::size_t>(K) * chunks, 0.0);
        for_each_chunk(chunks, [&](std::size_t c) {
            const auto range = chunk_range(mc_samples, chunks, c);
            Rng rng = make_rng(derive_seed(
                seed, static_cast<std::uint64_t>(i) * chunks + static_cast<std::uint64_t>(c)));
            std::normal_distribution<double> gauss(0.0, 1.0);
            std::vector<double> x(gm.d);
            double* s = sum.data() + c * static_cast<std::size_t>(K);
            double* s2 = sumsq.data() + c * static_cast<std::size_t>(K);
            for (std::size_t t = range.begin; t < range.end; ++t) {
                for (std::size_t col = 0; col < gm.d; ++col)
                    x[col] = gm.means[static_cast<std::size_t>(i)][col] + sigma * gauss(rng);
                const std::vector<double> y = true_posterior(gm, x.data());
                for (int j = 0; j < K; ++j) {
                    s[j] += y[static_cast<std::size_t>(j)];
                    s2[j] += y[static_cast<std::size_t>(j)] * y[static_cast<std::size_t>(j)];
                }
            }
        });
        for (int j = 0; j < K; ++j) {
            double tot = 0.0, tot2 = 0.0;
            for (std::size_t c = 0; c < chunks; ++c) {
                tot += sum[c * static_cast<std::size_t>(K) + static_cast<std::size_t>(j)];
                tot2 += sumsq[c * static_cast<std::size_t>(K) + static_cast<std::size_t>(j)];
            }
            const double m = static_cast<double>(mc_samples);
            const double mean = tot / m;
            const double var = std::max(0.0, tot2 / m - mean * mean);
            value.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) = mean;
            std_error.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                std::sqrt(var / m);
        }
    }
    return {std::move(value), std::move(std_error)};
}

bool has_collinear_means(const GaussianMixture& gm, double tol) {
    // Means are collinear iff mu_k - mu_0 all lie on one line through mu_0.
    std::vector<double> dir;
    double dir_norm = 0.0;
    for (int k = 1; k < gm.K; ++k) {
        std::vector<double> delta(gm.d);
        double norm = 0.0;
        for (std::size_t c = 0; c < gm.d; ++c) {
            delta[c] = gm.means[static_cast<std::size_t>(k)][c] - gm.means[0][c];
            norm += delta[c] * delta[c];
        }
        norm = std::sqrt(norm);
        if (norm <= tol) continue;
        if (dir.empty()) {
            dir = delta;
            dir_norm = norm;
            continue;
        }
        double dot = 0.0;
        for (std::size_t c = 0; c < gm.d; ++c) dot += delta[c] * dir[c];
        // |cos angle| must be 1 up to tolerance.
        if (std::abs(std::abs(dot) - norm * dir_norm) > tol * norm * dir_norm) return false;
    }
    return true;
}

namespace {

// Posterior of the 1-D mixture with unit variance and effective means a_k.
std::vector<double> posterior_1d(const std::vector<double>& a, const std::vector<double>& pri,
                                 double t) {
    const std::size_t K = a.size();
    std::vector<double> logp(K);
    for (std::size_t k = 0; k < K; ++k) {
        const double diff = t - a[k];
        logp[k] = (pri[k] > 0.0 ? std::log(pri[k]) : -std::numeric_limits<double>::infinity()) -
                  0.5 * diff * diff;
    }
    const double mx = *std::max_element(logp.begin(), logp.end());
    double denom = 0.0;
    for (double& v : logp) {
        v = std::exp(v - mx);
        denom += v;
    }
    for (double& v : logp) v /= denom;
    return logp;
}

} // namespace

McMatrix true_collision_matrix_quadrature(const GaussianMixture& gm, double tol) {
    gm.validate();
    if (!has_collinear_means(gm))
        throw ConfigError("quadrature path requires collinear mixture means");
    const int K = gm.K;
    Matrix value(static_cast<std::size_t>(K), static_cast<std::size_t>(K));
    Matrix std_error(static_cast<std::size_t>(K), static_cast<std::size_t>(K));

    // Unit direction u along the mean axis; x ~ D_i projects to
    // t = <x, u>/sigma ~ N(a_i, 1) with a_k = <mu_k, u>/sigma, and the
    // posterior depends on x only through t. Degenerate axis (all means
    // equal): every posterior is the prior everywhere.
    std::vector<double> dir;
    for (int k = 1; k < K && dir.empty(); ++k) {
        std::vector<double> delta(gm.d);
        double norm = 0.0;
        for (std::size_t c = 0; c < gm.d; ++c) {
            delta[c] = gm.means[static_cast<std::size_t>(k)][c] - gm.means[0][c];
            norm += delta[c] * delta[c];
        }
        norm = std::sqrt(norm);
        if (norm > 1e-9) {
            for (double& v : delta) v /= norm;
            dir = std::move(delta);
        }
    }
    if (dir.empty()) {
        for (int i = 0; i < K; ++i)
            for (int j = 0; j < K; ++j)
                value.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j)) =
                    gm.priors.p[static_cast<std::size_t>(j)];
        return {std::move(value), std::move(std_error)};
    }

    const double sigma = std::sqrt(gm.covariance_scale);
    std::vector<double> a(static_cast<std::size_t>(K));
    for (int k = 0; k < K; ++k) {
        double dot = 0.0;
        for (std::size_t c = 0; c < gm.d; ++c)
            dot += gm.means[static_cast<std::size_t>(k)][c] * dir[c];
        a[static_cast<std::size_t>(k)] = dot / sigma;
    }
    const double lo = *std::min_element(a.begin(), a.end()) - 10.0;
    const double hi = *std::max_element(a.begin(), a.end()) + 10.0;
    const double inv_sqrt_2pi = 0.3989422804014327;
    for (int i = 0; i < K; ++i) {
        for (int j = 0; j < K; ++j) {
            const double ai = a[static_cast<std::size_t>(i)];
            const std::size_t sj = static_cast<std::size_t>(j);
            auto f = [&](double t) {
                const double z = t - ai;
                return inv_sqrt_2pi * std::exp(-0.5 * z * z) *
                       posterior_1d(a, gm.priors.p, t)[sj];
            };
            value.at(static_cast<std::size_t>(i), sj) = integrate(f, lo, hi, tol).value;
        }
    }
    return {std::move(value), std::move(std_error)};
}

double bayes_error_rate(const GaussianMixture& gm, std::size_t mc_samples, std::uint64_t seed) {
    gm.validate();
    if (mc_samples == 0) throw ConfigError("mc_samples must be positive");
    const std::size_t chunks = default_chunk_count(mc_samples);
    const double sigma = std::sqrt(gm.covariance_scale);
    std::vector<std::size_t> errors(chunks, 0);
    for_each_chunk(chunks, [&](std::size_t c) {
        const auto range = chunk_range(mc_samples, chunks, c);
        Rng rng = make_rng(derive_seed(seed, c));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> x(gm.d);
        std::size_t err = 0;
        for (std::size_t t = range.begin; t < range.end; ++t) {
            // Draw the class by inverse CDF so the stream layout is fixed.
            const double u = unif(rng);
            int k = gm.K - 1;
            double acc = 0.0;
            for (int c2 = 0; c2 < gm.K; ++c2) {
                acc += gm.priors.p[static_cast<std::size_t>(c2)];
                if (u < acc) {
                    k = c2;
                    break;
                }
            }
            for (std::size_t col = 0; col < gm.d; ++col)
                x[col] = gm.means[static_cast<std::size_t>(k)][col] + sigma * gauss(rng);
            const std::vector<double> y = true_posterior(gm, x.data());
            const int pred = static_cast<int>(
                std::max_element(y.begin(), y.end()) - y.begin()); // first max wins ties
            if (pred != k) ++err;
        }
        errors[c] = err;
    });
    std::size_t total = 0;
    for (std::size_t e : errors) total += e;
    return static_cast<double>(total) / static_cast<double>(mc_samples);
}

double pber_from_s(const Matrix& s, const SimplexVector& priors) {
    if (!s.square() || s.rows != priors.size())
        throw DimensionError("collision matrix and priors disagree on K");
    double acc = 0.0;
    for (std::size_t k = 0; k < s.rows; ++k) acc += priors.p[k] * s.at(k, k);
    return 1.0 - acc;
}

double simulate_pbc_error(const GaussianMixture& gm, std::size_t draws, std::uint64_t seed) {
    gm.validate();
    if (draws == 0) throw ConfigError("draws must be positive");
    const std::size_t chunks = default_chunk_count(draws);
    const double sigma = std::sqrt(gm.covariance_scale);
    std::vector<std::size_t> errors(chunks, 0);
    for_each_chunk(chunks, [&](std::size_t c) {
        const auto range = chunk_range(draws, chunks, c);
        Rng rng = make_rng(derive_seed(seed, c));
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> unif(0.0, 1.0);
        std::vector<double> x(gm.d);
        std::size_t err = 0;
        for (std::size_t t = range.begin; t < range.end; ++t) {
            const double u = unif(rng);
            int k = gm.K - 1;
            double acc = 0.0;
            for (int c2 = 0; c2 < gm.K; ++c2) {
                acc += gm.priors.p[static_cast<std::size_t>(c2)];
                if (u < acc) {
                    k = c2;
                    break;
                }
            }
            for (std::size_t col = 0; col < gm.d; ++col)
                x[col] = gm.means[static_cast<std::size_t>(k)][col] + sigma * gauss(rng);
            const std::vector<double> y = true_posterior(gm, x.data());
            // Classifier samples its label from the posterior.
            const double v = unif(rng);
            int pred = gm.K - 1;
            double acc2 = 0.0;
            for (int c2 = 0; c2 < gm.K; ++c2) {
                acc2 += y[static_cast<std::size_t>(c2)];
                if (v < acc2) {
                    pred = c2;
                    break;
                }
            }
            if (pred != k) ++err;
        }
        errors[c] = err;
    });
    std::size_t total = 0;
    for (std::size_t e : errors) total += e;
    return static_cast<double>(total) / static_cast<double>(draws);
}

double collision_divergence(const Density1D& f1, const Density1D& f2, double lo, double hi,
                            double tol) {
    auto integrand = [&](double t) {
        const double a = f1(t);
        const double b = f2(t);
        const double s = a + b;
        if (s <= 0.0) return 0.0;
        return 2.0 * a * b / s;
    };
    const double overlap = integrate(integrand, lo, hi, tol).value;
    return std::clamp(1.0 - overlap, 0.0, 1.0);
}

double collision_divergence_two_gaussians(double mu1, double mu2, double sigma, double tol) {
    if (!(sigma > 0.0)) throw ConfigError("sigma must be positive");
    const double inv = 1.0 / (sigma * std::sqrt(2.0 * M_PI));
    auto density = [inv, sigma](double mu) {
        return [inv, sigma, mu](double t) {
            const double z = (t - mu) / sigma;
            return inv * std::exp(-0.5 * z * z);
        };
    };
    const double lo = std::min(mu1, mu2) - 10.0 * sigma;
    const double hi = std::max(mu1, mu2) + 10.0 * sigma;
    return collision_divergence(density(mu1), density(mu2), lo, hi, tol);
}

ReferenceDivergences reference_divergences(double mu) {
    const double m = std::abs(mu);
    ReferenceDivergences r;
    r.tvd = std::erf(m / std::sqrt(2.0)); // 2 Phi(m) - 1
    r.hellinger_sq = 1.0 - std::exp(-0.5 * m * m);
    r.kl = 2.0 * m * m;
    return r;
}

ReferenceDivergences reference_divergences_quadrature(double mu, double tol) {
    const double m = std::abs(mu);
    const double inv = 0.3989422804014327;
    auto f1 = [inv, m](double t) {
        const double z = t - m;
        return inv * std::exp(-0.5 * z * z);
    };
    auto f2 = [inv, m](double t) {
        const double z = t + m;
        return inv * std::exp(-0.5 * z * z);
    };
    const double lo = -m - 10.0, hi = m + 10.0;
    ReferenceDivergences r;
    r.tvd = 0.5 * integrate([&](double t) { return std::abs(f1(t) - f2(t)); }, lo, hi, tol).value;
    r.hellinger_sq =
        1.0 - integrate([&](double t) { return std::sqrt(f1(t) * f2(t)); }, lo, hi, tol).value;
    r.kl = integrate(
               [&](double t) {
                   const double a = f1(t);
                   if (a <= 0.0) return 0.0;
                   return a * std::log(a / f2(t));
               },
               lo, hi, tol)
               .value;
    return r;
}

} // namespace colmat
