#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "colmat/dataset.hpp"
#include "colmat/matrix.hpp"

namespace colmat {

// Ground-truth generative model: K Gaussians N(mu_k, sigma^2 I) with priors pi.
struct GaussianMixture {
    int K = 0;
    std::size_t d = 0;
    std::vector<std::vector<double>> means; // K vectors of length d
    double covariance_scale = 1.0;          // sigma^2
    SimplexVector priors;

    void validate() const; // throws ConfigError on any invariant violation
};

nlohmann::json mixture_to_json(const GaussianMixture& gm);
GaussianMixture mixture_from_json(const nlohmann::json& j);
GaussianMixture read_mixture_json(const std::string& path);
void write_mixture_json(const GaussianMixture& gm, const std::string& path);

// Exactly n_per_class draws from each component, class-major order,
// deterministic given seed. Class k gets label name "k+1".
Dataset sample(const GaussianMixture& gm, std::size_t n_per_class, std::uint64_t seed);

// Posterior y_i(x) = pi_i f_i(x) / sum_k pi_k f_k(x), evaluated in log space
// so it never underflows to 0/0.
std::vector<double> true_posterior(const GaussianMixture& gm, const double* x);

struct McMatrix {
    Matrix value;
    Matrix std_error;
};

// S_ij = E_{x ~ D_i}[y_j(x)] by chunked Monte Carlo with per-entry standard
// errors. Bitwise-reproducible for fixed (seed, chunk count).
McMatrix true_collision_matrix(const GaussianMixture& gm, std::size_t mc_samples,
                               std::uint64_t seed);

// Exact S for mixtures whose means are collinear (every paper scenario):
// posteriors depend on x only through its projection on the mean axis, which
// reduces the integral to one dimension per (i, j). Non-collinear means raise
// ConfigError. std_error is zero.
McMatrix true_collision_matrix_quadrature(const GaussianMixture& gm, double tol = 1e-10);
bool has_collinear_means(const GaussianMixture& gm, double tol = 1e-9);

// Monte Carlo error rate of the argmax-posterior classifier.
double bayes_error_rate(const GaussianMixture& gm, std::size_t mc_samples, std::uint64_t seed);

// 1 - sum_k pi_k S_kk.
double pber_from_s(const Matrix& s, const SimplexVector& priors);

// Empirical error of the classifier that samples its label from the true
// posterior; used to validate pber_from_s against simulation.
double simulate_pbc_error(const GaussianMixture& gm, std::size_t draws, std::uint64_t seed);

// 1 - integral of 2 f1 f2 / (f1 + f2) over [lo, hi], clamped to [0, 1].
using Density1D = std::function<double(double)>;
double collision_divergence(const Density1D& f1, const Density1D& f2, double lo, double hi,
                            double tol = 1e-10);

// Convenience for two unit-variance-sigma Gaussians; integration range is
// [min mean - 10 sigma, max mean + 10 sigma].
double collision_divergence_two_gaussians(double mu1, double mu2, double sigma = 1.0,
                                          double tol = 1e-10);

struct ReferenceDivergences {
    double tvd;
    double hellinger_sq;
    double kl;
};

// Closed forms for N(mu,1) vs N(-mu,1): TVD = 2 Phi(mu) - 1,
// squared Hellinger = 1 - exp(-mu^2/2), KL = 2 mu^2.
ReferenceDivergences reference_divergences(double mu);
// The same three values by quadrature of their defining integrals.
ReferenceDivergences reference_divergences_quadrature(double mu, double tol = 1e-10);

} // namespace colmat
