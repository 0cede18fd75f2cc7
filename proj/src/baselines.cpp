#include "colmat/baselines.hpp"

#include <algorithm>
#include <cmath>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"
#include "colmat/rng.hpp"

namespace colmat {

ClassifierTrainConfig default_classifier_config() {
    ClassifierTrainConfig c;
    c.net.hidden_layers = 6;
    c.net.hidden_width = 128;
    c.net.dropout = 0.0;
    c.train.epochs = 500;
    c.train.batch_size = 32;
    c.train.learning_rate = 0.05;
    c.train.momentum = 0.9;
    return c;
}

FeedForwardNet train_classifier(const Dataset& data, const ClassifierTrainConfig& config) {
    if (data.n == 0) throw ConfigError("no training rows");
    FeedForwardNet net = make_net(data.d, static_cast<std::size_t>(data.K), config.net,
                                  derive_seed(config.train.seed, 0xC1A55));
    train_classifier_net(net, data.features, data.labels, data.n, data.d,
                         static_cast<std::size_t>(data.K), config.train);
    return net;
}

double ece(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
           std::size_t bins) {
    if (probs.size() != labels.size() || probs.empty())
        throw DimensionError("probability rows and labels must match and be non-empty");
    if (bins == 0) throw ConfigError("ece needs at least one bin");
    std::vector<double> conf_sum(bins, 0.0), acc_sum(bins, 0.0);
    std::vector<std::size_t> count(bins, 0);
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const auto& p = probs[i];
        const auto it = std::max_element(p.begin(), p.end());
        const double conf = *it;
        const int pred = static_cast<int>(it - p.begin());
        std::size_t b = static_cast<std::size_t>(conf * static_cast<double>(bins));
        b = std::min(b, bins - 1); // confidence 1.0 lands in the top bin
        conf_sum[b] += conf;
        acc_sum[b] += pred == labels[i] ? 1.0 : 0.0;
        ++count[b];
    }
    double err = 0.0;
    const double n = static_cast<double>(probs.size());
    for (std::size_t b = 0; b < bins; ++b) {
        if (count[b] == 0) continue;
        const double cb = static_cast<double>(count[b]);
        err += cb / n * std::abs(acc_sum[b] / cb - conf_sum[b] / cb);
    }
    return err;
}

std::vector<double> temperature_grid_default() {
    std::vector<double> grid(50);
    const double lo = std::log(0.1), hi = std::log(10.0);
    for (std::size_t i = 0; i < grid.size(); ++i)
        grid[i] = std::exp(lo + (hi - lo) * static_cast<double>(i) / 49.0);
    return grid;
}

namespace {

std::vector<double> logits_of(const FeedForwardNet& net, const double* x) {
    // forward() returns probabilities; temperature scaling needs the raw
    // logits, recovered as log p (softmax is shift-invariant).
    std::vector<double> p = forward(net, x);
    for (double& v : p) v = std::log(std::max(v, 1e-300));
    return p;
}

} // namespace

CalibratedClassifier fit_temperature(FeedForwardNet net, const Dataset& validation,
                                     std::size_t bins, const std::vector<double>& grid) {
    if (validation.n == 0) throw ConfigError("validation split is empty");
    if (grid.empty()) throw ConfigError("temperature grid is empty");
    std::vector<std::vector<double>> logits(validation.n);
    for (std::size_t i = 0; i < validation.n; ++i)
        logits[i] = logits_of(net, validation.row(i));

    double best_t = grid.front();
    double best_ece = std::numeric_limits<double>::infinity();
    std::vector<std::vector<double>> probs(validation.n);
    for (const double t : grid) {
        for (std::size_t i = 0; i < validation.n; ++i) {
            std::vector<double> scaled = logits[i];
            for (double& z : scaled) z /= t;
            probs[i] = softmax(scaled);
        }
        const double e = ece(probs, validation.labels, bins);
        const bool better = e < best_ece - 1e-12;
        const bool tied = std::abs(e - best_ece) <= 1e-12;
        // Ties keep T = 1 when available, otherwise the smaller temperature.
        const bool prefer_tie = tied && ((std::abs(t - 1.0) < 1e-12 &&
                                          std::abs(best_t - 1.0) >= 1e-12) ||
                                         (std::abs(best_t - 1.0) >= 1e-12 && t < best_t));
        if (better || prefer_tie) {
            best_ece = e;
            best_t = t;
        }
    }
    CalibratedClassifier cal;
    cal.net = std::move(net);
    cal.temperature = best_t;
    cal.validation_ece = best_ece;
    return cal;
}

std::vector<double> calibrated_posterior(const CalibratedClassifier& model, const double* x) {
    std::vector<double> z = logits_of(model.net, x);
    for (double& v : z) v /= model.temperature;
    return softmax(z);
}

std::vector<double> mc_dropout_posterior(const FeedForwardNet& net, const double* x,
                                         std::size_t h, std::uint64_t seed,
                                         bool* degenerate_warning) {
    if (h == 0) throw ConfigError("mc dropout needs at least one replicate");
    const bool has_dropout = std::any_of(net.dropout_rates.begin(), net.dropout_rates.end(),
                                         [](double r) { return r > 0.0; });
    if (degenerate_warning != nullptr) *degenerate_warning = !has_dropout;
    std::vector<double> mean(net.output_dim(), 0.0);
    for (std::size_t r = 0; r < h; ++r) {
        Rng rng = make_rng(derive_seed(seed, r));
        const std::vector<double> p = forward(net, x, has_dropout, &rng);
        for (std::size_t j = 0; j < mean.size(); ++j) mean[j] += p[j];
    }
    for (double& v : mean) v /= static_cast<double>(h);
    return mean;
}

Matrix plug_in_collision_matrix(const PosteriorFn& posterior, const Dataset& data) {
    const auto by_class = indices_by_class(data);
    const std::size_t K = static_cast<std::size_t>(data.K);
    for (std::size_t k = 0; k < K; ++k)
        if (by_class[k].empty())
            throw UnusableClassError("class " + data.label_names[k] + " has no rows", k);
    Matrix s(K, K);
    for_each_chunk(K, [&](std::size_t k) {
        std::vector<double> acc(K, 0.0);
        for (const std::size_t row : by_class[k]) {
            const std::vector<double> p = posterior(data.row(row));
            for (std::size_t j = 0; j < K; ++j) acc[j] += p[j];
        }
        for (std::size_t j = 0; j < K; ++j)
            s.at(k, j) = acc[j] / static_cast<double>(by_class[k].size());
    });
    return s;
}

} // namespace colmat
