#include "colmat/net.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "colmat/errors.hpp"

namespace colmat {

FeedForwardNet make_net(std::size_t in_dim, std::size_t out_dim, const NetSpec& spec,
                        std::uint64_t seed) {
    if (in_dim == 0 || out_dim == 0) throw ConfigError("net dimensions must be positive");
    if (spec.dropout < 0.0 || spec.dropout >= 1.0)
        throw ConfigError("dropout rate must be in [0, 1)");
    FeedForwardNet net;
    net.layer_sizes.push_back(in_dim);
    for (std::size_t l = 0; l < spec.hidden_layers; ++l)
        net.layer_sizes.push_back(spec.hidden_width);
    net.layer_sizes.push_back(out_dim);
    Rng rng = make_rng(seed);
    for (std::size_t l = 0; l + 1 < net.layer_sizes.size(); ++l) {
        const std::size_t fan_in = net.layer_sizes[l];
        const std::size_t fan_out = net.layer_sizes[l + 1];
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        std::uniform_real_distribution<double> unif(-bound, bound);
        std::vector<double> w(fan_out * fan_in);
        for (double& v : w) v = unif(rng);
        net.weights.push_back(std::move(w));
        net.biases.emplace_back(fan_out, 0.0);
    }
    net.dropout_rates.assign(spec.hidden_layers, spec.dropout);
    return net;
}

nlohmann::json net_to_json(const FeedForwardNet& net) {
    nlohmann::json j;
    j["layer_sizes"] = net.layer_sizes;
    j["dropout_rates"] = net.dropout_rates;
    j["weights"] = net.weights;
    j["biases"] = net.biases;
    return j;
}

FeedForwardNet net_from_json(const nlohmann::json& j) {
    FeedForwardNet net;
    try {
        net.layer_sizes = j.at("layer_sizes").get<std::vector<std::size_t>>();
        net.dropout_rates = j.at("dropout_rates").get<std::vector<double>>();
        net.weights = j.at("weights").get<std::vector<std::vector<double>>>();
        net.biases = j.at("biases").get<std::vector<std::vector<double>>>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad net json: ") + e.what());
    }
    if (net.layer_sizes.size() < 2 || net.weights.size() + 1 != net.layer_sizes.size() ||
        net.biases.size() != net.weights.size() ||
        net.dropout_rates.size() + 2 != net.layer_sizes.size())
        throw ParseError("net json layer shapes are inconsistent");
    for (std::size_t l = 0; l < net.weights.size(); ++l) {
        if (net.weights[l].size() != net.layer_sizes[l] * net.layer_sizes[l + 1] ||
            net.biases[l].size() != net.layer_sizes[l + 1])
            throw ParseError("net json layer shapes are inconsistent");
    }
    return net;
}

void write_net_json(const FeedForwardNet& net, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << net_to_json(net).dump() << '\n';
}

FeedForwardNet read_net_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad json in ") + path + ": " + e.what());
    }
    return net_from_json(j);
}

void softmax(const double* logits, double* out, std::size_t n) {
    const double mx = *std::max_element(logits, logits + n);
    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        out[i] = std::exp(logits[i] - mx);
        denom += out[i];
    }
    for (std::size_t i = 0; i < n; ++i) out[i] /= denom;
}

std::vector<double> softmax(const std::vector<double>& logits) {
    std::vector<double> out(logits.size());
    softmax(logits.data(), out.data(), logits.size());
    return out;
}

namespace {

// Activations for one input: act[0] = x, act[l+1] = layer l output
// (post-ReLU and post-dropout for hidden layers, raw logits for the last).
struct ForwardScratch {
    std::vector<std::vector<double>> act;
    std::vector<std::vector<double>> mask; // dropout keep-scale per hidden layer
};

void forward_into(const FeedForwardNet& net, const double* x, ForwardScratch& s,
                  bool dropout_active, Rng* rng) {
    const std::size_t L = net.layers();
    s.act.resize(L + 1);
    s.mask.resize(L);
    s.act[0].assign(x, x + net.input_dim());
    for (std::size_t l = 0; l < L; ++l) {
        const std::size_t in = net.layer_sizes[l];
        const std::size_t out = net.layer_sizes[l + 1];
        auto& a = s.act[l + 1];
        a.assign(net.biases[l].begin(), net.biases[l].end());
        const double* w = net.weights[l].data();
        const double* prev = s.act[l].data();
        for (std::size_t r = 0; r < out; ++r) {
            double acc = a[r];
            const double* wr = w + r * in;
            for (std::size_t c = 0; c < in; ++c) acc += wr[c] * prev[c];
            a[r] = acc;
        }
        const bool hidden = l + 1 < net.layer_sizes.size() - 1;
        if (hidden) {
            for (double& v : a) v = v > 0.0 ? v : 0.0;
            const double rate = net.dropout_rates[l];
            if (dropout_active && rate > 0.0) {
                if (rng == nullptr)
                    throw StateError("dropout sampling requires a random generator");
                std::bernoulli_distribution keep(1.0 - rate);
                auto& m = s.mask[l];
                m.resize(out);
                const double scale = 1.0 / (1.0 - rate);
                for (std::size_t r = 0; r < out; ++r) {
                    m[r] = keep(*rng) ? scale : 0.0;
                    a[r] *= m[r];
                }
            } else {
                s.mask[l].clear();
            }
        }
    }
}

} // namespace

std::vector<double> forward(const FeedForwardNet& net, const double* x, bool dropout_active,
                            Rng* rng) {
    ForwardScratch s;
    forward_into(net, x, s, dropout_active, rng);
    return softmax(s.act.back());
}

Grads zero_grads(const FeedForwardNet& net) {
    Grads g;
    for (std::size_t l = 0; l < net.layers(); ++l) {
        g.weights.emplace_back(net.weights[l].size(), 0.0);
        g.biases.emplace_back(net.biases[l].size(), 0.0);
    }
    return g;
}

double net_loss_and_grad(const FeedForwardNet& net, const Batch& batch, Grads& grads,
                         bool dropout_active, Rng* rng) {
    if (batch.n == 0) throw ConfigError("batch is empty");
    if (batch.in_dim != net.input_dim() || batch.out_dim != net.output_dim())
        throw DimensionError("batch shape does not match net");
    const std::size_t L = net.layers();
    for (std::size_t l = 0; l < L; ++l) {
        std::fill(grads.weights[l].begin(), grads.weights[l].end(), 0.0);
        std::fill(grads.biases[l].begin(), grads.biases[l].end(), 0.0);
    }
    ForwardScratch s;
    std::vector<double> delta, next_delta, probs;
    double loss = 0.0;
    for (std::size_t i = 0; i < batch.n; ++i) {
        const double* x = batch.inputs.data() + i * batch.in_dim;
        const double* t = batch.targets.data() + i * batch.out_dim;
        forward_into(net, x, s, dropout_active, rng);
        const auto& logits = s.act[L];
        // CE via log-sum-exp: -sum_j t_j (z_j - lse(z)).
        const double mx = *std::max_element(logits.begin(), logits.end());
        double lse = 0.0;
        for (double z : logits) lse += std::exp(z - mx);
        lse = mx + std::log(lse);
        probs.resize(batch.out_dim);
        for (std::size_t j = 0; j < batch.out_dim; ++j) {
            loss -= t[j] * (logits[j] - lse);
            probs[j] = std::exp(logits[j] - lse);
        }
        // dL/dz = p - t for the softmax cross-entropy head.
        delta.resize(batch.out_dim);
        for (std::size_t j = 0; j < batch.out_dim; ++j) delta[j] = probs[j] - t[j];
        for (std::size_t l = L; l-- > 0;) {
            const std::size_t in = net.layer_sizes[l];
            const std::size_t out = net.layer_sizes[l + 1];
            const double* prev = s.act[l].data();
            double* gw = grads.weights[l].data();
            double* gb = grads.biases[l].data();
            for (std::size_t r = 0; r < out; ++r) {
                gb[r] += delta[r];
                double* gwr = gw + r * in;
                for (std::size_t c = 0; c < in; ++c) gwr[c] += delta[r] * prev[c];
            }
            if (l == 0) break;
            next_delta.assign(in, 0.0);
            const double* w = net.weights[l].data();
            for (std::size_t r = 0; r < out; ++r) {
                const double* wr = w + r * in;
                for (std::size_t c = 0; c < in; ++c) next_delta[c] += wr[c] * delta[r];
            }
            // Backprop through dropout scale then the ReLU gate (derivative 0
            // at non-positive pre-activations; s.act holds post-ReLU values).
            const auto& m = s.mask[l - 1];
            for (std::size_t c = 0; c < in; ++c) {
                if (!m.empty()) next_delta[c] *= m[c];
                if (s.act[l][c] <= 0.0) next_delta[c] = 0.0;
            }
            delta = next_delta;
        }
    }
    const double inv = 1.0 / static_cast<double>(batch.n);
    loss *= inv;
    for (std::size_t l = 0; l < L; ++l) {
        for (double& v : grads.weights[l]) v *= inv;
        for (double& v : grads.biases[l]) v *= inv;
    }
    if (!std::isfinite(loss)) throw TrainingDivergenceError("training loss is not finite");
    return loss;
}

double net_loss(const FeedForwardNet& net, const Batch& batch) {
    Grads g = zero_grads(net);
    return net_loss_and_grad(net, batch, g);
}

TrainResult train(FeedForwardNet& net, const BatchSource& source, std::size_t batches_per_epoch,
                  const TrainConfig& config) {
    if (config.epochs == 0 || batches_per_epoch == 0)
        throw ConfigError("training needs at least one epoch and one batch");
    if (!(config.learning_rate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (config.momentum < 0.0 || config.momentum >= 1.0)
        throw ConfigError("momentum must be in [0, 1)");
    Rng rng = make_rng(config.seed);
    Grads grads = zero_grads(net);
    Grads vel = zero_grads(net);
    Batch batch;
    TrainResult result;
    result.epoch_loss.reserve(config.epochs);
    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        double epoch_loss = 0.0;
        std::size_t batches = 0;
        for (std::size_t b = 0; b < batches_per_epoch; ++b) {
            if (!source(epoch, b, rng, batch)) break;
            const bool dropout = std::any_of(net.dropout_rates.begin(), net.dropout_rates.end(),
                                             [](double r) { return r > 0.0; });
            epoch_loss += net_loss_and_grad(net, batch, grads, dropout, &rng);
            ++batches;
            for (std::size_t l = 0; l < net.layers(); ++l) {
                double* w = net.weights[l].data();
                double* bia = net.biases[l].data();
                double* gw = grads.weights[l].data();
                double* gb = grads.biases[l].data();
                double* vw = vel.weights[l].data();
                double* vb = vel.biases[l].data();
                const std::size_t nw = net.weights[l].size();
                const std::size_t nb = net.biases[l].size();
                for (std::size_t i = 0; i < nw; ++i) {
                    vw[i] = config.momentum * vw[i] - config.learning_rate * gw[i];
                    w[i] += vw[i];
                }
                for (std::size_t i = 0; i < nb; ++i) {
                    vb[i] = config.momentum * vb[i] - config.learning_rate * gb[i];
                    bia[i] += vb[i];
                }
            }
        }
        if (batches == 0) throw StateError("batch source produced no batches");
        result.epoch_loss.push_back(epoch_loss / static_cast<double>(batches));
    }
    return result;
}

TrainResult train_classifier_net(FeedForwardNet& net, const std::vector<double>& features,
                                 const std::vector<int>& labels, std::size_t n, std::size_t d,
                                 std::size_t K, const TrainConfig& config) {
    if (n == 0) throw ConfigError("no training rows");
    if (features.size() != n * d || labels.size() != n)
        throw DimensionError("feature or label buffer does not match n");
    const std::size_t batch_size = std::min(config.batch_size, n);
    const std::size_t batches_per_epoch = (n + batch_size - 1) / batch_size;
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    auto source = [&](std::size_t, std::size_t b, Rng& rng, Batch& batch) {
        if (b == 0) std::shuffle(order.begin(), order.end(), rng);
        const std::size_t begin = b * batch_size;
        const std::size_t end = std::min(begin + batch_size, n);
        if (begin >= end) return false;
        batch.n = end - begin;
        batch.in_dim = d;
        batch.out_dim = K;
        batch.inputs.resize(batch.n * d);
        batch.targets.assign(batch.n * K, 0.0);
        for (std::size_t i = begin; i < end; ++i) {
            const std::size_t row = order[i];
            std::copy(features.begin() + static_cast<std::ptrdiff_t>(row * d),
                      features.begin() + static_cast<std::ptrdiff_t>((row + 1) * d),
                      batch.inputs.begin() + static_cast<std::ptrdiff_t>((i - begin) * d));
            batch.targets[(i - begin) * K + static_cast<std::size_t>(labels[row])] = 1.0;
        }
        return true;
    };
    return train(net, source, batches_per_epoch, config);
}

} // namespace colmat
