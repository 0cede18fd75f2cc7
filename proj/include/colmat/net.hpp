#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "colmat/rng.hpp"

namespace colmat {

// Fully connected ReLU network. weights[l] is (out x in) row-major; the last
// layer is linear (logits). dropout_rates[l] applies to the *output* of hidden
// layer l during training (inverted dropout, identity at inference).
struct FeedForwardNet {
    std::vector<std::size_t> layer_sizes; // [in, hidden..., out]
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
    std::vector<double> dropout_rates; // one per hidden layer

    std::size_t layers() const { return weights.size(); }
    std::size_t input_dim() const { return layer_sizes.front(); }
    std::size_t output_dim() const { return layer_sizes.back(); }
};

struct NetSpec {
    std::size_t hidden_layers = 3;
    std::size_t hidden_width = 64;
    double dropout = 0.0;
};

// Uniform(+-sqrt(6/(fan_in+fan_out))) weights, zero biases, deterministic.
FeedForwardNet make_net(std::size_t in_dim, std::size_t out_dim, const NetSpec& spec,
                        std::uint64_t seed);

nlohmann::json net_to_json(const FeedForwardNet& net);
FeedForwardNet net_from_json(const nlohmann::json& j);
void write_net_json(const FeedForwardNet& net, const std::string& path);
FeedForwardNet read_net_json(const std::string& path);

void softmax(const double* logits, double* out, std::size_t n);
std::vector<double> softmax(const std::vector<double>& logits);

// Forward pass to class probabilities. dropout_active requires an rng and
// samples fresh masks; otherwise dropout layers are the identity.
std::vector<double> forward(const FeedForwardNet& net, const double* x,
                            bool dropout_active = false, Rng* rng = nullptr);

struct Batch {
    std::size_t n = 0;
    std::size_t in_dim = 0;
    std::size_t out_dim = 0;
    std::vector<double> inputs;  // n x in_dim
    std::vector<double> targets; // n x out_dim, soft labels allowed
};

struct Grads {
    std::vector<std::vector<double>> weights;
    std::vector<std::vector<double>> biases;
};

Grads zero_grads(const FeedForwardNet& net);

// Mean cross-entropy over the batch plus gradient. Non-finite loss throws
// TrainingDivergenceError.
double net_loss_and_grad(const FeedForwardNet& net, const Batch& batch, Grads& grads,
                         bool dropout_active = false, Rng* rng = nullptr);

// Mean cross-entropy only (no dropout), for validation curves.
double net_loss(const FeedForwardNet& net, const Batch& batch);

struct TrainConfig {
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double learning_rate = 0.05;
    double momentum = 0.0;
    std::uint64_t seed = 0;
};

struct TrainResult {
    std::vector<double> epoch_loss; // mean training loss per epoch
};

// Generic SGD loop. source fills the batch for (epoch, batch index) and
// returns false to end the epoch early; batches_per_epoch bounds each epoch.
using BatchSource = std::function<bool(std::size_t epoch, std::size_t batch, Rng& rng, Batch&)>;
TrainResult train(FeedForwardNet& net, const BatchSource& source, std::size_t batches_per_epoch,
                  const TrainConfig& config);

// Supervised softmax classifier on (features, one-hot labels) with shuffled
// minibatches.
TrainResult train_classifier_net(FeedForwardNet& net, const std::vector<double>& features,
                                 const std::vector<int>& labels, std::size_t n, std::size_t d,
                                 std::size_t K, const TrainConfig& config);

} // namespace colmat
