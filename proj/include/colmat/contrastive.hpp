#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "colmat/dataset.hpp"
#include "colmat/mixture.hpp"
#include "colmat/net.hpp"

namespace colmat {

// Balanced sampler for the pair task: flip z ~ Bernoulli(1/2); z = 1 draws a
// uniform class and two distinct members, z = 0 a uniform ordered pair of
// distinct classes and one member from each. Inputs are [x, x~] with the
// order swapped with probability 1/2; targets are one-hot in z.
class PairBatchSampler {
public:
    PairBatchSampler(const Dataset& data, std::size_t batch_size);
    // Fills `batch` with batch_size fresh pairs.
    void fill(Rng& rng, Batch& batch) const;
    std::size_t batch_size() const { return batch_size_; }

private:
    const Dataset* data_;
    std::vector<std::vector<std::size_t>> by_class_;
    std::size_t batch_size_;
};

// Pair model V(x, x~): probability the two inputs share a class.
struct ContrastiveModel {
    FeedForwardNet net;     // input 2d, output 2 logits; index 1 = same class
    std::size_t d = 0;
    bool trained = false;
    std::uint64_t seed = 0;
    std::size_t epochs = 0;
    double final_risk = 0.0;        // last epoch's mean training loss
    std::vector<double> loss_trace; // per-epoch mean training loss
};

struct ContrastiveTrainConfig {
    NetSpec net;
    TrainConfig train;
};

ContrastiveTrainConfig default_contrastive_config();

// One epoch presents n pairs (n = dataset rows). Throws UnusableClassError up
// front if any class has fewer than two members.
ContrastiveModel train_contrastive(const Dataset& data, const ContrastiveTrainConfig& config);

// Order-symmetrized score: (V(x,x~) + V(x~,x)) / 2.
double similarity(const ContrastiveModel& model, const double* x, const double* x_tilde);

using SimilarityFn = std::function<double(const double* x, const double* x_tilde)>;
SimilarityFn similarity_fn(const ContrastiveModel& model);

// Ideal pair model: <y(x), y(x~)> under the true mixture posterior.
double oracle_similarity(const GaussianMixture& gm, const double* x, const double* x_tilde);
SimilarityFn oracle_similarity_fn(GaussianMixture gm);

enum class PairLoss { cross_entropy, zero_one };

// Exact pair risk over the labeled dataset: mean over the balanced pair
// distribution, i.e. 1/2 (same-class term) + 1/2 (cross-class term), each
// enumerated over all eligible ordered pairs.
double empirical_pair_risk(const SimilarityFn& v, const Dataset& data,
                           PairLoss loss = PairLoss::cross_entropy);

void write_contrastive_json(const ContrastiveModel& model, const std::string& path);
ContrastiveModel read_contrastive_json(const std::string& path);

} // namespace colmat
