#include "colmat/contrastive.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <random>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"

namespace colmat {

PairBatchSampler::PairBatchSampler(const Dataset& data, std::size_t batch_size)
    : data_(&data), by_class_(indices_by_class(data)), batch_size_(batch_size) {
    if (batch_size == 0) throw ConfigError("pair batch size must be positive");
    if (data.K < 2) throw ConfigError("pair task needs at least two classes");
    for (int k = 0; k < data.K; ++k)
        if (by_class_[static_cast<std::size_t>(k)].size() < 2)
            throw UnusableClassError("class " + data.label_names[static_cast<std::size_t>(k)] +
                                         " has fewer than two rows",
                                     static_cast<std::size_t>(k));
}

void PairBatchSampler::fill(Rng& rng, Batch& batch) const {
    const std::size_t d = data_->d;
    const int K = data_->K;
    batch.n = batch_size_;
    batch.in_dim = 2 * d;
    batch.out_dim = 2;
    batch.inputs.resize(batch.n * 2 * d);
    batch.targets.assign(batch.n * 2, 0.0);
    std::bernoulli_distribution coin(0.5);
    std::uniform_int_distribution<int> pick_class(0, K - 1);
    for (std::size_t i = 0; i < batch.n; ++i) {
        std::size_t row_a, row_b;
        const bool same = coin(rng);
        if (same) {
            const auto& members = by_class_[static_cast<std::size_t>(pick_class(rng))];
            std::uniform_int_distribution<std::size_t> pick(0, members.size() - 1);
            const std::size_t a = pick(rng);
            std::size_t b = pick(rng);
            while (b == a) b = pick(rng);
            row_a = members[a];
            row_b = members[b];
        } else {
            const int ka = pick_class(rng);
            int kb = pick_class(rng);
            while (kb == ka) kb = pick_class(rng);
            const auto& ma = by_class_[static_cast<std::size_t>(ka)];
            const auto& mb = by_class_[static_cast<std::size_t>(kb)];
            row_a = ma[std::uniform_int_distribution<std::size_t>(0, ma.size() - 1)(rng)];
            row_b = mb[std::uniform_int_distribution<std::size_t>(0, mb.size() - 1)(rng)];
        }
        if (coin(rng)) std::swap(row_a, row_b); // order augmentation
        double* dst = batch.inputs.data() + i * 2 * d;
        std::copy(data_->row(row_a), data_->row(row_a) + d, dst);
        std::copy(data_->row(row_b), data_->row(row_b) + d, dst + d);
        batch.targets[i * 2 + (same ? 1 : 0)] = 1.0;
    }
}

ContrastiveTrainConfig default_contrastive_config() {
    ContrastiveTrainConfig c;
    c.net.hidden_layers = 6;
    c.net.hidden_width = 128;
    c.net.dropout = 0.0;
    c.train.epochs = 500;
    c.train.batch_size = 32;
    c.train.learning_rate = 0.05;
    c.train.momentum = 0.9;
    return c;
}

ContrastiveModel train_contrastive(const Dataset& data, const ContrastiveTrainConfig& config) {
    PairBatchSampler sampler(data, config.train.batch_size);
    ContrastiveModel model;
    model.d = data.d;
    model.seed = config.train.seed;
    model.epochs = config.train.epochs;
    model.net = make_net(2 * data.d, 2, config.net, derive_seed(config.train.seed, 0xA11CE));
    // An epoch presents n pairs in total.
    const std::size_t batches_per_epoch =
        (data.n + config.train.batch_size - 1) / config.train.batch_size;
    auto source = [&sampler](std::size_t, std::size_t, Rng& rng, Batch& batch) {
        sampler.fill(rng, batch);
        return true;
    };
    TrainResult result = train(model.net, source, batches_per_epoch, config.train);
    model.final_risk = result.epoch_loss.back();
    model.loss_trace = std::move(result.epoch_loss);
    model.trained = true;
    return model;
}

double similarity(const ContrastiveModel& model, const double* x, const double* x_tilde) {
    if (!model.trained) throw StateError("contrastive model is untrained");
    const std::size_t d = model.d;
    std::vector<double> in(2 * d);
    std::copy(x, x + d, in.begin());
    std::copy(x_tilde, x_tilde + d, in.begin() + static_cast<std::ptrdiff_t>(d));
    const double fwd = forward(model.net, in.data())[1];
    std::copy(x_tilde, x_tilde + d, in.begin());
    std::copy(x, x + d, in.begin() + static_cast<std::ptrdiff_t>(d));
    const double bwd = forward(model.net, in.data())[1];
    return 0.5 * (fwd + bwd);
}

SimilarityFn similarity_fn(const ContrastiveModel& model) {
    if (!model.trained) throw StateError("contrastive model is untrained");
    return [model](const double* x, const double* x_tilde) {
        return similarity(model, x, x_tilde);
    };
}

double oracle_similarity(const GaussianMixture& gm, const double* x, const double* x_tilde) {
    const std::vector<double> ya = true_posterior(gm, x);
    const std::vector<double> yb = true_posterior(gm, x_tilde);
    double dot = 0.0;
    for (std::size_t k = 0; k < ya.size(); ++k) dot += ya[k] * yb[k];
    return dot;
}

SimilarityFn oracle_similarity_fn(GaussianMixture gm) {
    gm.validate();
    return [gm = std::move(gm)](const double* x, const double* x_tilde) {
        return oracle_similarity(gm, x, x_tilde);
    };
}

namespace {

double pair_loss(double v, bool same, PairLoss loss) {
    if (loss == PairLoss::zero_one) return (v >= 0.5) == same ? 0.0 : 1.0;
    const double p = std::clamp(same ? v : 1.0 - v, 1e-12, 1.0 - 1e-12);
    return -std::log(p);
}

} // namespace

double empirical_pair_risk(const SimilarityFn& v, const Dataset& data, PairLoss loss) {
    const auto by_class = indices_by_class(data);
    const int K = data.K;
    for (int k = 0; k < K; ++k)
        if (by_class[static_cast<std::size_t>(k)].size() < 2)
            throw UnusableClassError("class " + data.label_names[static_cast<std::size_t>(k)] +
                                         " has fewer than two rows",
                                     static_cast<std::size_t>(k));

    // Same-class term: mean over all distinct ordered pairs within a class,
    // classes weighted uniformly. Chunked over classes.
    std::vector<double> same_terms(static_cast<std::size_t>(K), 0.0);
    for_each_chunk(static_cast<std::size_t>(K), [&](std::size_t k) {
        const auto& members = by_class[k];
        double acc = 0.0;
        for (std::size_t a = 0; a < members.size(); ++a)
            for (std::size_t b = 0; b < members.size(); ++b) {
                if (a == b) continue;
                acc += pair_loss(v(data.row(members[a]), data.row(members[b])), true, loss);
            }
        same_terms[k] =
            acc / (static_cast<double>(members.size()) * static_cast<double>(members.size() - 1));
    });
    double same_mean = 0.0;
    for (double t : same_terms) same_mean += t;
    same_mean /= static_cast<double>(K);

    // Cross-class term: mean over ordered class pairs, each the mean over the
    // full product of members.
    const std::size_t pairs = static_cast<std::size_t>(K) * static_cast<std::size_t>(K - 1);
    std::vector<double> cross_terms(pairs, 0.0);
    for_each_chunk(pairs, [&](std::size_t p) {
        const std::size_t i = p / static_cast<std::size_t>(K - 1);
        std::size_t j = p % static_cast<std::size_t>(K - 1);
        if (j >= i) ++j;
        const auto& mi = by_class[i];
        const auto& mj = by_class[j];
        double acc = 0.0;
        for (std::size_t a : mi)
            for (std::size_t b : mj) acc += pair_loss(v(data.row(a), data.row(b)), false, loss);
        cross_terms[p] = acc / (static_cast<double>(mi.size()) * static_cast<double>(mj.size()));
    });
    double cross_mean = 0.0;
    for (double t : cross_terms) cross_mean += t;
    cross_mean /= static_cast<double>(pairs);

    return 0.5 * same_mean + 0.5 * cross_mean;
}

void write_contrastive_json(const ContrastiveModel& model, const std::string& path) {
    if (!model.trained) throw StateError("contrastive model is untrained");
    nlohmann::json j;
    j["net"] = net_to_json(model.net);
    j["d"] = model.d;
    j["seed"] = model.seed;
    j["epochs"] = model.epochs;
    j["final_risk"] = model.final_risk;
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump() << '\n';
}

ContrastiveModel read_contrastive_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad json in ") + path + ": " + e.what());
    }
    ContrastiveModel model;
    try {
        model.net = net_from_json(j.at("net"));
        model.d = j.at("d").get<std::size_t>();
        model.seed = j.at("seed").get<std::uint64_t>();
        model.epochs = j.at("epochs").get<std::size_t>();
        model.final_risk = j.at("final_risk").get<double>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad contrastive json: ") + e.what());
    }
    if (model.net.input_dim() != 2 * model.d || model.net.output_dim() != 2)
        throw ParseError("contrastive net shape does not match stored dimension");
    model.trained = true;
    return model;
}

} // namespace colmat
