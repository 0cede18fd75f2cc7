#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "colmat/dataset.hpp"
#include "colmat/matrix.hpp"
#include "colmat/net.hpp"

namespace colmat {

struct ClassifierTrainConfig {
    NetSpec net;
    TrainConfig train;
};

ClassifierTrainConfig default_classifier_config();

// Softmax classifier M: R^d -> Delta^K trained on the labeled rows.
FeedForwardNet train_classifier(const Dataset& data, const ClassifierTrainConfig& config);

// Expected calibration error with equal-width confidence bins; confidence is
// the max predicted probability, accuracy is argmax correctness.
double ece(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
           std::size_t bins = 15);

struct CalibratedClassifier {
    FeedForwardNet net;
    double temperature = 1.0;
    double validation_ece = 0.0; // at the chosen temperature
};

std::vector<double> temperature_grid_default(); // 50 log-spaced values in [0.1, 10]

// Picks the grid temperature minimizing validation ECE on softmax(z / T).
// Ties within 1e-12 prefer T = 1 when it is tied, then the smaller T.
CalibratedClassifier fit_temperature(FeedForwardNet net, const Dataset& validation,
                                     std::size_t bins = 15,
                                     const std::vector<double>& grid = temperature_grid_default());

std::vector<double> calibrated_posterior(const CalibratedClassifier& model, const double* x);

// Mean softmax over h stochastic forward passes with dropout active. Nets
// without a positive dropout rate make every pass identical; the optional
// flag reports that degeneracy.
std::vector<double> mc_dropout_posterior(const FeedForwardNet& net, const double* x,
                                         std::size_t h, std::uint64_t seed,
                                         bool* degenerate_warning = nullptr);

using PosteriorFn = std::function<std::vector<double>(const double* x)>;

// Plug-in estimate: row i is the mean predicted posterior over the rows
// labeled i. Chunk-parallel over classes.
Matrix plug_in_collision_matrix(const PosteriorFn& posterior, const Dataset& data);

} // namespace colmat
