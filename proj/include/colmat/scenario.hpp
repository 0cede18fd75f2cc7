#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "colmat/baselines.hpp"
#include "colmat/contrastive.hpp"
#include "colmat/estimator.hpp"
#include "colmat/mixture.hpp"

namespace colmat {

// Full description of one experiment: data source (synthetic mixture or CSV),
// methods to run, per-stage model and estimator settings, and the seed list.
struct ScenarioConfig {
    std::string name = "custom";
    std::optional<GaussianMixture> mixture; // synthetic source when present
    std::string csv_path;                   // CSV source otherwise
    std::string label_column = "label";
    std::size_t n_per_class = 250;
    std::vector<std::string> methods = {"gramian", "naive"};
    std::vector<std::uint64_t> seeds = {1};

    NetSpec v_net;           // pair model architecture
    TrainConfig v_train;     // pair model schedule (seed overridden per run)
    NetSpec m_net;           // baseline classifier architecture
    TrainConfig m_train;     // baseline classifier schedule
    double mc_dropout_rate = 0.25;
    std::size_t mc_dropout_h = 30;

    std::size_t m_per_cell = 10000;
    std::size_t m_comparison = 200;
    RecoveryConfig recovery;
    double train_frac = 0.8;
    double val_frac = 0.1;
    std::size_t ece_bins = 15;
    std::size_t truth_mc_samples = 1000000; // BER integration budget

    void validate() const;
};

ScenarioConfig default_scenario_config();

std::vector<std::string> preset_names();
// Presets encode the synthetic study settings verbatim: scenario-a-k3/k4/k5
// (d = 4, 250 per class), scenario-b-beta015/beta025/beta035 (d = 20, K = 5,
// 10000 per class), and scenario-c (the highest-overlap B setting).
ScenarioConfig make_preset(const std::string& name);

nlohmann::json scenario_to_json(const ScenarioConfig& config);
ScenarioConfig scenario_from_json(const nlohmann::json& j);

struct RunOutput {
    nlohmann::json report;  // deterministic function of (config, seeds)
    nlohmann::json timings; // wall-clock sidecar, intentionally separate
};

// Runs every method for every seed; synthetic configs also compute the true
// collision matrix (quadrature when the means are collinear, Monte Carlo
// otherwise), BER, and per-method row TVDs. A method failure is recorded
// under its stage name and the remaining methods still run.
RunOutput run_scenario(const ScenarioConfig& config);

struct DivergenceCurveRow {
    double mu;
    double collision;
    double tvd;
    double hellinger_sq;
    double kl;
};

// One row per mu: collision divergence of N(mu,1) vs N(-mu,1) by quadrature
// next to the closed-form reference divergences.
std::vector<DivergenceCurveRow> divergence_curve(const std::vector<double>& mu_grid);
void write_divergence_curve_csv(const std::vector<DivergenceCurveRow>& rows,
                                const std::string& path);

} // namespace colmat
