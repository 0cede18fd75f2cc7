#include "colmat/scenario.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "colmat/errors.hpp"
#include "colmat/parallel.hpp"
#include "colmat/posterior.hpp"
#include "colmat/rng.hpp"

namespace colmat {

namespace {

const std::vector<std::string> kMethods = {"gramian", "naive", "calibrated", "mc_dropout"};

double elapsed_ms(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start)
        .count();
}

double median(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double mean(const std::vector<double>& values) {
    double acc = 0.0;
    for (double v : values) acc += v;
    return acc / static_cast<double>(values.size());
}

nlohmann::json net_spec_to_json(const NetSpec& spec) {
    return {{"hidden_layers", spec.hidden_layers},
            {"hidden_width", spec.hidden_width},
            {"dropout", spec.dropout}};
}

NetSpec net_spec_from_json(const nlohmann::json& j, const NetSpec& defaults) {
    NetSpec spec = defaults;
    spec.hidden_layers = j.value("hidden_layers", spec.hidden_layers);
    spec.hidden_width = j.value("hidden_width", spec.hidden_width);
    spec.dropout = j.value("dropout", spec.dropout);
    return spec;
}

nlohmann::json train_config_to_json(const TrainConfig& c) {
    return {{"epochs", c.epochs},
            {"batch_size", c.batch_size},
            {"learning_rate", c.learning_rate},
            {"momentum", c.momentum},
            {"seed", c.seed}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, const TrainConfig& defaults) {
    TrainConfig c = defaults;
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.momentum = j.value("momentum", c.momentum);
    c.seed = j.value("seed", c.seed);
    return c;
}

nlohmann::json recovery_to_json(const RecoveryConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"lambda", c.lambda},
            {"gamma", c.gamma},
            {"max_iterations", c.max_iterations},
            {"enforce_symmetry", c.enforce_symmetry}};
}

RecoveryConfig recovery_from_json(const nlohmann::json& j, const RecoveryConfig& defaults) {
    RecoveryConfig c = defaults;
    c.learning_rate = j.value("learning_rate", c.learning_rate);
    c.lambda = j.value("lambda", c.lambda);
    c.gamma = j.value("gamma", c.gamma);
    c.max_iterations = j.value("max_iterations", c.max_iterations);
    c.enforce_symmetry = j.value("enforce_symmetry", c.enforce_symmetry);
    return c;
}

GaussianMixture collinear_mixture(std::size_t d, const std::vector<double>& factors) {
    GaussianMixture gm;
    gm.K = static_cast<int>(factors.size());
    gm.d = d;
    gm.covariance_scale = 1.0;
    for (const double f : factors) gm.means.emplace_back(d, f);
    gm.priors = SimplexVector::uniform(factors.size());
    return gm;
}

} // namespace

void ScenarioConfig::validate() const {
    if (methods.empty()) throw ConfigError("scenario needs at least one method");
    if (seeds.empty()) throw ConfigError("scenario needs at least one seed");
    for (const auto& m : methods)
        if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
            throw ConfigError("unknown method '" + m + "'");
    const bool synthetic = mixture.has_value();
    if (synthetic == !csv_path.empty())
        throw ConfigError("scenario needs exactly one data source (mixture or csv_path)");
    if (synthetic) {
        mixture->validate();
        if (n_per_class == 0) throw ConfigError("n_per_class must be positive");
    }
    if (!(train_frac > 0.0) || val_frac < 0.0 || train_frac + val_frac > 1.0)
        throw ConfigError("split fractions must satisfy 0 < train, 0 <= val, train + val <= 1");
    if (m_per_cell == 0) throw ConfigError("m_per_cell must be positive");
    if (m_comparison == 0) throw ConfigError("m_comparison must be positive");
    if (ece_bins == 0) throw ConfigError("ece_bins must be positive");
    if (mc_dropout_h == 0) throw ConfigError("mc_dropout_h must be positive");
    if (mc_dropout_rate <= 0.0 || mc_dropout_rate >= 1.0)
        throw ConfigError("mc_dropout_rate must be in (0, 1)");
    if (truth_mc_samples < 10000) throw ConfigError("truth_mc_samples must be at least 10^4");
}

ScenarioConfig default_scenario_config() {
    ScenarioConfig c;
    c.v_net.hidden_layers = 6;
    c.v_net.hidden_width = 128;
    c.m_net.hidden_layers = 6;
    c.m_net.hidden_width = 128;
    c.v_train.epochs = 500;
    c.v_train.batch_size = 32;
    c.v_train.learning_rate = 0.05;
    c.v_train.momentum = 0.9;
    c.m_train = c.v_train;
    return c;
}

std::vector<std::string> preset_names() {
    return {"scenario-a-k3",      "scenario-a-k4",      "scenario-a-k5",
            "scenario-b-beta015", "scenario-b-beta025", "scenario-b-beta035",
            "scenario-c"};
}

ScenarioConfig make_preset(const std::string& name) {
    ScenarioConfig c = default_scenario_config();
    c.name = name;
    auto scenario_b = [](double beta) {
        return collinear_mixture(20, {-3.0 * beta, -beta, beta, 5.0 * beta, 10.0 * beta});
    };
    if (name == "scenario-a-k3") {
        c.mixture = collinear_mixture(4, {0.25, -0.25, 1.25});
        c.n_per_class = 250;
    } else if (name == "scenario-a-k4") {
        c.mixture = collinear_mixture(4, {-0.25, 0.25, 0.75, 2.5});
        c.n_per_class = 250;
    } else if (name == "scenario-a-k5") {
        c.mixture = collinear_mixture(4, {-0.25, 0.25, 0.75, 2.5, -1.0});
        c.n_per_class = 250;
    } else if (name == "scenario-b-beta015") {
        c.mixture = scenario_b(0.15);
        c.n_per_class = 10000;
    } else if (name == "scenario-b-beta025") {
        c.mixture = scenario_b(0.25);
        c.n_per_class = 10000;
    } else if (name == "scenario-b-beta035") {
        c.mixture = scenario_b(0.35);
        c.n_per_class = 10000;
    } else if (name == "scenario-c") {
        // The highest-overlap Scenario B dataset, used for posterior studies.
        c.mixture = scenario_b(0.15);
        c.n_per_class = 10000;
        c.methods = {"gramian", "naive", "calibrated", "mc_dropout"};
    } else {
        throw ConfigError("unknown preset '" + name + "'");
    }
    return c;
}

nlohmann::json scenario_to_json(const ScenarioConfig& c) {
    nlohmann::json j;
    j["name"] = c.name;
    if (c.mixture) j["mixture"] = mixture_to_json(*c.mixture);
    if (!c.csv_path.empty()) {
        j["csv_path"] = c.csv_path;
        j["label_column"] = c.label_column;
    }
    j["n_per_class"] = c.n_per_class;
    j["methods"] = c.methods;
    j["seeds"] = c.seeds;
    j["v_net"] = net_spec_to_json(c.v_net);
    j["v_train"] = train_config_to_json(c.v_train);
    j["m_net"] = net_spec_to_json(c.m_net);
    j["m_train"] = train_config_to_json(c.m_train);
    j["mc_dropout_rate"] = c.mc_dropout_rate;
    j["mc_dropout_h"] = c.mc_dropout_h;
    j["m_per_cell"] = c.m_per_cell;
    j["m_comparison"] = c.m_comparison;
    j["recovery"] = recovery_to_json(c.recovery);
    j["train_frac"] = c.train_frac;
    j["val_frac"] = c.val_frac;
    j["ece_bins"] = c.ece_bins;
    j["truth_mc_samples"] = c.truth_mc_samples;
    return j;
}

ScenarioConfig scenario_from_json(const nlohmann::json& j) {
    ScenarioConfig c = default_scenario_config();
    try {
        c.name = j.value("name", c.name);
        if (j.contains("mixture")) c.mixture = mixture_from_json(j.at("mixture"));
        c.csv_path = j.value("csv_path", c.csv_path);
        c.label_column = j.value("label_column", c.label_column);
        c.n_per_class = j.value("n_per_class", c.n_per_class);
        c.methods = j.value("methods", c.methods);
        c.seeds = j.value("seeds", c.seeds);
        if (j.contains("v_net")) c.v_net = net_spec_from_json(j.at("v_net"), c.v_net);
        if (j.contains("v_train")) c.v_train = train_config_from_json(j.at("v_train"), c.v_train);
        if (j.contains("m_net")) c.m_net = net_spec_from_json(j.at("m_net"), c.m_net);
        if (j.contains("m_train")) c.m_train = train_config_from_json(j.at("m_train"), c.m_train);
        c.mc_dropout_rate = j.value("mc_dropout_rate", c.mc_dropout_rate);
        c.mc_dropout_h = j.value("mc_dropout_h", c.mc_dropout_h);
        c.m_per_cell = j.value("m_per_cell", c.m_per_cell);
        c.m_comparison = j.value("m_comparison", c.m_comparison);
        if (j.contains("recovery")) c.recovery = recovery_from_json(j.at("recovery"), c.recovery);
        c.train_frac = j.value("train_frac", c.train_frac);
        c.val_frac = j.value("val_frac", c.val_frac);
        c.ece_bins = j.value("ece_bins", c.ece_bins);
        c.truth_mc_samples = j.value("truth_mc_samples", c.truth_mc_samples);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("bad scenario json: ") + e.what());
    }
    c.validate();
    return c;
}

namespace {

nlohmann::json precision_recall_json(const Matrix& s, const SimplexVector& priors) {
    const PrecisionRecall pr = precision_recall_from_s(s, priors);
    nlohmann::json j;
    j["recall"] = pr.recall;
    nlohmann::json prec = nlohmann::json::array();
    for (const auto& p : pr.precision) {
        if (p)
            prec.push_back(*p);
        else
            prec.push_back(nullptr);
    }
    j["precision"] = prec;
    return j;
}

// Shared per-method summary: PBER, precision/recall, and (when truth is
// available) max/avg row TVD against the true matrix.
void attach_s_metrics(nlohmann::json& method_json, const Matrix& s_hat,
                      const SimplexVector& priors, const Matrix* s_true) {
    method_json["s_hat"] = matrix_to_json(s_hat);
    method_json["pber"] = pber_from_s(s_hat, priors);
    method_json["precision_recall"] = precision_recall_json(s_hat, priors);
    if (s_true != nullptr) {
        const RowTvd tvd = row_tvd(s_hat, *s_true);
        method_json["tvd_max"] = tvd.max;
        method_json["tvd_avg"] = tvd.avg;
    }
}

struct SeedPipeline {
    const ScenarioConfig& config;
    const Dataset* shared_data; // CSV source, shared across seeds
    const SimplexVector& priors;
    const Matrix* s_true;
    std::uint64_t seed;
    nlohmann::json& run;
    nlohmann::json& timing;

    void execute() {
        run["seed"] = seed;
        timing["seed"] = seed;
        auto t0 = std::chrono::steady_clock::now();
        Dataset data;
        if (shared_data == nullptr) {
            data = sample(*config.mixture, config.n_per_class, derive_seed(seed, 1));
            timing["sample_ms"] = elapsed_ms(t0);
        } else {
            data = *shared_data;
        }
        t0 = std::chrono::steady_clock::now();
        const SplitResult split =
            stratified_split(data, config.train_frac, config.val_frac, derive_seed(seed, 2));
        timing["split_ms"] = elapsed_ms(t0);
        run["split"] = {{"train", split.train.n},
                        {"validation", split.validation.n},
                        {"test", split.test.n}};

        // naive and calibrated share one classifier; trained only on demand
        // so a gramian-only run never builds it.
        FeedForwardNet classifier;
        bool classifier_ready = false;
        auto ensure_classifier = [&]() {
            if (classifier_ready) return;
            ClassifierTrainConfig cc;
            cc.net = config.m_net;
            cc.train = config.m_train;
            cc.train.seed = derive_seed(seed, 5);
            const auto t = std::chrono::steady_clock::now();
            classifier = train_classifier(split.train, cc);
            timing["train_m_ms"] = elapsed_ms(t);
            classifier_ready = true;
        };

        nlohmann::json methods_json;
        for (const std::string& name : config.methods) {
            nlohmann::json mj;
            std::string stage = "setup";
            try {
                if (name == "gramian") {
                    stage = "train_v";
                    ContrastiveTrainConfig vc;
                    vc.net = config.v_net;
                    vc.train = config.v_train;
                    vc.train.seed = derive_seed(seed, 3);
                    auto t = std::chrono::steady_clock::now();
                    const ContrastiveModel v = train_contrastive(split.train, vc);
                    timing["train_v_ms"] = elapsed_ms(t);
                    mj["v_final_risk"] = v.final_risk;
                    mj["v_loss_trace"] = v.loss_trace;

                    stage = "estimate_gramian";
                    t = std::chrono::steady_clock::now();
                    const GramianEstimate est = estimate_gramian(
                        similarity_fn(v), split.train, config.m_per_cell, derive_seed(seed, 4));
                    timing["estimate_g_ms"] = elapsed_ms(t);
                    mj["gramian"] = matrix_to_json(est.g);
                    mj["gramian_std_error"] = matrix_to_json(est.std_error);

                    stage = "recover";
                    t = std::chrono::steady_clock::now();
                    const RecoveryResult rec = recover_collision_matrix(est.g, config.recovery);
                    timing["recover_ms"] = elapsed_ms(t);
                    mj["recovery"] = {{"residual", rec.residual},
                                      {"iterations", rec.iterations},
                                      {"converged", rec.converged},
                                      {"stalled", rec.stalled},
                                      {"diagonally_dominant", rec.diagonally_dominant},
                                      {"initial_objective", rec.initial_objective},
                                      {"final_objective", rec.final_objective},
                                      {"warnings", rec.warnings}};
                    attach_s_metrics(mj, rec.s_hat, priors, s_true);
                } else if (name == "naive") {
                    stage = "train_m";
                    ensure_classifier();
                    stage = "plug_in_naive";
                    const auto t = std::chrono::steady_clock::now();
                    const Matrix s = plug_in_collision_matrix(
                        [&](const double* x) { return forward(classifier, x); }, split.train);
                    timing["plug_in_naive_ms"] = elapsed_ms(t);
                    attach_s_metrics(mj, s, priors, s_true);
                } else if (name == "calibrated") {
                    stage = "train_m";
                    ensure_classifier();
                    stage = "calibrate";
                    auto t = std::chrono::steady_clock::now();
                    const CalibratedClassifier cal =
                        fit_temperature(classifier, split.validation, config.ece_bins);
                    timing["calibrate_ms"] = elapsed_ms(t);
                    mj["temperature"] = cal.temperature;
                    mj["validation_ece"] = cal.validation_ece;
                    stage = "plug_in_calibrated";
                    t = std::chrono::steady_clock::now();
                    const Matrix s = plug_in_collision_matrix(
                        [&](const double* x) { return calibrated_posterior(cal, x); },
                        split.train);
                    timing["plug_in_calibrated_ms"] = elapsed_ms(t);
                    attach_s_metrics(mj, s, priors, s_true);
                } else if (name == "mc_dropout") {
                    stage = "train_mc_dropout";
                    ClassifierTrainConfig dc;
                    dc.net = config.m_net;
                    dc.net.dropout = config.mc_dropout_rate;
                    dc.train = config.m_train;
                    dc.train.seed = derive_seed(seed, 6);
                    auto t = std::chrono::steady_clock::now();
                    const FeedForwardNet dropout_net = train_classifier(split.train, dc);
                    timing["train_mc_dropout_ms"] = elapsed_ms(t);
                    stage = "plug_in_mc_dropout";
                    t = std::chrono::steady_clock::now();
                    const std::uint64_t mc_seed = derive_seed(seed, 7);
                    bool degenerate = false;
                    const Matrix s = plug_in_collision_matrix(
                        [&](const double* x) {
                            bool flag = false;
                            auto p = mc_dropout_posterior(dropout_net, x, config.mc_dropout_h,
                                                          mc_seed, &flag);
                            if (flag) degenerate = true;
                            return p;
                        },
                        split.train);
                    timing["plug_in_mc_dropout_ms"] = elapsed_ms(t);
                    mj["degenerate_dropout"] = degenerate;
                    attach_s_metrics(mj, s, priors, s_true);
                }
            } catch (const std::exception& e) {
                mj["error"] = e.what();
                mj["stage"] = stage;
            }
            methods_json[name] = std::move(mj);
        }
        run["methods"] = std::move(methods_json);
    }
};

} // namespace

RunOutput run_scenario(const ScenarioConfig& config) {
    config.validate();
    const bool synthetic = config.mixture.has_value();
    RunOutput out;
    out.report["schema_version"] = 1;
    out.report["name"] = config.name;
    out.report["config"] = scenario_to_json(config);
    out.timings["name"] = config.name;

    Dataset csv_data;
    SimplexVector priors;
    if (synthetic) {
        priors = config.mixture->priors;
        out.report["data"] = {{"source", "synthetic"},
                              {"K", config.mixture->K},
                              {"d", config.mixture->d},
                              {"n_per_class", config.n_per_class}};
    } else {
        const LoadedDataset loaded = load_csv_dataset(config.csv_path, config.label_column);
        csv_data = loaded.data;
        std::vector<double> freq(static_cast<std::size_t>(csv_data.K), 0.0);
        for (const int lab : csv_data.labels) freq[static_cast<std::size_t>(lab)] += 1.0;
        for (double& f : freq) f /= static_cast<double>(csv_data.n);
        priors = SimplexVector(freq);
        out.report["data"] = {{"source", "csv"},
                              {"path", config.csv_path},
                              {"K", csv_data.K},
                              {"d", csv_data.d},
                              {"n", csv_data.n},
                              {"label_names", csv_data.label_names},
                              {"empirical_priors", priors.p},
                              {"scaler",
                               {{"mean", loaded.scaler.mean},
                                {"scale", loaded.scaler.scale},
                                {"zero_variance", loaded.scaler.zero_variance}}},
                              {"warnings", loaded.warnings}};
    }

    Matrix s_true;
    bool have_truth = false;
    if (synthetic) {
        const auto t = std::chrono::steady_clock::now();
        McMatrix truth;
        std::string truth_method;
        if (has_collinear_means(*config.mixture)) {
            truth = true_collision_matrix_quadrature(*config.mixture);
            truth_method = "quadrature";
        } else {
            truth = true_collision_matrix(*config.mixture, config.truth_mc_samples,
                                          derive_seed(config.seeds.front(), 100));
            truth_method = "monte_carlo";
        }
        out.timings["truth_ms"] = elapsed_ms(t);
        s_true = truth.value;
        have_truth = true;
        const auto tb = std::chrono::steady_clock::now();
        const double ber = bayes_error_rate(*config.mixture, config.truth_mc_samples,
                                            derive_seed(config.seeds.front(), 101));
        out.timings["ber_ms"] = elapsed_ms(tb);
        out.report["truth"] = {{"method", truth_method},
                               {"s", matrix_to_json(truth.value)},
                               {"s_std_error", matrix_to_json(truth.std_error)},
                               {"diagonally_dominant", is_strictly_diag_dominant(truth.value)},
                               {"pber", pber_from_s(truth.value, priors)},
                               {"ber", ber},
                               {"mc_samples", config.truth_mc_samples},
                               {"precision_recall", precision_recall_json(truth.value, priors)}};
    }

    // Seeds run concurrently; each fills its own slot, so assembly order (and
    // therefore the report) is independent of scheduling.
    std::vector<nlohmann::json> runs(config.seeds.size());
    std::vector<nlohmann::json> run_timings(config.seeds.size());
    for_each_chunk(config.seeds.size(), [&](std::size_t si) {
        SeedPipeline pipeline{config,
                              synthetic ? nullptr : &csv_data,
                              priors,
                              have_truth ? &s_true : nullptr,
                              config.seeds[si],
                              runs[si],
                              run_timings[si]};
        try {
            pipeline.execute();
        } catch (const std::exception& e) {
            runs[si]["seed"] = config.seeds[si];
            runs[si]["error"] = e.what();
        }
    });
    out.report["runs"] = runs;
    out.timings["runs"] = run_timings;

    // Cross-seed medians per method, skipping failed runs.
    nlohmann::json aggregates;
    for (const std::string& name : config.methods) {
        std::vector<double> max_tvds, avg_tvds, pbers;
        std::size_t succeeded = 0;
        for (const auto& run : runs) {
            if (!run.contains("methods") || !run["methods"].contains(name)) continue;
            const auto& mj = run["methods"][name];
            if (mj.contains("error")) continue;
            ++succeeded;
            if (mj.contains("pber")) pbers.push_back(mj["pber"].get<double>());
            if (mj.contains("tvd_max")) {
                max_tvds.push_back(mj["tvd_max"].get<double>());
                avg_tvds.push_back(mj["tvd_avg"].get<double>());
            }
        }
        nlohmann::json a;
        a["seeds_succeeded"] = succeeded;
        if (!pbers.empty()) {
            a["median_pber"] = median(pbers);
            a["mean_pber"] = mean(pbers);
        }
        if (!max_tvds.empty()) {
            a["median_max_tvd"] = median(max_tvds);
            a["mean_max_tvd"] = mean(max_tvds);
            a["median_avg_tvd"] = median(avg_tvds);
            a["mean_avg_tvd"] = mean(avg_tvds);
        }
        aggregates[name] = std::move(a);
    }
    out.report["aggregates"] = std::move(aggregates);
    return out;
}

std::vector<DivergenceCurveRow> divergence_curve(const std::vector<double>& mu_grid) {
    std::vector<DivergenceCurveRow> rows;
    rows.reserve(mu_grid.size());
    for (const double mu : mu_grid) {
        if (mu < 0.0) throw ConfigError("divergence curve needs mu >= 0");
        const ReferenceDivergences ref = reference_divergences(mu);
        rows.push_back({mu, collision_divergence_two_gaussians(mu, -mu), ref.tvd,
                        ref.hellinger_sq, ref.kl});
    }
    return rows;
}

void write_divergence_curve_csv(const std::vector<DivergenceCurveRow>& rows,
                                const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << "mu,collision,tvd,hellinger_sq,kl\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), "%.17g,%.17g,%.17g,%.17g,%.17g\n", r.mu, r.collision,
                      r.tvd, r.hellinger_sq, r.kl);
        out << buf;
    }
}

} // namespace colmat
