// colmat: collision-matrix and posterior estimation toolkit.
//
// Exit codes: 0 success; 2 configuration or data errors; 3 numerical
// failures (divergent training, singular systems, non-convergence under
// --strict).

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "colmat/baselines.hpp"
#include "colmat/contrastive.hpp"
#include "colmat/dataset.hpp"
#include "colmat/errors.hpp"
#include "colmat/estimator.hpp"
#include "colmat/mixture.hpp"
#include "colmat/posterior.hpp"
#include "colmat/scenario.hpp"

namespace {

namespace fs = std::filesystem;
using colmat::ConfigError;

std::string join_path(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw ConfigError("cannot create output directory " + dir + ": " + ec.message());
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open " + path);
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw colmat::ParseError(std::string("bad json in ") + path + ": " + e.what());
    }
    return j;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw ConfigError("cannot write " + path);
    out << j.dump(2) << '\n';
}

// Mixture source for gen-data / true-s / estimate-g --oracle: either a preset
// name or a mixture JSON file.
colmat::GaussianMixture mixture_from_flags(const std::string& preset,
                                           const std::string& mixture_path) {
    if (!preset.empty() && !mixture_path.empty())
        throw ConfigError("give either --preset or --mixture, not both");
    if (!preset.empty()) {
        const colmat::ScenarioConfig c = colmat::make_preset(preset);
        return *c.mixture;
    }
    if (!mixture_path.empty()) return colmat::read_mixture_json(mixture_path);
    throw ConfigError("a mixture is required (--preset or --mixture)");
}

// Matrices on disk: .csv or a JSON file that is either a bare matrix object
// or wraps one under the given key.
colmat::Matrix read_matrix_flexible(const std::string& path, const std::string& key) {
    if (path.size() >= 4 && path.substr(path.size() - 4) == ".csv")
        return colmat::read_matrix_csv(path);
    const nlohmann::json j = read_json_file(path);
    if (j.contains(key)) return colmat::matrix_from_json(j.at(key));
    return colmat::matrix_from_json(j);
}

std::vector<double> parse_grid(const std::string& spec) {
    // "start:stop:step" inclusive of stop within half a step.
    std::vector<double> grid;
    std::istringstream ss(spec);
    std::string tok;
    std::vector<double> parts;
    while (std::getline(ss, tok, ':')) parts.push_back(std::stod(tok));
    if (parts.size() != 3 || parts[2] <= 0.0)
        throw ConfigError("grid must be start:stop:step with step > 0");
    for (double mu = parts[0]; mu <= parts[1] + 0.5 * parts[2]; mu += parts[2])
        grid.push_back(mu);
    return grid;
}

int run_cli(int argc, char** argv) {
    CLI::App app{"collision-matrix estimation toolkit"};
    app.require_subcommand(1);

    std::uint64_t seed = 1;
    std::string config_path;
    std::string out_dir = ".";
    app.add_option("--seed", seed, "base random seed");
    app.add_option("--config", config_path, "JSON config file");
    app.add_option("--out", out_dir, "output directory");

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "sample a synthetic dataset to CSV");
    gen->fallthrough();
    std::string gen_preset, gen_mixture;
    std::size_t gen_n = 250;
    gen->add_option("--preset", gen_preset, "scenario preset name");
    gen->add_option("--mixture", gen_mixture, "mixture JSON file");
    gen->add_option("--n", gen_n, "samples per class");
    gen->callback([&]() {
        const colmat::GaussianMixture gm = mixture_from_flags(gen_preset, gen_mixture);
        const colmat::Dataset data = colmat::sample(gm, gen_n, seed);
        ensure_dir(out_dir);
        colmat::write_csv_dataset(data, join_path(out_dir, "data.csv"));
        colmat::write_mixture_json(gm, join_path(out_dir, "mixture.json"));
        std::cout << "wrote " << data.n << " rows to " << join_path(out_dir, "data.csv") << '\n';
    });

    // true-s
    auto* trues = app.add_subcommand("true-s", "true collision matrix of a mixture");
    trues->fallthrough();
    std::string ts_preset, ts_mixture, ts_method = "auto";
    std::size_t ts_mc = 1000000;
    std::size_t ts_ber = 0;
    trues->add_option("--preset", ts_preset, "scenario preset name");
    trues->add_option("--mixture", ts_mixture, "mixture JSON file");
    trues->add_option("--method", ts_method, "quadrature | mc | auto")
        ->check(CLI::IsMember({"quadrature", "mc", "auto"}));
    trues->add_option("--mc-samples", ts_mc, "Monte Carlo samples");
    trues->add_option("--ber-samples", ts_ber, "also estimate BER with this many draws");
    trues->callback([&]() {
        const colmat::GaussianMixture gm = mixture_from_flags(ts_preset, ts_mixture);
        std::string method = ts_method;
        if (method == "auto")
            method = colmat::has_collinear_means(gm) ? "quadrature" : "mc";
        const colmat::McMatrix truth = method == "quadrature"
                                           ? colmat::true_collision_matrix_quadrature(gm)
                                           : colmat::true_collision_matrix(gm, ts_mc, seed);
        ensure_dir(out_dir);
        colmat::write_matrix_csv(truth.value, join_path(out_dir, "s_true.csv"));
        nlohmann::json j;
        j["method"] = method;
        j["s"] = colmat::matrix_to_json(truth.value);
        j["std_error"] = colmat::matrix_to_json(truth.std_error);
        j["pber"] = colmat::pber_from_s(truth.value, gm.priors);
        j["diagonally_dominant"] = colmat::is_strictly_diag_dominant(truth.value);
        if (ts_ber > 0) j["ber"] = colmat::bayes_error_rate(gm, ts_ber, seed);
        write_json_file(j, join_path(out_dir, "s_true.json"));
        std::cout << j.dump(2) << '\n';
    });

    // train-v
    auto* trainv = app.add_subcommand("train-v", "train the pairwise contrastive model");
    trainv->fallthrough();
    std::string tv_data;
    colmat::ContrastiveTrainConfig tv_config = colmat::default_contrastive_config();
    bool tv_standardize = false;
    trainv->add_option("--data", tv_data, "training CSV")->required();
    trainv->add_option("--epochs", tv_config.train.epochs, "training epochs");
    trainv->add_option("--batch", tv_config.train.batch_size, "batch size");
    trainv->add_option("--lr", tv_config.train.learning_rate, "learning rate");
    trainv->add_option("--momentum", tv_config.train.momentum, "SGD momentum");
    trainv->add_option("--hidden-layers", tv_config.net.hidden_layers, "hidden layer count");
    trainv->add_option("--width", tv_config.net.hidden_width, "hidden layer width");
    trainv->add_flag("--standardize", tv_standardize, "standardize features before training");
    trainv->callback([&]() {
        colmat::Dataset data = tv_standardize ? colmat::load_csv_dataset(tv_data).data
                                              : colmat::read_csv_dataset(tv_data);
        tv_config.train.seed = seed;
        const colmat::ContrastiveModel model = colmat::train_contrastive(data, tv_config);
        ensure_dir(out_dir);
        colmat::write_contrastive_json(model, join_path(out_dir, "v.json"));
        std::cout << "final pair risk " << model.final_risk << ", model at "
                  << join_path(out_dir, "v.json") << '\n';
    });

    // estimate-g
    auto* estg = app.add_subcommand("estimate-g", "estimate the Gramian from pair scores");
    estg->fallthrough();
    std::string eg_data, eg_v, eg_oracle;
    std::size_t eg_m = 10000;
    estg->add_option("--data", eg_data, "dataset CSV")->required();
    estg->add_option("--v", eg_v, "trained contrastive model JSON");
    estg->add_option("--oracle", eg_oracle, "mixture JSON for oracle similarity");
    estg->add_option("--m-per-cell", eg_m, "pairs per Gramian cell");
    estg->callback([&]() {
        if (eg_v.empty() == eg_oracle.empty())
            throw ConfigError("give exactly one of --v or --oracle");
        const colmat::Dataset data = colmat::read_csv_dataset(eg_data);
        colmat::SimilarityFn v;
        if (!eg_v.empty()) {
            const colmat::ContrastiveModel model = colmat::read_contrastive_json(eg_v);
            if (model.d != data.d) throw ConfigError("model dimension does not match data");
            v = colmat::similarity_fn(model);
        } else {
            v = colmat::oracle_similarity_fn(colmat::read_mixture_json(eg_oracle));
        }
        const colmat::GramianEstimate est = colmat::estimate_gramian(v, data, eg_m, seed);
        ensure_dir(out_dir);
        nlohmann::json j;
        j["value"] = colmat::matrix_to_json(est.g);
        j["std_error"] = colmat::matrix_to_json(est.std_error);
        j["pair_counts"] = colmat::matrix_to_json(est.pair_counts);
        write_json_file(j, join_path(out_dir, "g.json"));
        colmat::write_matrix_csv(est.g, join_path(out_dir, "g.csv"));
        std::cout << "gramian written to " << join_path(out_dir, "g.json") << '\n';
    });

    // recover-s
    auto* recs = app.add_subcommand("recover-s", "recover S from a Gramian estimate");
    recs->fallthrough();
    std::string rs_g;
    colmat::RecoveryConfig rs_config;
    bool rs_no_symmetry = false, rs_strict = false;
    recs->add_option("--g", rs_g, "Gramian file (.csv or .json)")->required();
    recs->add_option("--lambda", rs_config.lambda, "penalty weight");
    recs->add_option("--lr", rs_config.learning_rate, "initial step size");
    recs->add_option("--gamma", rs_config.gamma, "residual target (<0 = 1e-4*K)");
    recs->add_option("--max-iter", rs_config.max_iterations, "iteration budget");
    recs->add_flag("--no-symmetry", rs_no_symmetry, "do not enforce symmetry");
    recs->add_flag("--strict", rs_strict, "exit 3 unless the residual target is reached");
    recs->callback([&]() {
        const colmat::Matrix g = read_matrix_flexible(rs_g, "value");
        rs_config.enforce_symmetry = !rs_no_symmetry;
        const colmat::RecoveryResult rec = colmat::recover_collision_matrix(g, rs_config);
        ensure_dir(out_dir);
        colmat::write_matrix_csv(rec.s_hat, join_path(out_dir, "s_hat.csv"));
        nlohmann::json j;
        j["s_hat"] = colmat::matrix_to_json(rec.s_hat);
        j["residual"] = rec.residual;
        j["iterations"] = rec.iterations;
        j["converged"] = rec.converged;
        j["stalled"] = rec.stalled;
        j["diagonally_dominant"] = rec.diagonally_dominant;
        j["warnings"] = rec.warnings;
        write_json_file(j, join_path(out_dir, "recovery.json"));
        std::cout << "residual " << rec.residual << " after " << rec.iterations
                  << " iterations; converged=" << (rec.converged ? "yes" : "no") << '\n';
        if (rs_strict && !rec.converged)
            throw colmat::NumericalError("recovery did not reach the residual target",
                                         rec.residual);
    });

    // posterior
    auto* post = app.add_subcommand("posterior", "estimate posteriors for query points");
    post->fallthrough();
    std::string po_data, po_v, po_oracle, po_s, po_query, po_point;
    std::size_t po_m = 200;
    post->add_option("--data", po_data, "comparison-point CSV (validation split)")->required();
    post->add_option("--v", po_v, "trained contrastive model JSON");
    post->add_option("--oracle", po_oracle, "mixture JSON for oracle similarity");
    post->add_option("--s", po_s, "collision matrix file (.csv or .json)")->required();
    post->add_option("--m", po_m, "comparison points per class");
    post->add_option("--query", po_query, "CSV of query feature rows");
    post->add_option("--point", po_point, "single query as comma-separated values");
    post->callback([&]() {
        if (po_v.empty() == po_oracle.empty())
            throw ConfigError("give exactly one of --v or --oracle");
        if (po_query.empty() == po_point.empty())
            throw ConfigError("give exactly one of --query or --point");
        const colmat::Dataset data = colmat::read_csv_dataset(po_data);
        colmat::SimilarityFn v;
        if (!po_v.empty())
            v = colmat::similarity_fn(colmat::read_contrastive_json(po_v));
        else
            v = colmat::oracle_similarity_fn(colmat::read_mixture_json(po_oracle));
        const colmat::Matrix s = read_matrix_flexible(po_s, "s_hat");
        const colmat::ComparisonSets sets = colmat::make_comparison_sets(data, po_m, seed);

        if (!po_point.empty()) {
            std::vector<double> x;
            std::istringstream ss(po_point);
            std::string tok;
            while (std::getline(ss, tok, ',')) x.push_back(std::stod(tok));
            if (x.size() != data.d) throw ConfigError("query dimension does not match data");
            const colmat::PosteriorEstimate est = colmat::estimate_posterior(v, s, sets, x.data());
            nlohmann::json j;
            j["y_hat"] = est.y_hat;
            j["raw"] = est.raw;
            j["q_hat"] = est.q_hat;
            j["projection_distance"] = est.projection_distance;
            j["condition_estimate"] = est.condition_estimate;
            j["dominance_warning"] = est.dominance_warning;
            std::cout << j.dump(2) << '\n';
            return;
        }
        // Batch mode: query CSV has pure feature rows (header optional).
        std::ifstream in(po_query);
        if (!in) throw ConfigError("cannot open " + po_query);
        std::vector<double> queries;
        std::size_t n = 0;
        std::string line;
        std::size_t line_no = 0;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty()) continue;
            std::istringstream ls(line);
            std::string cell;
            std::vector<double> row;
            bool numeric = true;
            while (std::getline(ls, cell, ',')) {
                try {
                    std::size_t pos = 0;
                    row.push_back(std::stod(cell, &pos));
                    if (pos != cell.size()) numeric = false;
                } catch (const std::exception&) {
                    numeric = false;
                }
            }
            if (!numeric) {
                if (line_no == 1) continue; // header
                throw colmat::ParseError("non-numeric query row", line_no);
            }
            if (row.size() != data.d)
                throw colmat::ParseError("query row has wrong dimension", line_no);
            queries.insert(queries.end(), row.begin(), row.end());
            ++n;
        }
        const auto estimates = colmat::estimate_posterior_batch(v, s, sets, queries, n, data.d);
        ensure_dir(out_dir);
        const std::string out_path = join_path(out_dir, "posterior.csv");
        std::ofstream out(out_path);
        if (!out) throw ConfigError("cannot write " + out_path);
        out << "row";
        for (int k = 0; k < data.K; ++k) out << ",y_" << data.label_names[static_cast<std::size_t>(k)];
        out << ",projection_distance,dominance_warning\n";
        for (std::size_t i = 0; i < estimates.size(); ++i) {
            out << i;
            char buf[32];
            for (const double y : estimates[i].y_hat) {
                std::snprintf(buf, sizeof(buf), ",%.17g", y);
                out << buf;
            }
            std::snprintf(buf, sizeof(buf), ",%.17g", estimates[i].projection_distance);
            out << buf << ',' << (estimates[i].dominance_warning ? 1 : 0) << '\n';
        }
        std::cout << "posteriors for " << n << " rows written to " << out_path << '\n';
    });

    // run-scenario
    auto* runsc = app.add_subcommand("run-scenario", "run a full scenario pipeline");
    runsc->fallthrough();
    std::string sc_preset;
    std::string sc_seeds, sc_methods;
    std::size_t sc_n = 0;
    runsc->add_option("--preset", sc_preset, "scenario preset name");
    runsc->add_option("--seeds", sc_seeds, "comma-separated seed list override");
    runsc->add_option("--methods", sc_methods, "comma-separated method list override");
    runsc->add_option("--n", sc_n, "samples per class override");
    runsc->callback([&]() {
        if (sc_preset.empty() == config_path.empty())
            throw ConfigError("give exactly one of --preset or --config");
        colmat::ScenarioConfig config = sc_preset.empty()
                                            ? colmat::scenario_from_json(read_json_file(config_path))
                                            : colmat::make_preset(sc_preset);
        if (!sc_seeds.empty()) {
            config.seeds.clear();
            std::istringstream ss(sc_seeds);
            std::string tok;
            while (std::getline(ss, tok, ','))
                config.seeds.push_back(static_cast<std::uint64_t>(std::stoull(tok)));
        }
        if (!sc_methods.empty()) {
            config.methods.clear();
            std::istringstream ss(sc_methods);
            std::string tok;
            while (std::getline(ss, tok, ',')) config.methods.push_back(tok);
        }
        if (sc_n > 0) config.n_per_class = sc_n;
        const colmat::RunOutput output = colmat::run_scenario(config);
        ensure_dir(out_dir);
        write_json_file(output.report, join_path(out_dir, "report.json"));
        write_json_file(output.timings, join_path(out_dir, "timings.json"));
        std::cout << "report written to " << join_path(out_dir, "report.json") << '\n';
        for (const auto& [method, agg] : output.report["aggregates"].items()) {
            std::cout << "  " << method;
            if (agg.contains("median_max_tvd"))
                std::cout << ": median max row TVD " << agg["median_max_tvd"].get<double>();
            if (agg.contains("median_pber"))
                std::cout << ", median PBER " << agg["median_pber"].get<double>();
            std::cout << '\n';
        }
    });

    // divergence-curve
    auto* div = app.add_subcommand("divergence-curve", "collision divergence vs references");
    div->fallthrough();
    std::string dv_grid = "0:3:0.25";
    div->add_option("--grid", dv_grid, "mu grid as start:stop:step");
    div->callback([&]() {
        const auto rows = colmat::divergence_curve(parse_grid(dv_grid));
        ensure_dir(out_dir);
        const std::string path = join_path(out_dir, "divergence_curve.csv");
        colmat::write_divergence_curve_csv(rows, path);
        std::cout << "curve with " << rows.size() << " rows written to " << path << '\n';
    });

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    return 0;
}

} // namespace

namespace {

bool is_numerical_failure(const colmat::Error& e) {
    return dynamic_cast<const colmat::NumericalError*>(&e) != nullptr ||
           dynamic_cast<const colmat::SingularMatrixError*>(&e) != nullptr ||
           dynamic_cast<const colmat::TrainingDivergenceError*>(&e) != nullptr ||
           dynamic_cast<const colmat::DegenerateVectorError*>(&e) != nullptr ||
           dynamic_cast<const colmat::StateError*>(&e) != nullptr;
}

} // namespace

int main(int argc, char** argv) {
    try {
        return run_cli(argc, argv);
    } catch (const colmat::Error& e) {
        if (is_numerical_failure(e)) {
            std::cerr << "numerical failure: " << e.what() << '\n';
            return 3;
        }
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
