#include "colmat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>

#include "colmat/errors.hpp"
#include "colmat/rng.hpp"

namespace colmat {

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& data) {
    std::vector<std::vector<std::size_t>> by_class(data.K);
    for (std::size_t i = 0; i < data.n; ++i) by_class[data.labels[i]].push_back(i);
    return by_class;
}

void write_csv_dataset(const Dataset& data, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    for (std::size_t j = 0; j < data.d; ++j) f << "f_" << (j + 1) << ',';
    f << "label\n";
    char buf[40];
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* r = data.row(i);
        for (std::size_t j = 0; j < data.d; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", r[j]);
            f << buf << ',';
        }
        f << data.label_names[data.labels[i]] << '\n';
    }
}

Dataset read_csv_dataset(const std::string& path, const std::string& label_column) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::string line;
    if (!std::getline(f, line)) throw ParseError("empty file: " + path);

    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::size_t label_idx = header.size();
    for (std::size_t j = 0; j < header.size(); ++j)
        if (header[j] == label_column) label_idx = j;
    if (label_idx == header.size())
        throw ParseError("label column '" + label_column + "' not in header", 1);
    std::size_t d = header.size() - 1;
    if (d == 0) throw ParseError("no feature columns", 1);

    std::vector<double> features;
    std::vector<std::string> raw_labels;
    std::string cell;
    std::size_t lineno = 1;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            if (col == label_idx) {
                raw_labels.push_back(cell);
            } else {
                try {
                    std::size_t pos = 0;
                    features.push_back(std::stod(cell, &pos));
                    if (pos != cell.size()) throw std::invalid_argument(cell);
                } catch (const std::exception&) {
                    throw ParseError("bad numeric cell '" + cell + "'", lineno);
                }
            }
            ++col;
        }
        if (col != header.size()) throw ParseError("wrong column count", lineno);
    }
    if (raw_labels.empty()) throw ParseError("no data rows in " + path);

    // Class order: numeric when every label parses as an integer, else first
    // appearance. Numeric order makes generated datasets round-trip exactly.
    std::vector<std::string> names;
    bool all_int = true;
    std::vector<long long> as_int(raw_labels.size());
    for (std::size_t i = 0; i < raw_labels.size() && all_int; ++i) {
        try {
            std::size_t pos = 0;
            as_int[i] = std::stoll(raw_labels[i], &pos);
            if (pos != raw_labels[i].size()) all_int = false;
        } catch (const std::exception&) {
            all_int = false;
        }
    }
    std::map<std::string, int> index_of;
    if (all_int) {
        std::map<long long, std::string> ordered;
        for (std::size_t i = 0; i < raw_labels.size(); ++i) ordered[as_int[i]] = raw_labels[i];
        for (auto& [num, name] : ordered) {
            index_of[name] = static_cast<int>(names.size());
            names.push_back(name);
        }
    } else {
        for (const auto& name : raw_labels)
            if (index_of.emplace(name, static_cast<int>(names.size())).second)
                names.push_back(name);
    }
    if (names.size() < 2) throw ParseError("dataset has a single class: " + path);

    Dataset data;
    data.n = raw_labels.size();
    data.d = d;
    data.K = static_cast<int>(names.size());
    data.features = std::move(features);
    data.label_names = std::move(names);
    data.labels.resize(data.n);
    for (std::size_t i = 0; i < data.n; ++i) data.labels[i] = index_of[raw_labels[i]];
    return data;
}

namespace {

Dataset subset(const Dataset& data, const std::vector<std::size_t>& idx) {
    Dataset out;
    out.d = data.d;
    out.K = data.K;
    out.label_names = data.label_names;
    out.n = idx.size();
    out.features.resize(out.n * out.d);
    out.labels.resize(out.n);
    for (std::size_t i = 0; i < idx.size(); ++i) {
        std::copy_n(data.row(idx[i]), data.d, out.features.begin() + i * out.d);
        out.labels[i] = data.labels[idx[i]];
    }
    return out;
}

} // namespace

SplitResult stratified_split(const Dataset& data, double train_frac, double val_frac,
                             std::uint64_t seed) {
    if (train_frac <= 0 || val_frac < 0 || train_frac + val_frac > 1.0)
        throw ConfigError("stratified_split: fractions out of range");
    auto by_class = indices_by_class(data);
    std::vector<std::size_t> tr, va, te;
    for (int k = 0; k < data.K; ++k) {
        auto& members = by_class[k];
        Rng rng = make_rng(derive_seed(seed, static_cast<std::uint64_t>(k)));
        std::shuffle(members.begin(), members.end(), rng);
        // Floored share, absorbing the ulp crumbs of fractions like 1.0 - 0.8 - 0.1
        // so an 80/10/10 split of 60 rows really gives 48/6/6.
        auto share = [](std::size_t n, double frac) {
            double exact = static_cast<double>(n) * frac;
            double nearest = std::round(exact);
            if (std::abs(exact - nearest) < 1e-9) return static_cast<std::size_t>(nearest);
            return static_cast<std::size_t>(std::floor(exact));
        };
        std::size_t n_va = share(members.size(), val_frac);
        std::size_t n_te = share(members.size(), 1.0 - train_frac - val_frac);
        std::size_t n_tr = members.size() - n_va - n_te;
        for (std::size_t i = 0; i < members.size(); ++i) {
            if (i < n_tr)
                tr.push_back(members[i]);
            else if (i < n_tr + n_va)
                va.push_back(members[i]);
            else
                te.push_back(members[i]);
        }
    }
    std::sort(tr.begin(), tr.end());
    std::sort(va.begin(), va.end());
    std::sort(te.begin(), te.end());
    return {subset(data, tr), subset(data, va), subset(data, te)};
}

Scaler standardize_features(Dataset& data) {
    Scaler sc;
    sc.mean.assign(data.d, 0.0);
    sc.scale.assign(data.d, 1.0);
    if (data.n == 0) return sc;
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* r = data.row(i);
        for (std::size_t j = 0; j < data.d; ++j) sc.mean[j] += r[j];
    }
    for (double& m : sc.mean) m /= static_cast<double>(data.n);
    std::vector<double> var(data.d, 0.0);
    for (std::size_t i = 0; i < data.n; ++i) {
        const double* r = data.row(i);
        for (std::size_t j = 0; j < data.d; ++j) {
            double c = r[j] - sc.mean[j];
            var[j] += c * c;
        }
    }
    for (std::size_t j = 0; j < data.d; ++j) {
        double sd = std::sqrt(var[j] / static_cast<double>(data.n));
        if (sd > 0.0)
            sc.scale[j] = sd;
        else
            sc.zero_variance.push_back(j); // scale stays 1
    }
    for (std::size_t i = 0; i < data.n; ++i) {
        double* r = data.row(i);
        for (std::size_t j = 0; j < data.d; ++j) r[j] = (r[j] - sc.mean[j]) / sc.scale[j];
    }
    return sc;
}

LoadedDataset load_csv_dataset(const std::string& path, const std::string& label_column) {
    LoadedDataset out;
    out.data = read_csv_dataset(path, label_column);
    out.scaler = standardize_features(out.data);
    for (std::size_t col : out.scaler.zero_variance)
        out.warnings.push_back("feature column " + std::to_string(col + 1) +
                               " has zero variance; kept with scale 1");
    return out;
}

} // namespace colmat
