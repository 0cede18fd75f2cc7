#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace colmat {

// Labeled feature set. Labels are contiguous 0-based class indices internally;
// label_names maps each index back to the external label text (class k of a
// generated dataset is named "k+1", matching the CSV label column).
struct Dataset {
    std::size_t n = 0;
    std::size_t d = 0;
    int K = 0;
    std::vector<double> features; // n*d row-major
    std::vector<int> labels;      // size n, values in [0, K)
    std::vector<std::string> label_names; // size K

    const double* row(std::size_t i) const { return features.data() + i * d; }
    double* row(std::size_t i) { return features.data() + i * d; }
};

std::vector<std::vector<std::size_t>> indices_by_class(const Dataset& data);

// CSV with header f_1..f_d,label; features at full double precision so a
// write/read round-trip reproduces the dataset exactly.
void write_csv_dataset(const Dataset& data, const std::string& path);

// Raw read: no scaling. Label values become class indices; when every label
// parses as an integer classes are ordered numerically, otherwise by first
// appearance. Files with a single class are rejected.
Dataset read_csv_dataset(const std::string& path, const std::string& label_column = "label");

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Per-class shuffle with a class-derived seed, then val/test take their
// floor shares and train keeps the rest. Label space is preserved in all parts.
SplitResult stratified_split(const Dataset& data, double train_frac, double val_frac,
                             std::uint64_t seed);

struct Scaler {
    std::vector<double> mean;
    std::vector<double> scale;            // 1 for zero-variance columns
    std::vector<std::size_t> zero_variance; // columns with no spread
};

// In-place per-column standardization to zero mean, unit variance.
Scaler standardize_features(Dataset& data);

struct LoadedDataset {
    Dataset data;
    Scaler scaler;
    std::vector<std::string> warnings;
};

// Ingestion path for external CSVs: raw read followed by standardization,
// with the scaler and any zero-variance warnings reported.
LoadedDataset load_csv_dataset(const std::string& path, const std::string& label_column = "label");

} // namespace colmat
