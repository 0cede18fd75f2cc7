#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include <json.hpp>

namespace colmat {

// Dense row-major matrix. Small (K <= ~100) throughout this library.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0) : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m.at(i, i) = 1.0;
        return m;
    }

    bool square() const { return rows == cols; }
};

bool operator==(const Matrix& a, const Matrix& b);

// Probability vector: entries >= 0, sum within 1e-9 of 1 (checked on construction).
struct SimplexVector {
    std::vector<double> p;

    SimplexVector() = default;
    explicit SimplexVector(std::vector<double> values); // validates
    static SimplexVector uniform(std::size_t k);

    std::size_t size() const { return p.size(); }
    double operator[](std::size_t i) const { return p[i]; }
};

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix transpose(const Matrix& a);
Matrix gramian(const Matrix& s); // S * S^T
double frobenius_norm(const Matrix& a);
std::vector<double> matvec(const Matrix& a, const std::vector<double>& x);

// True iff every entry >= -tol and every row sums to 1 within tol.
// Non-square input raises DimensionError.
bool is_row_stochastic(const Matrix& m, double tol);

// True iff |M_ii| > sum_{k != i} |M_ik| for every row. Non-square input
// raises DimensionError.
bool is_strictly_diag_dominant(const Matrix& m);

// Partial-pivot Gaussian elimination. Pivot magnitude < 1e-12 raises
// SingularMatrixError carrying the pivot index.
std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b);

// 1-norm condition estimate via explicit inverse (fine at this scale).
// Singular matrices raise SingularMatrixError.
double condition_estimate_1norm(const Matrix& a);

struct RowTvd {
    double max;
    double avg;
};

// Per-row total variation distance (half L1), max and mean over rows.
// Both inputs must be row-stochastic within 1e-6.
RowTvd row_tvd(const Matrix& s1, const Matrix& s2);

// Clip negatives to zero and renormalize. All entries <= 0 raises
// DegenerateVectorError.
SimplexVector project_to_simplex(const std::vector<double>& v);

// CSV: one row per line, comma-separated, full double precision.
void write_matrix_csv(const Matrix& m, const std::string& path);
Matrix read_matrix_csv(const std::string& path);

// JSON object {rows, cols, entries} with entries row-major.
nlohmann::json matrix_to_json(const Matrix& m);
Matrix matrix_from_json(const nlohmann::json& j);
void write_matrix_json(const Matrix& m, const std::string& path);
Matrix read_matrix_json(const std::string& path);

} // namespace colmat
