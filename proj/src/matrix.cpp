#include "colmat/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "colmat/errors.hpp"

namespace colmat {

namespace {

void require_square(const Matrix& m, const char* op) {
    if (!m.square())
        throw DimensionError(std::string(op) + ": matrix must be square, got " +
                             std::to_string(m.rows) + "x" + std::to_string(m.cols));
}

void require_same_shape(const Matrix& a, const Matrix& b, const char* op) {
    if (a.rows != b.rows || a.cols != b.cols)
        throw DimensionError(std::string(op) + ": shape mismatch " + std::to_string(a.rows) + "x" +
                             std::to_string(a.cols) + " vs " + std::to_string(b.rows) + "x" +
                             std::to_string(b.cols));
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

bool operator==(const Matrix& a, const Matrix& b) {
    return a.rows == b.rows && a.cols == b.cols && a.data == b.data;
}

SimplexVector::SimplexVector(std::vector<double> values) : p(std::move(values)) {
    if (p.empty()) throw DimensionError("simplex vector must be non-empty");
    double sum = 0.0;
    for (double v : p) {
        if (!(v >= 0.0)) throw DegenerateVectorError("simplex vector entry negative or NaN");
        sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw DegenerateVectorError("simplex vector sums to " + std::to_string(sum));
}

SimplexVector SimplexVector::uniform(std::size_t k) {
    SimplexVector s;
    s.p.assign(k, 1.0 / static_cast<double>(k));
    return s;
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols != b.rows) throw DimensionError("matmul: inner dimensions differ");
    Matrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t k = 0; k < a.cols; ++k) {
            double aik = a.at(i, k);
            for (std::size_t j = 0; j < b.cols; ++j) c.at(i, j) += aik * b.at(k, j);
        }
    return c;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols, a.rows);
    for (std::size_t i = 0; i < a.rows; ++i)
        for (std::size_t j = 0; j < a.cols; ++j) t.at(j, i) = a.at(i, j);
    return t;
}

Matrix gramian(const Matrix& s) {
    Matrix g(s.rows, s.rows);
    for (std::size_t i = 0; i < s.rows; ++i)
        for (std::size_t j = 0; j < s.rows; ++j) {
            double acc = 0.0;
            for (std::size_t k = 0; k < s.cols; ++k) acc += s.at(i, k) * s.at(j, k);
            g.at(i, j) = acc;
        }
    return g;
}

double frobenius_norm(const Matrix& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

std::vector<double> matvec(const Matrix& a, const std::vector<double>& x) {
    if (a.cols != x.size()) throw DimensionError("matvec: dimension mismatch");
    std::vector<double> y(a.rows, 0.0);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols; ++j) acc += a.at(i, j) * x[j];
        y[i] = acc;
    }
    return y;
}

bool is_row_stochastic(const Matrix& m, double tol) {
    require_square(m, "is_row_stochastic");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            double v = m.at(i, j);
            if (v < -tol || !std::isfinite(v)) return false;
            sum += v;
        }
        if (std::abs(sum - 1.0) > tol) return false;
    }
    return true;
}

bool is_strictly_diag_dominant(const Matrix& m) {
    require_square(m, "is_strictly_diag_dominant");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double off = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j)
            if (j != i) off += std::abs(m.at(i, j));
        if (!(std::abs(m.at(i, i)) > off)) return false;
    }
    return true;
}

std::vector<double> solve_linear(const Matrix& a, const std::vector<double>& b) {
    require_square(a, "solve_linear");
    std::size_t n = a.rows;
    if (b.size() != n) throw DimensionError("solve_linear: rhs length mismatch");

    Matrix lu = a;
    std::vector<double> x = b;
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;

    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        double best = std::abs(lu.at(col, col));
        for (std::size_t r = col + 1; r < n; ++r) {
            double cand = std::abs(lu.at(r, col));
            if (cand > best) {
                best = cand;
                piv = r;
            }
        }
        if (best < 1e-12)
            throw SingularMatrixError("solve_linear: pivot below 1e-12", col);
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(lu.at(piv, j), lu.at(col, j));
            std::swap(x[piv], x[col]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            double f = lu.at(r, col) / lu.at(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) lu.at(r, j) -= f * lu.at(col, j);
            x[r] -= f * x[col];
        }
    }
    for (std::size_t i = n; i-- > 0;) {
        double acc = x[i];
        for (std::size_t j = i + 1; j < n; ++j) acc -= lu.at(i, j) * x[j];
        x[i] = acc / lu.at(i, i);
    }
    return x;
}

double condition_estimate_1norm(const Matrix& a) {
    require_square(a, "condition_estimate_1norm");
    std::size_t n = a.rows;
    auto col_norm_max = [n](auto&& column_at) {
        double best = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            double s = 0.0;
            for (std::size_t i = 0; i < n; ++i) s += std::abs(column_at(i, j));
            best = std::max(best, s);
        }
        return best;
    };
    double norm_a = col_norm_max([&](std::size_t i, std::size_t j) { return a.at(i, j); });

    Matrix inv(n, n);
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        std::vector<double> col = solve_linear(a, e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) inv.at(i, j) = col[i];
    }
    double norm_inv = col_norm_max([&](std::size_t i, std::size_t j) { return inv.at(i, j); });
    return norm_a * norm_inv;
}

RowTvd row_tvd(const Matrix& s1, const Matrix& s2) {
    require_same_shape(s1, s2, "row_tvd");
    if (!is_row_stochastic(s1, 1e-6) || !is_row_stochastic(s2, 1e-6))
        throw ConfigError("row_tvd: inputs must be row-stochastic within 1e-6");
    double worst = 0.0, total = 0.0;
    for (std::size_t i = 0; i < s1.rows; ++i) {
        double l1 = 0.0;
        for (std::size_t j = 0; j < s1.cols; ++j) l1 += std::abs(s1.at(i, j) - s2.at(i, j));
        double tvd = 0.5 * l1;
        worst = std::max(worst, tvd);
        total += tvd;
    }
    return {worst, total / static_cast<double>(s1.rows)};
}

SimplexVector project_to_simplex(const std::vector<double>& v) {
    if (v.empty()) throw DimensionError("project_to_simplex: empty vector");
    std::vector<double> out(v.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!std::isfinite(v[i])) throw DegenerateVectorError("project_to_simplex: non-finite entry");
        out[i] = v[i] > 0.0 ? v[i] : 0.0;
        sum += out[i];
    }
    if (sum <= 0.0) throw DegenerateVectorError("project_to_simplex: no positive mass");
    for (double& o : out) o /= sum;
    SimplexVector s;
    s.p = std::move(out); // renormalized exactly; skip re-validation round-off concerns
    return s;
}

void write_matrix_csv(const Matrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t j = 0; j < m.cols; ++j) {
            if (j) f << ',';
            f << format_double(m.at(i, j));
        }
        f << '\n';
    }
}

Matrix read_matrix_csv(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::vector<double> row;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) {
            try {
                std::size_t pos = 0;
                row.push_back(std::stod(cell, &pos));
                if (pos != cell.size()) throw std::invalid_argument(cell);
            } catch (const std::exception&) {
                throw ParseError("bad numeric cell '" + cell + "'", lineno);
            }
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw ParseError("ragged row", lineno);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("empty matrix file: " + path);
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return m;
}

nlohmann::json matrix_to_json(const Matrix& m) {
    return {{"rows", m.rows}, {"cols", m.cols}, {"entries", m.data}};
}

Matrix matrix_from_json(const nlohmann::json& j) {
    try {
        Matrix m(j.at("rows").get<std::size_t>(), j.at("cols").get<std::size_t>());
        auto entries = j.at("entries").get<std::vector<double>>();
        if (entries.size() != m.rows * m.cols)
            throw ParseError("matrix json: entries length != rows*cols");
        m.data = std::move(entries);
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("matrix json: ") + e.what());
    }
}

void write_matrix_json(const Matrix& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw ConfigError("cannot open for writing: " + path);
    f << matrix_to_json(m).dump(2) << '\n';
}

Matrix read_matrix_json(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("cannot open: " + path);
    nlohmann::json j;
    try {
        f >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(std::string("json parse: ") + e.what());
    }
    return matrix_from_json(j);
}

} // namespace colmat
