#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <string>
#include <vector>

#include "colmat/errors.hpp"
#include "colmat/matrix.hpp"
#include "colmat/rng.hpp"

using namespace colmat;

namespace {

Matrix from_rows(const std::vector<std::vector<double>>& rows) {
    Matrix m(rows.size(), rows.empty() ? 0 : rows[0].size());
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t j = 0; j < m.cols; ++j) m.at(i, j) = rows[i][j];
    return m;
}

std::string temp_path(const std::string& name) {
    return (std::filesystem::temp_directory_path() / name).string();
}

// Random symmetric positive definite matrix: A^T A + n I.
Matrix random_spd(std::size_t n, Rng& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Matrix a(n, n);
    for (double& v : a.data) v = u(rng);
    Matrix spd = matmul(transpose(a), a);
    for (std::size_t i = 0; i < n; ++i) spd.at(i, i) += static_cast<double>(n);
    return spd;
}

} // namespace

TEST_CASE("row-stochastic predicate") {
    CHECK(is_row_stochastic(Matrix::identity(3), 1e-9));
    CHECK(is_row_stochastic(from_rows({{0.6, 0.4}, {0.5, 0.5}}), 1e-9));
    CHECK_FALSE(is_row_stochastic(from_rows({{0.6, 0.5}, {0.5, 0.5}}), 1e-9));
    CHECK_FALSE(is_row_stochastic(from_rows({{1.1, -0.1}, {0.5, 0.5}}), 1e-9));
    // small negatives inside the tolerance are absorbed
    CHECK(is_row_stochastic(from_rows({{1.0 + 5e-10, -5e-10}, {0.5, 0.5}}), 1e-9));
    CHECK_THROWS_AS(is_row_stochastic(Matrix(2, 3, 1.0 / 3.0), 1e-9), DimensionError);
}

TEST_CASE("strict diagonal dominance predicate") {
    CHECK(is_strictly_diag_dominant(Matrix::identity(4)));
    CHECK_FALSE(is_strictly_diag_dominant(from_rows({{0.5, 0.5}, {0.5, 0.5}})));
    CHECK(is_strictly_diag_dominant(from_rows({{0.6, 0.4}, {0.4, 0.6}})));
    CHECK_THROWS_AS(is_strictly_diag_dominant(Matrix(3, 2, 1.0)), DimensionError);
}

TEST_CASE("linear solve on pinned systems") {
    auto x = solve_linear(Matrix::identity(2), {0.2, 0.8});
    CHECK(x[0] == doctest::Approx(0.2).epsilon(1e-15));
    CHECK(x[1] == doctest::Approx(0.8).epsilon(1e-15));

    auto y = solve_linear(from_rows({{2, 0}, {0, 4}}), {2, 8});
    CHECK(y[0] == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(y[1] == doctest::Approx(2.0).epsilon(1e-15));
}

TEST_CASE("linear solve residual on random well-conditioned systems") {
    Rng rng = make_rng(derive_seed(7, 0));
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int rep = 0; rep < 20; ++rep) {
        Matrix a = random_spd(5, rng);
        std::vector<double> b(5);
        for (double& v : b) v = u(rng);
        auto x = solve_linear(a, b);
        auto ax = matvec(a, x);
        double binf = 0.0, rinf = 0.0;
        for (std::size_t i = 0; i < b.size(); ++i) {
            binf = std::max(binf, std::abs(b[i]));
            rinf = std::max(rinf, std::abs(ax[i] - b[i]));
        }
        CHECK(rinf <= 1e-8 * std::max(binf, 1.0));
    }
}

TEST_CASE("linear solve rejects singular systems with the pivot index") {
    Matrix singular = from_rows({{1, 2}, {2, 4}});
    CHECK_THROWS_AS(solve_linear(singular, {1, 2}), SingularMatrixError);
    try {
        solve_linear(singular, {1, 2});
    } catch (const SingularMatrixError& e) {
        CHECK(e.pivot_index() == 1);
    }
    CHECK_THROWS_AS(solve_linear(Matrix::identity(3), std::vector<double>{1, 2}), DimensionError);
}

TEST_CASE("condition estimate") {
    CHECK(condition_estimate_1norm(Matrix::identity(5)) == doctest::Approx(1.0));
    // diag(1, 1e-6) has 1-norm condition 1e6
    CHECK(condition_estimate_1norm(from_rows({{1, 0}, {0, 1e-6}})) == doctest::Approx(1e6));
    CHECK_THROWS_AS(condition_estimate_1norm(from_rows({{1, 2}, {2, 4}})), SingularMatrixError);
}

TEST_CASE("row TVD on pinned pairs") {
    Matrix s = from_rows({{0.8, 0.2}, {0.3, 0.7}});
    RowTvd same = row_tvd(s, s);
    CHECK(same.max == 0.0);
    CHECK(same.avg == 0.0);

    RowTvd opposed = row_tvd(from_rows({{1, 0}, {0, 1}}), from_rows({{0, 1}, {1, 0}}));
    CHECK(opposed.max == doctest::Approx(1.0));
    CHECK(opposed.avg == doctest::Approx(1.0));

    RowTvd mixed = row_tvd(s, from_rows({{0.6, 0.4}, {0.3, 0.7}}));
    CHECK(mixed.max == doctest::Approx(0.2));
    CHECK(mixed.avg == doctest::Approx(0.1));
}

TEST_CASE("row TVD is symmetric and bounded") {
    Rng rng = make_rng(derive_seed(11, 0));
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int rep = 0; rep < 10; ++rep) {
        Matrix a(3, 3), b(3, 3);
        for (Matrix* m : {&a, &b})
            for (std::size_t i = 0; i < 3; ++i) {
                double sum = 0.0;
                for (std::size_t j = 0; j < 3; ++j) {
                    m->at(i, j) = u(rng) + 1e-3;
                    sum += m->at(i, j);
                }
                for (std::size_t j = 0; j < 3; ++j) m->at(i, j) /= sum;
            }
        RowTvd ab = row_tvd(a, b);
        RowTvd ba = row_tvd(b, a);
        CHECK(ab.max == ba.max);
        CHECK(ab.avg == ba.avg);
        CHECK(ab.max >= 0.0);
        CHECK(ab.max <= 1.0);
        CHECK(ab.avg <= ab.max);
    }
    CHECK_THROWS_AS(row_tvd(Matrix::identity(2), Matrix::identity(3)), DimensionError);
    CHECK_THROWS_AS(row_tvd(from_rows({{2.0, -1.0}, {0.5, 0.5}}), Matrix::identity(2)),
                    ConfigError);
}

TEST_CASE("simplex projection") {
    auto a = project_to_simplex({0.3, 0.7});
    CHECK(a[0] == doctest::Approx(0.3).epsilon(1e-15));
    CHECK(a[1] == doctest::Approx(0.7).epsilon(1e-15));

    auto b = project_to_simplex({0.5, -0.1, 0.6});
    CHECK(b[0] == doctest::Approx(5.0 / 11.0));
    CHECK(b[1] == 0.0);
    CHECK(b[2] == doctest::Approx(6.0 / 11.0));

    auto c = project_to_simplex({2.0, 2.0});
    CHECK(c[0] == doctest::Approx(0.5));
    CHECK(c[1] == doctest::Approx(0.5));

    CHECK_THROWS_AS(project_to_simplex({-1.0, 0.0, -0.5}), DegenerateVectorError);
}

TEST_CASE("simplex projection is idempotent and always valid") {
    Rng rng = make_rng(derive_seed(13, 0));
    std::uniform_real_distribution<double> u(-0.5, 1.5);
    for (int rep = 0; rep < 50; ++rep) {
        std::vector<double> v(4);
        bool positive = false;
        for (double& x : v) {
            x = u(rng);
            positive = positive || x > 0.0;
        }
        if (!positive) continue;
        SimplexVector p = project_to_simplex(v);
        double sum = 0.0;
        for (std::size_t i = 0; i < p.size(); ++i) {
            CHECK(p[i] >= 0.0);
            sum += p[i];
        }
        CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
        SimplexVector again = project_to_simplex(p.p);
        for (std::size_t i = 0; i < p.size(); ++i)
            CHECK(again[i] == doctest::Approx(p[i]).epsilon(1e-12));
    }
}

TEST_CASE("simplex vector validates on construction") {
    CHECK_NOTHROW(SimplexVector({0.25, 0.75}));
    CHECK_THROWS_AS(SimplexVector({0.5, 0.6}), DegenerateVectorError);
    CHECK_THROWS_AS(SimplexVector({1.5, -0.5}), DegenerateVectorError);
    CHECK_THROWS_AS(SimplexVector(std::vector<double>{}), DimensionError);
    SimplexVector u = SimplexVector::uniform(4);
    CHECK(u[2] == doctest::Approx(0.25));
}

TEST_CASE("matmul transpose gramian basics") {
    Matrix a = from_rows({{1, 2}, {3, 4}});
    Matrix b = from_rows({{0, 1}, {1, 0}});
    Matrix c = matmul(a, b);
    CHECK(c.at(0, 0) == 2.0);
    CHECK(c.at(0, 1) == 1.0);
    CHECK(c.at(1, 0) == 4.0);
    CHECK(c.at(1, 1) == 3.0);
    CHECK_THROWS_AS(matmul(a, Matrix(3, 2, 1.0)), DimensionError);

    Matrix t = transpose(a);
    CHECK(t.at(0, 1) == 3.0);
    CHECK(t.at(1, 0) == 2.0);

    Matrix g = gramian(a);
    Matrix ref = matmul(a, transpose(a));
    CHECK(g == ref);
    for (std::size_t i = 0; i < g.rows; ++i)
        for (std::size_t j = 0; j < g.cols; ++j) CHECK(g.at(i, j) == g.at(j, i));

    CHECK(frobenius_norm(from_rows({{3, 0}, {0, 4}})) == doctest::Approx(5.0));
}

TEST_CASE("matrix CSV round-trip preserves values exactly") {
    Matrix m = from_rows({{0.1, 1.0 / 3.0, -2.5e-17}, {1e300, 7.0, 0.0}});
    std::string path = temp_path("colmat_test_matrix.csv");
    write_matrix_csv(m, path);
    Matrix back = read_matrix_csv(path);
    CHECK(back == m);
    std::filesystem::remove(path);
}

TEST_CASE("matrix JSON round-trip and shape validation") {
    Matrix m = from_rows({{0.25, 0.75}, {0.5, 0.5}});
    nlohmann::json j = matrix_to_json(m);
    CHECK(j["rows"] == 2);
    CHECK(j["cols"] == 2);
    Matrix back = matrix_from_json(j);
    CHECK(back == m);

    nlohmann::json bad = j;
    bad["entries"] = std::vector<double>{1.0, 2.0, 3.0};
    CHECK_THROWS_AS(matrix_from_json(bad), ParseError);

    std::string path = temp_path("colmat_test_matrix.json");
    write_matrix_json(m, path);
    CHECK(read_matrix_json(path) == m);
    std::filesystem::remove(path);
}

TEST_CASE("matrix CSV read rejects ragged rows with a line number") {
    std::string path = temp_path("colmat_test_ragged.csv");
    {
        std::ofstream out(path);
        out << "1,2\n3\n";
    }
    try {
        read_matrix_csv(path);
        CHECK(false);
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::filesystem::remove(path);
}
