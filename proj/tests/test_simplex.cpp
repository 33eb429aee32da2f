#include <doctest.h>

#include <random>

#include "afa/error.hpp"
#include "afa/simplex.hpp"
#include "simplex_oracle.hpp"

using namespace afa;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("oracle reproduces the worked example") {
    const Vector u = testing::brute_force_simplex_projection(vec({0.4, 0.2, 0.1}));
    CHECK(u[0] == doctest::Approx(0.5));
    CHECK(u[1] == doctest::Approx(0.3));
    CHECK(u[2] == doctest::Approx(0.2));
}

TEST_CASE("project_simplex examples") {
    CHECK(project_simplex(vec({0.5, 0.5})) == vec({0.5, 0.5}));
    CHECK(project_simplex(vec({2.0, 0.0})) == vec({1.0, 0.0}));
    const Vector u = project_simplex(vec({0.4, 0.2, 0.1}));
    CHECK((u - vec({0.5, 0.3, 0.2})).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("project_simplex rejects bad input") {
    CHECK_THROWS_AS(project_simplex(Vector()), InputError);
    CHECK_THROWS_AS(project_simplex(vec({0.1, std::nan("")})), InputError);
    CHECK_THROWS_AS(project_simplex(vec({std::numeric_limits<double>::infinity()})), InputError);
}

TEST_CASE("project_simplex agrees with the brute-force oracle, is idempotent and optimal") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> value(-3.0, 3.0);
    std::uniform_int_distribution<int> dim(1, 6);
    for (int trial = 0; trial < 2000; ++trial) {
        Vector v(dim(rng));
        const double scale = trial % 4 == 0 ? 100.0 : 1.0;  // large entries stress cancellation
        for (auto& x : v) x = scale * value(rng);
        const Vector u = project_simplex(v);
        const Vector oracle = testing::brute_force_simplex_projection(v);
        CHECK((u - oracle).cwiseAbs().maxCoeff() <= 1e-10);
        CHECK(std::abs(u.sum() - 1.0) <= 1e-12);
        CHECK(project_simplex(u) == u);
    }
}

TEST_CASE("projection is no farther than any simplex point") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> value(-2.0, 2.0);
    std::exponential_distribution<double> expo(1.0);
    Vector v(5);
    for (auto& x : v) x = value(rng);
    const Vector p = project_simplex(v);
    for (int i = 0; i < 1000; ++i) {
        Vector s(5);
        for (auto& x : s) x = expo(rng);
        s /= s.sum();
        CHECK((v - p).norm() <= (v - s).norm() + 1e-12);
    }
}

TEST_CASE("project_rows and clamp_nonneg") {
    Matrix id = Matrix::Identity(2, 2);
    CHECK(project_rows(id) == id);

    Matrix m(2, 2);
    m << 2, 0, -1, -1;
    Matrix expected(2, 2);
    expected << 1, 0, 0.5, 0.5;
    CHECK((project_rows(m) - expected).cwiseAbs().maxCoeff() <= 1e-12);

    Matrix row(1, 3);
    row << 0.4, 0.2, 0.1;
    const Matrix pr = project_rows(row);
    CHECK(pr(0, 0) == doctest::Approx(0.5));
    CHECK(pr(0, 1) == doctest::Approx(0.3));
    CHECK(pr(0, 2) == doctest::Approx(0.2));
    CHECK(is_row_stochastic(pr));

    Matrix bad(2, 1);
    bad << 1.0, std::nan("");
    try {
        project_rows(bad);
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("row 1") != std::string::npos);
    }

    Matrix c(1, 2);
    c << 0.2, -0.1;
    Matrix cexp(1, 2);
    cexp << 0.2, 0.0;
    CHECK(clamp_nonneg(c) == cexp);
    CHECK(clamp_nonneg(expected) == expected);
    Matrix neg(1, 1);
    neg << -5;
    CHECK(clamp_nonneg(neg)(0, 0) == 0.0);
}
