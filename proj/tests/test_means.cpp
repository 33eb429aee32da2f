#include <doctest.h>

#include <cmath>
#include <random>

#include "afa/error.hpp"
#include "afa/means.hpp"

using namespace afa;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

}  // namespace

TEST_CASE("apply_f examples") {
    CHECK(apply_f(MeanKind::arithmetic(), vec({0.3, 0.7})) == vec({0.3, 0.7}));
    CHECK(apply_f(MeanKind::geometric(0.001), vec({0.0}))[0] == doctest::Approx(std::log(0.001)));
    CHECK(apply_f(MeanKind::geometric(0.001), vec({0.0}))[0] == doctest::Approx(-6.90776).epsilon(1e-6));
    CHECK(apply_f(MeanKind::harmonic(0.1), vec({1.0}))[0] == doctest::Approx(1.0 / 1.1 - 0.1));
    CHECK(apply_f(MeanKind::harmonic(0.1), vec({1.0}))[0] == doctest::Approx(0.80909).epsilon(1e-5));
    CHECK(apply_f(MeanKind::power(2.0), vec({0.5, 3.0})) == vec({0.25, 9.0}));
}

TEST_CASE("apply_f domain errors name the index") {
    try {
        apply_f(MeanKind::geometric(0.01), vec({0.2, -0.5}));
        FAIL("expected an error");
    } catch (const InputError& e) {
        CHECK(std::string(e.what()).find("index 1") != std::string::npos);
    }
    CHECK_THROWS_AS(apply_f(MeanKind::power(2.0), vec({-1e-3})), InputError);
    // Harmonic is defined on the whole line.
    CHECK_NOTHROW(apply_f(MeanKind::harmonic(0.1), vec({-3.0, 20.0})));
    // Drift below the slack is clamped.
    CHECK(apply_f(MeanKind::geometric(0.01), vec({-1e-17}))[0] == std::log(0.01));
}

TEST_CASE("apply_f_inv examples") {
    CHECK(apply_f_inv(MeanKind::arithmetic(), vec({0.4}))[0] == 0.4);
    CHECK(apply_f_inv(MeanKind::geometric(0.001), vec({0.0}))[0] == doctest::Approx(0.999));
    const double h = 1.0 / 1.1 - 0.1;
    CHECK(apply_f_inv(MeanKind::harmonic(0.1), vec({h}))[0] == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("apply_f_inv domain handling") {
    CHECK_THROWS_AS(apply_f_inv(MeanKind::geometric(0.01), vec({std::log(0.01) - 1e-3})), InputError);
    CHECK_THROWS_AS(apply_f_inv(MeanKind::harmonic(0.1), vec({10.0})), InputError);
    CHECK_THROWS_AS(apply_f_inv(MeanKind::power(2.0), vec({-0.1})), InputError);
    // Just past the bound: clamped.
    CHECK(apply_f_inv(MeanKind::geometric(0.01), vec({std::log(0.01) - 1e-12}))[0] ==
          doctest::Approx(0.0).epsilon(1e-12));
    CHECK(apply_f_inv(MeanKind::harmonic(0.1), vec({9.9 + 1e-12}))[0] == 0.0);
    CHECK(apply_f_inv(MeanKind::power(2.0), vec({-1e-12}))[0] == 0.0);
}

TEST_CASE("round trip f_inv(f(x)) = x") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const std::vector<MeanKind> kinds = {MeanKind::arithmetic(), MeanKind::geometric(1e-3),
                                         MeanKind::harmonic(1e-3), MeanKind::power(2.0),
                                         MeanKind::power(0.5)};
    for (const auto& kind : kinds) {
        Vector x(50);
        for (auto& v : x) v = u(rng) * 5.0;
        const Vector back = apply_f_inv(kind, apply_f(kind, x));
        for (Eigen::Index i = 0; i < x.size(); ++i)
            CHECK(std::abs(back[i] - x[i]) <= 1e-10 * std::max(1.0, std::abs(x[i])));
    }
}

TEST_CASE("leaky hyperbolic is a continuous decreasing involution") {
    for (double eps : {1e-1, 1e-3, 1e-6}) {
        const double upper = 1.0 / eps - eps;
        // Joints: evaluate both branch formulas at the joint.
        const double mid_at_0 = 1.0 / (0.0 + eps) - eps;
        const double left_at_0 = -0.0 / (eps * eps) + 1.0 / eps - eps;
        CHECK(std::abs(mid_at_0 - left_at_0) <= 1e-12);
        const double mid_at_upper = 1.0 / (upper + eps) - eps;
        const double right_at_upper = -eps * eps * (upper - 1.0 / eps + eps);
        CHECK(std::abs(mid_at_upper - right_at_upper) <= 1e-12 * std::max(1.0, upper));

        double prev = leaky_hyperbolic(-10.0, eps);
        for (int i = 1; i <= 2000; ++i) {
            const double x = -10.0 + 20.0 * i / 2000.0;
            const double h = leaky_hyperbolic(x, eps);
            CHECK(h < prev);
            prev = h;
            const double back = leaky_hyperbolic(h, eps);
            CHECK(std::abs(back - x) <= 1e-10 * std::max(1.0, std::abs(x)));
        }
    }
}

TEST_CASE("geometric and power f are increasing") {
    const auto g = MeanKind::geometric(1e-3);
    const auto p = MeanKind::power(3.0);
    for (int i = 0; i < 100; ++i) {
        const double a = i * 0.05, b = a + 0.05;
        CHECK(f_scalar(g, a) < f_scalar(g, b));
        CHECK(f_scalar(p, a) < f_scalar(p, b));
    }
}

TEST_CASE("closed_form_mean examples") {
    const auto half = SimplexWeights::uniform(2);
    const Vector arith = closed_form_mean(MeanKind::arithmetic(), half, {vec({0.2, 0.8}), vec({0.6, 0.4})});
    CHECK(arith[0] == doctest::Approx(0.4));
    CHECK(arith[1] == doctest::Approx(0.6));
    CHECK(closed_form_mean(MeanKind::geometric(), half, {vec({4.0}), vec({1.0})})[0] == doctest::Approx(2.0));
    CHECK(closed_form_mean(MeanKind::harmonic(), half, {vec({1.0}), vec({1.0 / 3.0})})[0] ==
          doctest::Approx(0.5));
    CHECK_THROWS_AS(closed_form_mean(MeanKind::harmonic(), half, {vec({0.0}), vec({1.0})}), InputError);
    CHECK_THROWS_AS(closed_form_mean(MeanKind::geometric(), half, {vec({-1.0}), vec({1.0})}), InputError);
}

TEST_CASE("conjugated means approach the closed forms as epsilon vanishes") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    for (const auto& kind : {MeanKind::geometric(1e-8), MeanKind::harmonic(1e-8)}) {
        for (int trial = 0; trial < 100; ++trial) {
            const std::size_t k = 1 + trial % 4;
            std::vector<double> w(k);
            for (auto& x : w) x = u(rng);
            double total = 0.0;
            for (double x : w) total += x;
            for (auto& x : w) x /= total;
            std::vector<Vector> inputs(k, Vector(5));
            for (auto& v : inputs)
                for (auto& x : v) x = u(rng);

            Vector acc = Vector::Zero(5);
            for (std::size_t i = 0; i < k; ++i) acc += w[i] * apply_f(kind, inputs[i]);
            const Vector conj = apply_f_inv(kind, acc);
            const Vector exact = closed_form_mean(kind, SimplexWeights(w), inputs);
            for (Eigen::Index i = 0; i < 5; ++i) CHECK(std::abs(conj[i] - exact[i]) <= 1e-4 * exact[i]);
        }
    }
}

TEST_CASE("power mean with q = 1 is the arithmetic mean") {
    const auto q1 = MeanKind::power(1.0);
    const Vector x = vec({0.1, 0.7, 0.25});
    CHECK(apply_f(q1, x) == x);
    CHECK(apply_f_inv(q1, x) == x);
    const auto w = SimplexWeights({0.2, 0.8});
    CHECK(closed_form_mean(q1, w, {x, 2 * x}) == closed_form_mean(MeanKind::arithmetic(), w, {x, 2 * x}));
}

TEST_CASE("MeanKind construction and parsing") {
    CHECK_THROWS_AS(MeanKind::geometric(0.0), InputError);
    CHECK_THROWS_AS(MeanKind::harmonic(1.0), InputError);
    CHECK_THROWS_AS(MeanKind::power(0.0), InputError);
    CHECK(MeanKind::parse("harmonic") == MeanKind::harmonic(kDefaultEpsilon));
    CHECK(MeanKind::parse("power") == MeanKind::power(2.0));
    for (const auto& kind : {MeanKind::arithmetic(), MeanKind::geometric(0.1 + 0.2), MeanKind::harmonic(1e-8),
                             MeanKind::power(1.0 / 3.0)})
        CHECK(MeanKind::parse(kind.to_string()) == kind);
    CHECK_THROWS_AS(MeanKind::parse("median"), InputError);
    CHECK_THROWS_AS(MeanKind::parse("geometric:abc"), InputError);
}

TEST_CASE("SimplexWeights invariants") {
    CHECK_THROWS_AS(SimplexWeights({0.5, 0.6}), InputError);
    CHECK_THROWS_AS(SimplexWeights({1.5, -0.5}), InputError);
    CHECK_THROWS_AS(SimplexWeights(std::vector<double>{}), InputError);
    CHECK(SimplexWeights::uniform(4)[3] == 0.25);
}
