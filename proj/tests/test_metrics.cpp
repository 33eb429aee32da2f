#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "afa/error.hpp"
#include "afa/metrics.hpp"
#include "afa/rng.hpp"

using namespace afa;
using Labels = std::vector<std::size_t>;

TEST_CASE("f1_macro examples") {
    const Labels labels{0, 1, 2, 1};
    CHECK(f1_macro(labels, labels, 3) == 1.0);
    CHECK(f1_macro(Labels{0, 1, 0}, Labels{0, 0, 1}, 2) == doctest::Approx(0.25));
    CHECK(f1_macro(Labels{1, 0, 0}, Labels{0, 1, 1}, 2) == 0.0);
    // An unseen, never-predicted class still counts in the average.
    CHECK(f1_macro(Labels{0, 1}, Labels{0, 1}, 4) == doctest::Approx(0.5));
    CHECK_THROWS_AS(f1_macro(Labels{0}, Labels{0, 1}, 2), InputError);
    CHECK_THROWS_AS(f1_macro(Labels{2}, Labels{0}, 2), InputError);
}

TEST_CASE("f1_macro invariants") {
    Rng rng(1);
    for (int t = 0; t < 50; ++t) {
        const std::size_t n = 2 + uniform_index(rng, 6);
        Labels preds, labels;
        for (int i = 0; i < 60; ++i) {
            preds.push_back(uniform_index(rng, n));
            labels.push_back(uniform_index(rng, n));
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        shuffle(perm, rng);
        Labels pp, pl;
        for (std::size_t i = 0; i < preds.size(); ++i) {
            pp.push_back(perm[preds[i]]);
            pl.push_back(perm[labels[i]]);
        }
        CHECK(f1_macro(pp, pl, n) == doctest::Approx(f1_macro(preds, labels, n)).epsilon(1e-12));
        const double f = f1_macro(preds, labels, n);
        CHECK(f >= 0.0);
        CHECK(f <= 1.0);
    }

    // Balanced classes, diagonal confusion: macro F1 equals accuracy.
    Labels labels{0, 0, 1, 1, 2, 2};
    CHECK(f1_macro(labels, labels, 3) == 1.0);
}

TEST_CASE("accuracy_report") {
    const Labels labels{0, 1, 2, 3};
    const Labels preds{0, 1, 0, 0};
    const auto r = accuracy_report(preds, labels, {0, 1});
    CHECK(r.acc_mean == 0.5);
    REQUIRE(r.acc_base);
    REQUIRE(r.acc_new);
    CHECK(*r.acc_base == 1.0);
    CHECK(*r.acc_new == 0.0);
    CHECK(r.n_base == 2);
    CHECK(r.n_new == 2);

    const auto only_base = accuracy_report(Labels{0, 1}, Labels{0, 0}, {0, 1});
    CHECK_FALSE(only_base.acc_new.has_value());
    CHECK(only_base.acc_base == 0.5);
    CHECK_THROWS_AS(accuracy_report(Labels{0}, Labels{}, {0}), InputError);
}

TEST_CASE("acc_mean decomposes into base and new accuracy") {
    Rng rng(4);
    for (int t = 0; t < 50; ++t) {
        Labels preds, labels;
        for (int i = 0; i < 100; ++i) {
            preds.push_back(uniform_index(rng, 10));
            labels.push_back(uniform_index(rng, 10));
        }
        const auto r = accuracy_report(preds, labels, {0, 1, 2, 3, 4, 5});
        const double combined =
            (static_cast<double>(r.n_base) * r.acc_base.value_or(0.0) +
             static_cast<double>(r.n_new) * r.acc_new.value_or(0.0)) /
            static_cast<double>(labels.size());
        CHECK(std::abs(combined - r.acc_mean) <= 1e-12);
    }
}

TEST_CASE("uniform random predictions have chance accuracy") {
    Rng rng(99);
    const std::size_t n = 10, count = 20000;
    Labels preds, labels;
    for (std::size_t i = 0; i < count; ++i) {
        preds.push_back(uniform_index(rng, n));
        labels.push_back(i % n);
    }
    const double p = 1.0 / static_cast<double>(n);
    const double sigma = std::sqrt(p * (1 - p) / static_cast<double>(count));
    CHECK(std::abs(accuracy_report(preds, labels, {0}).acc_mean - p) <= 3 * sigma);
}
