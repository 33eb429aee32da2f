#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "afa/baselines.hpp"
#include "afa/error.hpp"
#include "afa/fscil.hpp"
#include "afa/rng.hpp"

using namespace afa;
namespace fs = std::filesystem;

namespace {

Vector vec(std::initializer_list<double> xs) {
    Vector v(static_cast<Eigen::Index>(xs.size()));
    Eigen::Index i = 0;
    for (double x : xs) v[i++] = x;
    return v;
}

std::vector<Sample> of_split(const FeatureDataset& d, Split split) {
    std::vector<Sample> out;
    for (const auto& s : d.samples)
        if (s.split == split) out.push_back(s);
    return out;
}

double prototype_accuracy(const FeatureDataset& d) {
    const auto clf = fit_prototypes(of_split(d, Split::Train));
    std::size_t correct = 0, total = 0;
    for (const auto& s : of_split(d, Split::Test)) {
        correct += argmax(clf.predict_probs(s.feature)) == s.label;
        ++total;
    }
    return static_cast<double>(correct) / static_cast<double>(total);
}

Vector random_probs(std::size_t n, Rng& rng) {
    std::exponential_distribution<double> e(1.0);
    Vector v(static_cast<Eigen::Index>(n));
    for (auto& x : v) x = e(rng);
    return v / v.sum();
}

}  // namespace

TEST_CASE("class_count matches benchmark session sizes") {
    const SessionSpec mini{60, 5, 5, 9};
    CHECK(class_count(mini, 1) == 60);
    CHECK(class_count(mini, 9) == 100);
    const SessionSpec cub{100, 10, 5, 11};
    CHECK(cub.total_classes() == 200);
    const SessionSpec air{50, 5, 5, 10};
    CHECK(air.total_classes() == 95);
    CHECK_THROWS_AS(mini.class_count(0), ProtocolError);
    CHECK_THROWS_AS(mini.class_count(10), ProtocolError);
}

TEST_CASE("split_sessions") {
    SyntheticSpec syn;
    syn.n_class = 8;
    syn.seed = 3;
    const auto data = generate_synthetic(syn);
    const SessionSpec spec{4, 2, 3, 3};
    const auto sessions = split_sessions(data, spec, 42);
    REQUIRE(sessions.size() == 3);

    CHECK(sessions[0].train.size() == 4 * syn.per_class_train);
    CHECK(sessions[1].train.size() == 6);
    std::set<std::size_t> s2;
    for (const auto& s : sessions[1].train) s2.insert(s.label);
    CHECK(s2 == std::set<std::size_t>{4, 5});
    CHECK(sessions[1].new_classes == std::vector<std::size_t>{4, 5});

    std::set<std::size_t> test3;
    for (const auto& s : sessions[2].test) test3.insert(s.label);
    CHECK(test3 == std::set<std::size_t>{0, 1, 2, 3, 4, 5, 6, 7});
    std::set<std::size_t> test1;
    for (const auto& s : sessions[0].test) test1.insert(s.label);
    CHECK(test1 == std::set<std::size_t>{0, 1, 2, 3});

    const auto again = split_sessions(data, spec, 42);
    for (std::size_t k = 0; k < 3; ++k) {
        REQUIRE(again[k].train.size() == sessions[k].train.size());
        for (std::size_t i = 0; i < again[k].train.size(); ++i)
            CHECK(again[k].train[i].feature == sessions[k].train[i].feature);
    }

    CHECK_THROWS_AS(split_sessions(data, SessionSpec{4, 2, 3, 4}, 0), ProtocolError);
    CHECK_THROWS_AS(split_sessions(data, SessionSpec{4, 2, 31, 3}, 0), ProtocolError);
}

TEST_CASE("fit_prototypes") {
    const auto one = fit_prototypes(std::vector<Sample>{{Split::Train, 0, vec({3, 4})}});
    CHECK((one.centroids().at(0) - vec({0.6, 0.8})).norm() <= 1e-15);

    const std::vector<Sample> pair{{Split::Train, 0, vec({1, 0})}, {Split::Train, 0, vec({0, 2})}};
    const auto two = fit_prototypes(pair);
    CHECK((two.centroids().at(0) - vec({0.5, 0.5})).norm() <= 1e-15);

    auto doubled = pair;
    doubled.insert(doubled.end(), pair.begin(), pair.end());
    CHECK((fit_prototypes(doubled).centroids().at(0) - vec({0.5, 0.5})).norm() <= 1e-15);

    CHECK_THROWS_AS(fit_prototypes(std::vector<Sample>{{Split::Train, 0, vec({0, 0})}}), InputError);
    CHECK_THROWS_AS(fit_prototypes(pair, 3), ProtocolError);
}

TEST_CASE("predict_probs") {
    const PrototypeClassifier eq({{0, vec({1, 0})}, {1, vec({0, 1})}}, 1.0);
    const Vector p = eq.predict_probs(vec({1, 1}));
    CHECK(p[0] == doctest::Approx(0.5));
    CHECK(p[1] == doctest::Approx(0.5));

    const Vector s = softmin(vec({0.0, std::log(3.0)}), 1.0);
    CHECK(s[0] == doctest::Approx(0.75).epsilon(1e-14));
    CHECK(s[1] == doctest::Approx(0.25).epsilon(1e-14));

    const PrototypeClassifier sharp({{0, vec({1, 0})}, {1, vec({0.6, 0.8})}}, 100.0);
    CHECK(sharp.predict_probs(vec({0.9, 0.1}))[0] >= 1.0 - 1e-3);
    CHECK_THROWS_AS(sharp.predict_probs(vec({0, 0})), InputError);
    CHECK_THROWS_AS(PrototypeClassifier({{0, vec({1, 0})}}, 0.0), InputError);
}

TEST_CASE("pad_and_rescale") {
    Vector confident = Vector::Constant(60, 0.2 / 59);
    confident[0] = 0.8;
    const auto c = pad_and_rescale(confident, 100, 0.5);
    CHECK(c.confident);
    CHECK(c.n_native == 60);
    CHECK(c.values.head(60).sum() == doctest::Approx(0.8).epsilon(1e-12));
    for (Eigen::Index i = 60; i < 100; ++i) CHECK(c.values[i] == doctest::Approx(0.005).epsilon(1e-12));
    CHECK(std::abs(c.values.sum() - 1.0) <= 1e-9);

    const auto u = pad_and_rescale(Vector::Constant(60, 1.0 / 60), 100, 0.5);
    CHECK_FALSE(u.confident);
    CHECK(u.values.head(60).sum() == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(u.values[99] == doctest::Approx(0.0175).epsilon(1e-12));

    const Vector x = vec({0.3, 0.7});
    const auto same = pad_and_rescale(x, 2, 0.5);
    CHECK(same.values == x);
    CHECK(same.confident);

    CHECK_THROWS_AS(pad_and_rescale(x, 1, 0.5), ProtocolError);
    CHECK_THROWS_AS(pad_and_rescale(vec({0.3, 0.3}), 4, 0.5), InputError);
}

TEST_CASE("padding conserves mass for random predictions") {
    Rng rng(12);
    for (int t = 0; t < 500; ++t) {
        const std::size_t nk = 1 + uniform_index(rng, 20);
        const std::size_t nK = nk + uniform_index(rng, 20);
        const auto p = pad_and_rescale(random_probs(nk, rng), nK, 0.5);
        CHECK(p.values.minCoeff() >= 0.0);
        CHECK(std::abs(p.values.sum() - 1.0) <= 1e-9);
    }
}

TEST_CASE("rehearsal set at session two") {
    SyntheticSpec syn;
    syn.n_class = 6;
    syn.seed = 1;
    const auto data = generate_synthetic(syn);
    const auto sessions = split_sessions(data, SessionSpec{4, 2, 5, 2}, 0);
    const auto c1 = fit_prototypes(sessions[0].train);
    const auto c2 = c1.extended_with(fit_prototypes(sessions[1].train, 5));
    std::map<std::size_t, Vector> protos = c2.centroids();
    const std::vector<PrototypeClassifier> clfs{c1, c2};
    const auto set = build_rehearsal_set(protos, clfs, 6, 0.5);
    REQUIRE(set.size() == 6);
    for (std::size_t i = 0; i < set.size(); ++i) {
        CHECK(set[i].label == i);
        REQUIRE(set[i].x.size() == 12);
        CHECK(std::abs(set[i].x.head(6).sum() - 1.0) <= 1e-9);
        CHECK(std::abs(set[i].x.tail(6).sum() - 1.0) <= 1e-9);
    }
    const auto rerun = build_rehearsal_set(protos, clfs, 6, 0.5);
    for (std::size_t i = 0; i < set.size(); ++i) CHECK(rerun[i].x == set[i].x);

    // A low-temperature session-2 classifier is unsure of a base prototype.
    auto flat = c2;
    flat.set_tau(0.1);
    const Vector probs = flat.predict_probs(protos.at(0));
    REQUIRE(probs.maxCoeff() < 0.5);
    CHECK_FALSE(pad_and_rescale(probs, 8, 0.5).confident);

    protos.erase(5);
    CHECK_THROWS_AS(build_rehearsal_set(protos, clfs, 6, 0.5), ProtocolError);
    CHECK_THROWS_AS(build_rehearsal_set(c2.centroids(), std::vector<PrototypeClassifier>{}, 6, 0.5),
                    ProtocolError);
}

TEST_CASE("synthetic generation") {
    SyntheticSpec syn;
    syn.seed = 5;
    const auto a = generate_synthetic(syn);
    const auto b = generate_synthetic(syn);
    REQUIRE(a.samples.size() == b.samples.size());
    CHECK(a.samples.size() == syn.n_class * (syn.per_class_train + syn.per_class_test));
    for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].feature == b.samples[i].feature);

    syn.spread = 0.0;
    CHECK(prototype_accuracy(generate_synthetic(syn)) == 1.0);

    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        SyntheticSpec s;
        s.seed = seed;
        CHECK(prototype_accuracy(generate_synthetic(s)) > 0.9);
    }

    SyntheticSpec crowded;
    crowded.n_class = 40;
    crowded.dim = 2;
    CHECK_THROWS_AS(generate_synthetic(crowded), InputError);
}

TEST_CASE("fit_temperature") {
    SyntheticSpec syn;
    syn.n_class = 5;
    syn.spread = 0.02;
    const auto data = generate_synthetic(syn);
    const auto train = of_split(data, Split::Train);
    const auto clf = fit_prototypes(train);
    const auto fit = fit_temperature(clf, of_split(data, Split::Test));
    CHECK_FALSE(fit.degenerate);
    CHECK(fit.tau >= kDefaultTau);
    CHECK(fit_temperature(clf, of_split(data, Split::Test)).tau == fit.tau);

    std::map<std::size_t, Vector> unit;
    std::vector<Sample> at_centroids;
    for (const auto& [c, z] : clf.centroids()) {
        unit[c] = z.normalized();
        at_centroids.push_back({Split::Test, c, unit[c]});
    }
    CHECK(fit_temperature(PrototypeClassifier(unit), at_centroids).tau == 1000.0);

    const std::vector<Sample> single{{Split::Test, 0, clf.centroids().at(0)}};
    const auto deg = fit_temperature(clf, single);
    CHECK(deg.degenerate);
    CHECK(deg.tau == clf.tau());
}

TEST_CASE("feature file round trip and parse errors") {
    const fs::path dir = fs::temp_directory_path() / "afa_test_fscil";
    fs::create_directories(dir);
    SyntheticSpec syn;
    syn.n_class = 3;
    syn.dim = 4;
    syn.per_class_train = 2;
    syn.per_class_test = 1;
    const auto data = generate_synthetic(syn);
    write_feature_file(dir / "f.txt", data);
    const auto back = read_feature_file(dir / "f.txt");
    CHECK(back.dim == 4);
    CHECK(back.n_class == 3);
    REQUIRE(back.samples.size() == data.samples.size());
    for (std::size_t i = 0; i < data.samples.size(); ++i) {
        CHECK(back.samples[i].feature == data.samples[i].feature);
        CHECK(back.samples[i].label == data.samples[i].label);
        CHECK(back.samples[i].split == data.samples[i].split);
    }

    auto write = [&](const std::string& text) {
        std::ofstream(dir / "bad.txt") << text;
        return dir / "bad.txt";
    };
    CHECK_THROWS_AS(read_feature_file(write("dim=2\ntrain,0,1,2\n")), ParseError);
    CHECK_THROWS_AS(read_feature_file(write("dim=2,classes=1\nvalid,0,1,2\n")), ParseError);
    CHECK_THROWS_AS(read_feature_file(write("dim=2,classes=1\ntrain,0,1\n")), ParseError);
    CHECK_THROWS_AS(read_feature_file(write("dim=2,classes=1\ntrain,0,1,x\n")), ParseError);
    try {
        read_feature_file(write("dim=2,classes=1\ntrain,0,1,2\ntrain,0,nan,2\n"));
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find(":3:") != std::string::npos);
    }
    CHECK_THROWS_AS(read_feature_file(dir / "missing.txt"), IoError);
    fs::remove_all(dir);
}
