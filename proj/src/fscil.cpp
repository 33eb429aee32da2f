#include "afa/fscil.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

#include "afa/error.hpp"
#include "afa/rng.hpp"

namespace afa {

void SessionSpec::validate() const {
    if (n_class_base == 0 || n_way == 0 || n_shots == 0 || k_total == 0)
        throw InputError("session spec: n_class_base, n_way, n_shots and k_total must be positive");
    if (!(threshold > 0.0 && threshold < 1.0))
        throw InputError("session spec: threshold must lie in (0, 1)");
}

std::size_t SessionSpec::class_count(std::size_t k) const {
    if (k < 1 || k > k_total)
        throw ProtocolError("session " + std::to_string(k) + " outside [1, " +
                            std::to_string(k_total) + "]");
    return n_class_base + (k - 1) * n_way;
}

void FeatureDataset::validate() const {
    if (dim == 0) throw InputError("feature dataset: dim must be positive");
    std::vector<bool> seen(n_class, false);
    for (std::size_t i = 0; i < samples.size(); ++i) {
        const auto& s = samples[i];
        if (static_cast<std::size_t>(s.feature.size()) != dim)
            throw InputError("sample " + std::to_string(i) + " has dimension " +
                             std::to_string(s.feature.size()) + ", expected " + std::to_string(dim));
        if (!s.feature.allFinite())
            throw InputError("sample " + std::to_string(i) + " has a non-finite feature");
        if (s.label >= n_class)
            throw InputError("sample " + std::to_string(i) + " has label " +
                             std::to_string(s.label) + " outside [0, " + std::to_string(n_class) + ")");
        seen[s.label] = true;
    }
    for (std::size_t c = 0; c < n_class; ++c)
        if (!seen[c]) throw InputError("labels are not contiguous: class " + std::to_string(c) + " is empty");
}

std::vector<Session> split_sessions(const FeatureDataset& dataset, const SessionSpec& spec,
                                    std::uint64_t seed) {
    spec.validate();
    const std::size_t n_total = spec.total_classes();
    if (dataset.n_class < n_total)
        throw ProtocolError("dataset has " + std::to_string(dataset.n_class) +
                            " classes, protocol needs " + std::to_string(n_total));

    std::vector<std::vector<std::size_t>> train_of(n_total), test_of(n_total);
    for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
        const auto& s = dataset.samples[i];
        if (s.label >= n_total) continue;
        (s.split == Split::Train ? train_of : test_of)[s.label].push_back(i);
    }

    Rng rng(mix_seed(seed, 0x5e55));
    std::vector<Session> sessions;
    for (std::size_t k = 1; k <= spec.k_total; ++k) {
        Session session;
        session.index = k;
        const std::size_t lo = k == 1 ? 0 : spec.class_count(k - 1);
        const std::size_t hi = spec.class_count(k);
        for (std::size_t c = lo; c < hi; ++c) {
            session.new_classes.push_back(c);
            auto picks = train_of[c];
            if (k == 1) {
                if (picks.empty())
                    throw ProtocolError("base class " + std::to_string(c) + " has no training samples");
            } else {
                if (picks.size() < spec.n_shots)
                    throw ProtocolError("class " + std::to_string(c) + " has " +
                                        std::to_string(picks.size()) + " training samples, session " +
                                        std::to_string(k) + " needs " + std::to_string(spec.n_shots));
                shuffle(picks, rng);
                picks.resize(spec.n_shots);
                std::sort(picks.begin(), picks.end());
            }
            for (std::size_t i : picks) session.train.push_back(dataset.samples[i]);
        }
        for (std::size_t c = 0; c < hi; ++c)
            for (std::size_t i : test_of[c]) session.test.push_back(dataset.samples[i]);
        sessions.push_back(std::move(session));
    }
    return sessions;
}

Vector l2_normalized(const Vector& x) {
    const double norm = x.norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
        throw InputError("feature vector has zero or non-finite norm");
    return x / norm;
}

Vector softmin(const Vector& distances, double tau) {
    Vector scaled = -tau * distances;
    Vector e = (scaled.array() - scaled.maxCoeff()).exp();
    return e / e.sum();
}

PrototypeClassifier::PrototypeClassifier(std::map<std::size_t, Vector> centroids, double tau)
    : centroids_(std::move(centroids)), tau_(tau) {
    if (centroids_.empty()) throw InputError("prototype classifier needs at least one class");
    const Eigen::Index dim = centroids_.begin()->second.size();
    for (const auto& [c, v] : centroids_)
        if (v.size() != dim || !v.allFinite())
            throw InputError("centroid of class " + std::to_string(c) + " is malformed");
    set_tau(tau);
}

void PrototypeClassifier::set_tau(double tau) {
    if (!(tau > 0.0) || !std::isfinite(tau)) throw InputError("temperature must be positive");
    tau_ = tau;
}

Vector PrototypeClassifier::squared_distances(const Vector& feature) const {
    if (feature.size() != centroids_.begin()->second.size())
        throw InputError("feature has wrong dimension");
    const Vector z = l2_normalized(feature);
    Vector d(static_cast<Eigen::Index>(centroids_.size()));
    Eigen::Index i = 0;
    for (const auto& [c, centroid] : centroids_) d[i++] = (z - centroid).squaredNorm();
    return d;
}

Vector PrototypeClassifier::predict_probs(const Vector& feature) const {
    return softmin(squared_distances(feature), tau_);
}

PrototypeClassifier PrototypeClassifier::extended_with(const PrototypeClassifier& newer) const {
    auto merged = centroids_;
    for (const auto& [c, v] : newer.centroids_) merged[c] = v;
    return PrototypeClassifier(std::move(merged), tau_);
}

PrototypeClassifier fit_prototypes(std::span<const Sample> train, std::size_t expected_shots,
                                   double tau) {
    if (train.empty()) throw InputError("fit_prototypes: no training samples");
    std::map<std::size_t, Vector> sums;
    std::map<std::size_t, std::size_t> counts;
    for (const auto& s : train) {
        const Vector z = l2_normalized(s.feature);
        auto [it, inserted] = sums.try_emplace(s.label, Vector::Zero(z.size()));
        it->second += z;
        ++counts[s.label];
    }
    for (auto& [c, sum] : sums) {
        const std::size_t count = counts[c];
        if (expected_shots != 0 && count != expected_shots)
            throw ProtocolError("class " + std::to_string(c) + " has " + std::to_string(count) +
                                " samples, expected " + std::to_string(expected_shots));
        sum /= static_cast<double>(count);
    }
    return PrototypeClassifier(std::move(sums), tau);
}

PaddedPrediction pad_and_rescale(const Vector& x, std::size_t n_total, double threshold) {
    const auto n_native = static_cast<std::size_t>(x.size());
    if (n_native == 0) throw InputError("pad_and_rescale: empty prediction");
    if (n_native > n_total)
        throw ProtocolError("prediction covers " + std::to_string(n_native) +
                            " classes, more than the " + std::to_string(n_total) + " in play");
    if ((x.array() < 0.0).any()) throw InputError("pad_and_rescale: negative probability");
    const double total = x.sum();
    if (std::abs(total - 1.0) > 1e-6) throw InputError("pad_and_rescale: prediction does not sum to 1");

    PaddedPrediction out;
    out.n_native = n_native;
    if (n_native == n_total) {
        out.values = x;
        out.confident = true;
        return out;
    }
    out.confident = x.maxCoeff() >= threshold;
    const double ratio = static_cast<double>(n_native) / static_cast<double>(n_total);
    const double native_mass = out.confident ? 0.5 * (ratio + 1.0) : 0.5 * ratio;
    const double pad = 1.0 / static_cast<double>(n_total - n_native);

    out.values.resize(static_cast<Eigen::Index>(n_total));
    out.values.head(x.size()) = (native_mass / total) * x;
    out.values.tail(static_cast<Eigen::Index>(n_total - n_native)).setConstant((1.0 - native_mass) * pad);
    return out;
}

namespace {

void check_contiguous(const PrototypeClassifier& clf, std::size_t index, std::size_t n_current) {
    std::size_t expected = 0;
    for (const auto& [c, v] : clf.centroids())
        if (c != expected++)
            throw ProtocolError("weak classifier " + std::to_string(index + 1) +
                                " does not cover a contiguous class range");
    if (clf.n_native() > n_current)
        throw ProtocolError("weak classifier " + std::to_string(index + 1) + " predicts " +
                            std::to_string(clf.n_native()) + " classes, only " +
                            std::to_string(n_current) + " are in play");
}

}  // namespace

Vector stack_predictions(std::span<const PrototypeClassifier> classifiers, const Vector& feature,
                         std::size_t n_current, double threshold) {
    if (classifiers.empty()) throw ProtocolError("no weak classifiers to stack");
    const auto n = static_cast<Eigen::Index>(n_current);
    Vector stacked(n * static_cast<Eigen::Index>(classifiers.size()));
    for (std::size_t k = 0; k < classifiers.size(); ++k) {
        check_contiguous(classifiers[k], k, n_current);
        stacked.segment(static_cast<Eigen::Index>(k) * n, n) =
            pad_and_rescale(classifiers[k].predict_probs(feature), n_current, threshold).values;
    }
    return stacked;
}

std::vector<LabeledInput> build_rehearsal_set(const std::map<std::size_t, Vector>& prototypes,
                                              std::span<const PrototypeClassifier> classifiers,
                                              std::size_t n_current, double threshold) {
    if (classifiers.empty()) throw ProtocolError("rehearsal needs at least one weak classifier");
    for (std::size_t c = 0; c < n_current; ++c)
        if (!prototypes.contains(c))
            throw ProtocolError("no stored prototype for class " + std::to_string(c));
    std::vector<LabeledInput> out;
    out.reserve(n_current);
    for (std::size_t c = 0; c < n_current; ++c)
        out.push_back({stack_predictions(classifiers, prototypes.at(c), n_current, threshold), c});
    return out;
}

double temperature_log_likelihood(const PrototypeClassifier& clf, std::span<const Sample> held_out,
                                  double tau) {
    std::vector<std::size_t> classes;
    for (const auto& [c, v] : clf.centroids()) classes.push_back(c);
    double ll = 0.0;
    for (const auto& s : held_out) {
        const auto pos = std::lower_bound(classes.begin(), classes.end(), s.label);
        if (pos == classes.end() || *pos != s.label)
            throw InputError("held-out label " + std::to_string(s.label) + " is not a native class");
        const Vector scaled = -tau * clf.squared_distances(s.feature);
        const double m = scaled.maxCoeff();
        const double lse = m + std::log((scaled.array() - m).exp().sum());
        ll += scaled[pos - classes.begin()] - lse;
    }
    return ll;
}

TemperatureFit fit_temperature(const PrototypeClassifier& clf, std::span<const Sample> held_out,
                               const TemperatureGrid& grid) {
    if (held_out.empty()) throw InputError("fit_temperature: empty held-out set");
    if (!(grid.min > 0.0 && grid.max > grid.min && grid.points >= 2))
        throw InputError("fit_temperature: invalid grid");

    std::set<std::size_t> labels;
    for (const auto& s : held_out) labels.insert(s.label);
    if (labels.size() < 2) return {clf.tau(), true};

    const double log_lo = std::log(grid.min);
    const double step = (std::log(grid.max) - log_lo) / static_cast<double>(grid.points - 1);
    auto grid_tau = [&](std::size_t i) {
        return i + 1 == grid.points ? grid.max : std::exp(log_lo + step * static_cast<double>(i));
    };
    auto ll_at_log = [&](double log_tau) {
        return temperature_log_likelihood(clf, held_out, std::exp(log_tau));
    };

    std::size_t best = 0;
    double best_ll = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < grid.points; ++i) {
        const double ll = temperature_log_likelihood(clf, held_out, grid_tau(i));
        if (ll >= best_ll) {  // plateaus resolve to the sharper temperature
            best_ll = ll;
            best = i;
        }
    }
    if (best == 0 || best + 1 == grid.points) return {grid_tau(best), false};

    // Golden-section search on log(tau) between the neighbouring grid points.
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = log_lo + step * static_cast<double>(best - 1);
    double b = log_lo + step * static_cast<double>(best + 1);
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = ll_at_log(c), fd = ll_at_log(d);
    for (int iter = 0; iter < 60; ++iter) {
        if (fc > fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = ll_at_log(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = ll_at_log(d);
        }
    }
    const double refined = 0.5 * (a + b);
    const double tau = ll_at_log(refined) >= best_ll ? std::exp(refined) : grid_tau(best);
    return {tau, false};
}

FeatureDataset generate_synthetic(const SyntheticSpec& spec) {
    if (spec.n_class < 2 || spec.dim < 2)
        throw InputError("synthetic data needs at least 2 classes and 2 dimensions");
    if (!(spec.spread >= 0.0)) throw InputError("cluster spread must be nonnegative");

    Rng rng(mix_seed(spec.seed, 0xfea7));
    std::normal_distribution<double> normal(0.0, 1.0);
    const auto dim = static_cast<Eigen::Index>(spec.dim);
    const double max_cos = std::cos(spec.min_angle_deg * std::numbers::pi / 180.0);

    std::vector<Vector> means;
    constexpr int kMaxAttempts = 10000;
    for (std::size_t c = 0; c < spec.n_class; ++c) {
        bool placed = false;
        for (int attempt = 0; attempt < kMaxAttempts && !placed; ++attempt) {
            Vector v(dim);
            for (Eigen::Index i = 0; i < dim; ++i) v[i] = normal(rng);
            if (v.norm() == 0.0) continue;
            v.normalize();
            placed = std::all_of(means.begin(), means.end(),
                                 [&](const Vector& m) { return m.dot(v) <= max_cos; });
            if (placed) means.push_back(v);
        }
        if (!placed)
            throw InputError("could not place " + std::to_string(spec.n_class) +
                             " class means with the requested separation; increase dim");
    }

    FeatureDataset data;
    data.dim = spec.dim;
    data.n_class = spec.n_class;
    auto draw = [&](std::size_t c, Split split) {
        Vector f = means[c];
        for (Eigen::Index i = 0; i < dim; ++i) f[i] += spec.spread * normal(rng);
        data.samples.push_back({split, c, std::move(f)});
    };
    for (std::size_t c = 0; c < spec.n_class; ++c) {
        for (std::size_t i = 0; i < spec.per_class_train; ++i) draw(c, Split::Train);
        for (std::size_t i = 0; i < spec.per_class_test; ++i) draw(c, Split::Test);
    }
    return data;
}

}  // namespace afa
