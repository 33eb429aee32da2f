#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <vector>

#include "afa/afa_model.hpp"
#include "afa/means.hpp"

namespace afa {

inline constexpr double kDefaultTau = 16.0;
inline constexpr double kDefaultThreshold = 0.5;

/// Few-shot class-incremental protocol: a base session with n_class_base
/// classes, then k_total - 1 sessions of n_way new classes with n_shots
/// training samples each.
struct SessionSpec {
    std::size_t n_class_base = 0;
    std::size_t n_way = 0;
    std::size_t n_shots = 0;
    std::size_t k_total = 0;
    double threshold = kDefaultThreshold;  // inlierness threshold t

    void validate() const;

    /// N_k = n_class_base + (k - 1) * n_way for a 1-based session k.
    std::size_t class_count(std::size_t k) const;
    std::size_t total_classes() const { return class_count(k_total); }
};

inline std::size_t class_count(const SessionSpec& spec, std::size_t k) { return spec.class_count(k); }

enum class Split { Train, Test };

struct Sample {
    Split split = Split::Train;
    std::size_t label = 0;
    Vector feature;
};

struct FeatureDataset {
    std::size_t dim = 0;
    std::size_t n_class = 0;
    std::vector<Sample> samples;

    /// Finite features of length dim, labels in [0, n_class), every label
    /// present at least once.
    void validate() const;
};

struct Session {
    std::size_t index = 0;                 // 1-based
    std::vector<std::size_t> new_classes;  // classes first trained in this session
    std::vector<Sample> train;
    std::vector<Sample> test;  // cumulative: every class seen so far
};

/// Session 1 trains on every base-class training sample; session k >= 2
/// draws n_shots training samples (seeded) from each of its n_way classes.
/// Classes are assigned to sessions in label order.
std::vector<Session> split_sessions(const FeatureDataset& dataset, const SessionSpec& spec,
                                    std::uint64_t seed);

/// Nearest-centroid classifier on l2-normalized embeddings with a softmin
/// over temperature-scaled squared distances.
class PrototypeClassifier {
public:
    explicit PrototypeClassifier(std::map<std::size_t, Vector> centroids, double tau = kDefaultTau);

    const std::map<std::size_t, Vector>& centroids() const noexcept { return centroids_; }
    std::size_t n_native() const noexcept { return centroids_.size(); }
    double tau() const noexcept { return tau_; }
    void set_tau(double tau);

    /// Squared distances from the normalized feature to every centroid,
    /// in class order.
    Vector squared_distances(const Vector& feature) const;

    /// softmin(tau * d), in class order.
    Vector predict_probs(const Vector& feature) const;

    /// Union of this classifier's centroids and `newer`'s (newer wins on
    /// overlap); keeps this classifier's temperature.
    PrototypeClassifier extended_with(const PrototypeClassifier& newer) const;

private:
    std::map<std::size_t, Vector> centroids_;
    double tau_;
};

inline Vector predict_probs(const PrototypeClassifier& clf, const Vector& feature) {
    return clf.predict_probs(feature);
}

/// l2-normalizes x; throws InputError on a zero or non-finite vector.
Vector l2_normalized(const Vector& x);

/// Centroid per class of the l2-normalized training features. When
/// expected_shots is nonzero every class must have exactly that many samples.
PrototypeClassifier fit_prototypes(std::span<const Sample> train, std::size_t expected_shots = 0,
                                   double tau = kDefaultTau);

/// Softmin over given distances, exposed for testing.
Vector softmin(const Vector& distances, double tau);

struct PaddedPrediction {
    Vector values;
    std::size_t n_native = 0;
    bool confident = true;
};

/// Pads an N_k-class prediction to N_K classes. Confident predictions
/// (max >= threshold) keep (N_k/N_K + 1)/2 of the mass on their native
/// classes, others keep (N_k/N_K)/2; the rest is spread uniformly over the
/// padding. Output sums to one.
PaddedPrediction pad_and_rescale(const Vector& x, std::size_t n_total, double threshold);

/// Concatenated padded predictions of every classifier for one feature.
Vector stack_predictions(std::span<const PrototypeClassifier> classifiers, const Vector& feature,
                         std::size_t n_current, double threshold);

/// Prototype rehearsal: every stored class centroid is run through every
/// weak classifier, padded to n_current classes and stacked.
std::vector<LabeledInput> build_rehearsal_set(const std::map<std::size_t, Vector>& prototypes,
                                              std::span<const PrototypeClassifier> classifiers,
                                              std::size_t n_current, double threshold);

struct TemperatureGrid {
    double min = 0.1;
    double max = 1000.0;
    std::size_t points = 41;
};

struct TemperatureFit {
    double tau = kDefaultTau;
    bool degenerate = false;  // single-class held-out set; tau left unchanged
};

/// Held-out log-likelihood of predict_probs at temperature tau.
double temperature_log_likelihood(const PrototypeClassifier& clf, std::span<const Sample> held_out,
                                  double tau);

/// Maximizes held-out log-likelihood over a log-spaced grid, then refines
/// between the neighbours of the best grid point by golden-section search.
TemperatureFit fit_temperature(const PrototypeClassifier& clf, std::span<const Sample> held_out,
                               const TemperatureGrid& grid = {});

struct SyntheticSpec {
    std::size_t n_class = 20;
    std::size_t dim = 16;
    std::size_t per_class_train = 30;
    std::size_t per_class_test = 20;
    double spread = 0.15;          // per-coordinate noise standard deviation
    double min_angle_deg = 45.0;   // minimum angle between class means
    std::uint64_t seed = 0;
};

/// Class means uniform on the unit sphere (pairwise angle >= min_angle by
/// rejection) plus isotropic Gaussian noise.
FeatureDataset generate_synthetic(const SyntheticSpec& spec);

/// Feature file: header "dim=<d>,classes=<n>", then one
/// "<train|test>,<label>,<f_0>,...,<f_{d-1}>" line per sample.
FeatureDataset read_feature_file(const std::filesystem::path& path);
void write_feature_file(const std::filesystem::path& path, const FeatureDataset& dataset);

}  // namespace afa
