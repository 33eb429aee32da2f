#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "afa/afa_model.hpp"
#include "afa/means.hpp"
#include "afa/optim.hpp"

namespace afa {

// Floor substituted for zero components before harmonic fusion.
inline constexpr double kHarmonicZeroFloor = 1e-12;

struct MeanFusion {
    MeanKind kind;
};
struct MajorityVote {};
struct ShallowNN {
    std::size_t hidden = 1;

    /// Hidden width whose parameter count is closest to J*N^2*(K+1).
    static ShallowNN matching_afa(std::size_t n, std::size_t k, std::size_t j);
};
struct DeepNN {
    std::vector<std::size_t> hidden;  // four widths: five fully connected layers

    /// Widths interpolated geometrically from K*N down to N.
    static DeepNN interpolated(std::size_t n, std::size_t k);
};
struct WeightedAvgNN {};
struct BaseOnly {};

using FusionStrategy =
    std::variant<MeanFusion, MajorityVote, ShallowNN, DeepNN, WeightedAvgNN, BaseOnly>;

/// Uniform-weight closed-form mean, renormalized to sum to one. Harmonic
/// fusion floors zeros at kHarmonicZeroFloor; if a geometric mean vanishes
/// everywhere the same floor is applied and the mean recomputed.
Vector mean_fusion(const MeanKind& kind, const std::vector<Vector>& outputs);

/// Each learner votes for its argmax; most votes wins, lowest index on ties.
std::size_t majority_vote(const std::vector<Vector>& outputs);

/// Index of the largest component, lowest index on ties.
std::size_t argmax(const Vector& v);

/// Base-session predictions completed with zeros up to n_total classes.
Vector base_only_predict(const Vector& base_output, std::size_t n_total);

/// Splits a stacked input of k blocks back into its prediction vectors.
std::vector<Vector> unstack(const Vector& x, std::size_t n, std::size_t k);

/// Trains a stacked neural fuser (ShallowNN, DeepNN or WeightedAvgNN) on
/// `train` and returns its softmax outputs for `test`.
std::vector<Vector> nn_fuser_train_predict(const FusionStrategy& strategy,
                                           std::span<const LabeledInput> train,
                                           std::span<const Vector> test, std::size_t n,
                                           std::size_t k, const TrainConfig& config);

}  // namespace afa
