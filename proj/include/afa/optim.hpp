#pragma once

#include <cstddef>
#include <cstdint>

#include "afa/means.hpp"

namespace afa {

/// Hyperparameters shared by every trainable fuser.
struct TrainConfig {
    double learning_rate = 1e-2;
    std::size_t epochs = 100;
    std::size_t batch_size = 32;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_epsilon = 1e-8;
    std::uint64_t seed = 0;

    /// Throws InputError on a non-positive rate, epoch count or batch size.
    void validate() const;
};

/// Adam moment state for one parameter matrix.
class AdamState {
public:
    AdamState() = default;
    AdamState(Eigen::Index rows, Eigen::Index cols);

    /// In-place update of `param` from `grad` for step t (1-based).
    void step(Matrix& param, const Matrix& grad, const TrainConfig& config, std::size_t t);

private:
    Matrix m_;
    Matrix v_;
};

}  // namespace afa
