#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "afa/afa_model.hpp"
#include "afa/optim.hpp"

namespace afa {

/// Fully connected network with rectifier hidden units and a softmax
/// output, trained on cross-entropy. widths = {input, hidden..., output}.
class DenseNetwork {
public:
    DenseNetwork(std::vector<std::size_t> widths, std::uint64_t seed);

    const std::vector<std::size_t>& widths() const noexcept { return widths_; }
    std::size_t layer_count() const noexcept { return weights_.size(); }
    std::size_t param_count() const noexcept;

    Vector forward(const Vector& x) const;

    /// Adds d(loss)/d(param) into `grads` (laid out like parameters()) and
    /// returns the loss.
    double backprop(const Vector& x, std::size_t target, std::vector<Matrix>& grads) const;

    std::vector<Matrix*> parameters();

    std::vector<double> fit(std::span<const LabeledInput> data, const TrainConfig& config);

private:
    std::vector<std::size_t> widths_;
    std::vector<Matrix> weights_;  // out x in
    std::vector<Matrix> biases_;   // out x 1
};

/// One scalar weight per learner (sum_k w_k x_k, a length-N vector)
/// followed by a fully connected N -> N layer and softmax.
class WeightedAverageNetwork {
public:
    WeightedAverageNetwork(std::size_t n, std::size_t k, std::uint64_t seed);

    std::size_t param_count() const noexcept;
    Vector learner_weights() const { return learner_weights_.col(0); }

    Vector forward(const Vector& x) const;
    double backprop(const Vector& x, std::size_t target, std::vector<Matrix>& grads) const;
    std::vector<Matrix*> parameters();

    std::vector<double> fit(std::span<const LabeledInput> data, const TrainConfig& config);

private:
    Vector combine(const Vector& x) const;

    std::size_t n_;
    std::size_t k_;
    Matrix learner_weights_;  // k x 1
    Matrix output_weights_;
    Matrix output_bias_;
};

}  // namespace afa
