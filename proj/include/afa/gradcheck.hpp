#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "afa/afa_model.hpp"
#include "afa/rng.hpp"

namespace afa {

/// Random model for verification: row-stochastic W_j drawn by normalizing
/// uniform(0, 1) rows, A uniform in [0, 2), softmax output.
AfaNetwork random_network(std::size_t n, std::size_t k, const std::vector<MeanKind>& kinds, Rng& rng);

/// K concatenated probability vectors, each a normalized uniform(0, 1) draw.
Vector random_stacked_input(std::size_t n, std::size_t k, Rng& rng);

/// Central finite differences of the loss with respect to every W_j and A
/// entry. Perturbs parameters directly, without projecting.
AfaGradients numeric_gradients(const AfaNetwork& model, const Vector& x, std::size_t target,
                               double step = 1e-6);

/// Denominator floor of the relative error below which errors are
/// effectively judged in absolute terms.
inline constexpr double kGradRelativeFloor = 1e-3;

/// max over entries of |a - b| / max(|a|, |b|, kGradRelativeFloor).
double max_relative_error(const AfaGradients& analytic, const AfaGradients& numeric);

struct GradCheckOptions {
    std::size_t n = 4;
    std::size_t k = 3;
    std::size_t j = 2;
    std::size_t trials = 5;
    double tolerance = 1e-4;
    double step = 1e-6;
    std::uint64_t seed = 0;
    std::vector<MeanKind> kinds = {MeanKind::arithmetic(), MeanKind::geometric(),
                                   MeanKind::harmonic(), MeanKind::power()};
    bool corrupt = false;  // negative control: perturbs one analytic entry
};

struct GradCheckLine {
    MeanKind kind;
    double max_relative_error = 0.0;
    bool passed = false;
};

/// One line per mean kind: `trials` random models with j branches of that
/// kind, every gradient entry compared with central differences.
std::vector<GradCheckLine> grad_check(const GradCheckOptions& options);

}  // namespace afa
