#include "afa/gradcheck.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "afa/error.hpp"

namespace afa {

AfaNetwork random_network(std::size_t n, std::size_t k, const std::vector<MeanKind>& kinds, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto rows = static_cast<Eigen::Index>(n);
    std::vector<FAverageBranch> branches;
    for (const auto& kind : kinds) {
        Matrix w(rows, rows * static_cast<Eigen::Index>(k));
        for (Eigen::Index r = 0; r < w.rows(); ++r) {
            for (Eigen::Index c = 0; c < w.cols(); ++c) w(r, c) = unit(rng);
            w.row(r) /= w.row(r).sum();
        }
        branches.push_back({kind, std::move(w)});
    }
    Matrix a(rows, rows * static_cast<Eigen::Index>(kinds.size()));
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) a(r, c) = 2.0 * unit(rng);
    return AfaNetwork(std::move(branches), std::move(a), Activation::Softmax);
}

Vector random_stacked_input(std::size_t n, std::size_t k, Rng& rng) {
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const auto nn = static_cast<Eigen::Index>(n);
    Vector x(nn * static_cast<Eigen::Index>(k));
    for (std::size_t b = 0; b < k; ++b) {
        auto block = x.segment(static_cast<Eigen::Index>(b) * nn, nn);
        for (Eigen::Index i = 0; i < nn; ++i) block[i] = unit(rng);
        block /= block.sum();
    }
    return x;
}

AfaGradients numeric_gradients(const AfaNetwork& model, const Vector& x, std::size_t target,
                               double step) {
    AfaNetwork probe = model;
    auto diff = [&](double& entry) {
        const double saved = entry;
        entry = saved + step;
        const double up = probe.loss(x, target);
        entry = saved - step;
        const double down = probe.loss(x, target);
        entry = saved;
        return (up - down) / (2.0 * step);
    };

    AfaGradients g;
    g.loss = model.loss(x, target);
    for (std::size_t j = 0; j < model.n_branches(); ++j) {
        Matrix& w = probe.branch_weights(j);
        Matrix gw(w.rows(), w.cols());
        for (Eigen::Index r = 0; r < w.rows(); ++r)
            for (Eigen::Index c = 0; c < w.cols(); ++c) gw(r, c) = diff(w(r, c));
        g.weights.push_back(std::move(gw));
    }
    Matrix& a = probe.aggregation();
    g.aggregation.resize(a.rows(), a.cols());
    for (Eigen::Index r = 0; r < a.rows(); ++r)
        for (Eigen::Index c = 0; c < a.cols(); ++c) g.aggregation(r, c) = diff(a(r, c));
    return g;
}

double max_relative_error(const AfaGradients& analytic, const AfaGradients& numeric) {
    if (analytic.weights.size() != numeric.weights.size())
        throw InputError("gradient structures differ");
    double worst = 0.0;
    auto scan = [&](const Matrix& a, const Matrix& b) {
        for (Eigen::Index r = 0; r < a.rows(); ++r)
            for (Eigen::Index c = 0; c < a.cols(); ++c) {
                const double denom = std::max({std::abs(a(r, c)), std::abs(b(r, c)), kGradRelativeFloor});
                worst = std::max(worst, std::abs(a(r, c) - b(r, c)) / denom);
            }
    };
    for (std::size_t j = 0; j < analytic.weights.size(); ++j) scan(analytic.weights[j], numeric.weights[j]);
    scan(analytic.aggregation, numeric.aggregation);
    return worst;
}

std::vector<GradCheckLine> grad_check(const GradCheckOptions& options) {
    if (options.n < 1 || options.n > 8 || options.k < 1 || options.k > 4 || options.j < 1 || options.j > 4)
        throw InputError("grad_check supports 1 <= N <= 8, 1 <= K <= 4, 1 <= J <= 4");
    std::vector<GradCheckLine> lines;
    for (std::size_t idx = 0; idx < options.kinds.size(); ++idx) {
        const MeanKind& kind = options.kinds[idx];
        Rng rng(mix_seed(options.seed, idx));
        GradCheckLine line{kind, 0.0, true};
        for (std::size_t t = 0; t < options.trials; ++t) {
            const AfaNetwork model =
                random_network(options.n, options.k, std::vector<MeanKind>(options.j, kind), rng);
            const Vector x = random_stacked_input(options.n, options.k, rng);
            const std::size_t target = uniform_index(rng, options.n);
            AfaGradients analytic = model.gradients(x, target);
            if (options.corrupt) analytic.aggregation(0, 0) += 0.1;
            const AfaGradients numeric = numeric_gradients(model, x, target, options.step);
            line.max_relative_error = std::max(line.max_relative_error, max_relative_error(analytic, numeric));
        }
        line.passed = line.max_relative_error < options.tolerance;
        lines.push_back(line);
    }
    return lines;
}

}  // namespace afa
