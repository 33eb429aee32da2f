#include "afa/baselines.hpp"

#include <cmath>

#include "afa/dense_network.hpp"
#include "afa/error.hpp"

namespace afa {

ShallowNN ShallowNN::matching_afa(std::size_t n, std::size_t k, std::size_t j) {
    // params(h) = h * (K*N + 1) + N * (h + 1)
    const double target = static_cast<double>(j * n * n * (k + 1));
    const double per_unit = static_cast<double>(k * n + 1 + n);
    const double h = std::round((target - static_cast<double>(n)) / per_unit);
    return ShallowNN{static_cast<std::size_t>(std::max(1.0, h))};
}

DeepNN DeepNN::interpolated(std::size_t n, std::size_t k) {
    DeepNN net;
    const double in = static_cast<double>(k * n);
    const double ratio = static_cast<double>(n) / in;
    for (int layer = 1; layer <= 4; ++layer) {
        const double w = std::round(in * std::pow(ratio, layer / 5.0));
        net.hidden.push_back(static_cast<std::size_t>(std::max(1.0, w)));
    }
    return net;
}

std::size_t argmax(const Vector& v) {
    if (v.size() == 0) throw InputError("argmax of an empty vector");
    Eigen::Index best = 0;
    for (Eigen::Index i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return static_cast<std::size_t>(best);
}

Vector mean_fusion(const MeanKind& kind, const std::vector<Vector>& outputs) {
    if (outputs.empty()) throw InputError("mean_fusion needs at least one output");
    const Eigen::Index n = outputs.front().size();
    for (std::size_t k = 0; k < outputs.size(); ++k) {
        if (outputs[k].size() != n) throw InputError("mean_fusion: outputs differ in length");
        if ((outputs[k].array() < 0.0).any())
            throw InputError("mean_fusion: negative component in output " + std::to_string(k));
    }
    const auto weights = SimplexWeights::uniform(outputs.size());

    auto floored = [&] {
        std::vector<Vector> out = outputs;
        for (auto& v : out) v = v.cwiseMax(kHarmonicZeroFloor);
        return out;
    };

    Vector fused = kind.family() == MeanFamily::Harmonic
                       ? closed_form_mean(kind, weights, floored())
                       : closed_form_mean(kind, weights, outputs);
    if (!(fused.sum() > 0.0)) fused = closed_form_mean(kind, weights, floored());
    return fused / fused.sum();
}

std::size_t majority_vote(const std::vector<Vector>& outputs) {
    if (outputs.empty()) throw InputError("majority_vote needs at least one output");
    Eigen::Index n = 0;
    for (const auto& v : outputs) n = std::max(n, v.size());
    std::vector<std::size_t> votes(static_cast<std::size_t>(n), 0);
    for (const auto& v : outputs) ++votes[argmax(v)];
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;
    return best;
}

Vector base_only_predict(const Vector& base_output, std::size_t n_total) {
    const auto n_base = static_cast<std::size_t>(base_output.size());
    if (n_base > n_total) throw InputError("base output longer than the total class count");
    Vector out = Vector::Zero(static_cast<Eigen::Index>(n_total));
    out.head(base_output.size()) = base_output;
    return out;
}

std::vector<Vector> unstack(const Vector& x, std::size_t n, std::size_t k) {
    if (static_cast<std::size_t>(x.size()) != n * k) throw InputError("unstack: length mismatch");
    std::vector<Vector> out;
    out.reserve(k);
    for (std::size_t b = 0; b < k; ++b)
        out.emplace_back(x.segment(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n)));
    return out;
}

std::vector<Vector> nn_fuser_train_predict(const FusionStrategy& strategy,
                                           std::span<const LabeledInput> train,
                                           std::span<const Vector> test, std::size_t n,
                                           std::size_t k, const TrainConfig& config) {
    auto run = [&](auto& net) {
        net.fit(train, config);
        std::vector<Vector> out;
        out.reserve(test.size());
        for (const auto& x : test) out.push_back(net.forward(x));
        return out;
    };

    if (const auto* s = std::get_if<ShallowNN>(&strategy)) {
        DenseNetwork net({k * n, s->hidden, n}, config.seed);
        return run(net);
    }
    if (const auto* d = std::get_if<DeepNN>(&strategy)) {
        if (d->hidden.size() != 4) throw InputError("deep fuser needs four hidden widths");
        std::vector<std::size_t> widths{k * n};
        widths.insert(widths.end(), d->hidden.begin(), d->hidden.end());
        widths.push_back(n);
        DenseNetwork net(widths, config.seed);
        return run(net);
    }
    if (std::holds_alternative<WeightedAvgNN>(strategy)) {
        WeightedAverageNetwork net(n, k, config.seed);
        return run(net);
    }
    throw InputError("nn_fuser_train_predict: strategy is not a neural fuser");
}

}  // namespace afa
