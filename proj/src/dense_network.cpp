#include "afa/dense_network.hpp"

#include <cmath>
#include <numeric>
#include <random>

#include "afa/error.hpp"
#include "afa/rng.hpp"

namespace afa {

namespace {

double log_sum_exp(const Vector& z) {
    const double m = z.maxCoeff();
    return m + std::log((z.array() - m).exp().sum());
}

Matrix he_normal(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
    std::normal_distribution<double> dist(0.0, std::sqrt(2.0 / static_cast<double>(cols)));
    Matrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r)
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = dist(rng);
    return m;
}

// Mini-batch Adam loop shared by the stacked fusers; mirrors the AFA
// trainer's shuffling so that all fusers see the same sample order.
template <typename Model>
std::vector<double> fit_adam(Model& model, std::span<const LabeledInput> data,
                             const TrainConfig& config, std::size_t n_classes,
                             std::size_t input_size) {
    config.validate();
    if (data.empty()) throw InputError("training set is empty");
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].label >= n_classes)
            throw InputError("sample " + std::to_string(i) + " has label out of range");
        if (static_cast<std::size_t>(data[i].x.size()) != input_size)
            throw InputError("sample " + std::to_string(i) + " has wrong input length");
    }

    std::vector<Matrix*> params = model.parameters();
    std::vector<AdamState> states;
    for (Matrix* p : params) states.emplace_back(p->rows(), p->cols());

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed);

    std::vector<double> trace;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            std::vector<Matrix> grads;
            for (Matrix* p : params) grads.push_back(Matrix::Zero(p->rows(), p->cols()));
            for (std::size_t b = start; b < stop; ++b)
                epoch_loss += model.backprop(data[order[b]].x, data[order[b]].label, grads);
            const double scale = 1.0 / static_cast<double>(stop - start);
            ++step;
            for (std::size_t i = 0; i < params.size(); ++i) {
                if (!grads[i].allFinite()) throw TrainingError(epoch, "non-finite gradient");
                states[i].step(*params[i], grads[i] * scale, config, step);
            }
        }
        const double mean_loss = epoch_loss / static_cast<double>(data.size());
        if (!std::isfinite(mean_loss)) throw TrainingError(epoch, "loss diverged");
        trace.push_back(mean_loss);
    }
    return trace;
}

}  // namespace

DenseNetwork::DenseNetwork(std::vector<std::size_t> widths, std::uint64_t seed)
    : widths_(std::move(widths)) {
    if (widths_.size() < 2) throw InputError("dense network needs input and output widths");
    for (std::size_t w : widths_)
        if (w == 0) throw InputError("dense network widths must be positive");
    Rng rng(seed);
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
        const auto in = static_cast<Eigen::Index>(widths_[l]);
        const auto out = static_cast<Eigen::Index>(widths_[l + 1]);
        weights_.push_back(he_normal(out, in, rng));
        biases_.push_back(Matrix::Zero(out, 1));
    }
}

std::size_t DenseNetwork::param_count() const noexcept {
    std::size_t count = 0;
    for (std::size_t l = 0; l + 1 < widths_.size(); ++l) count += (widths_[l] + 1) * widths_[l + 1];
    return count;
}

Vector DenseNetwork::forward(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != widths_.front())
        throw InputError("dense network input has wrong length");
    Vector a = x;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        Vector z = weights_[l] * a + biases_[l].col(0);
        a = l + 1 < weights_.size() ? Vector(z.cwiseMax(0.0)) : z;
    }
    return softmax(a);
}

double DenseNetwork::backprop(const Vector& x, std::size_t target, std::vector<Matrix>& grads) const {
    std::vector<Vector> activations{x};
    std::vector<Vector> pre;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        pre.push_back(weights_[l] * activations.back() + biases_[l].col(0));
        activations.push_back(l + 1 < weights_.size() ? Vector(pre.back().cwiseMax(0.0)) : pre.back());
    }
    const Vector& logits = activations.back();
    const double loss = log_sum_exp(logits) - logits[static_cast<Eigen::Index>(target)];

    Vector delta = softmax(logits);
    delta[static_cast<Eigen::Index>(target)] -= 1.0;
    for (std::size_t l = weights_.size(); l-- > 0;) {
        grads[2 * l] += delta * activations[l].transpose();
        grads[2 * l + 1] += delta;
        if (l == 0) break;
        Vector back = weights_[l].transpose() * delta;
        delta = back.array() * (pre[l - 1].array() > 0.0).cast<double>();
    }
    return loss;
}

std::vector<Matrix*> DenseNetwork::parameters() {
    std::vector<Matrix*> out;
    for (std::size_t l = 0; l < weights_.size(); ++l) {
        out.push_back(&weights_[l]);
        out.push_back(&biases_[l]);
    }
    return out;
}

std::vector<double> DenseNetwork::fit(std::span<const LabeledInput> data, const TrainConfig& config) {
    return fit_adam(*this, data, config, widths_.back(), widths_.front());
}

WeightedAverageNetwork::WeightedAverageNetwork(std::size_t n, std::size_t k, std::uint64_t seed)
    : n_(n), k_(k) {
    if (n == 0 || k == 0) throw InputError("weighted average network needs n, k >= 1");
    Rng rng(seed);
    learner_weights_ = Matrix::Constant(static_cast<Eigen::Index>(k), 1, 1.0 / static_cast<double>(k));
    output_weights_ = he_normal(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n), rng);
    output_bias_ = Matrix::Zero(static_cast<Eigen::Index>(n), 1);
}

std::size_t WeightedAverageNetwork::param_count() const noexcept { return k_ + n_ * n_ + n_; }

Vector WeightedAverageNetwork::combine(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != n_ * k_)
        throw InputError("weighted average input has wrong length");
    const auto n = static_cast<Eigen::Index>(n_);
    Vector s = Vector::Zero(n);
    for (std::size_t k = 0; k < k_; ++k)
        s += learner_weights_(static_cast<Eigen::Index>(k), 0) * x.segment(static_cast<Eigen::Index>(k) * n, n);
    return s;
}

Vector WeightedAverageNetwork::forward(const Vector& x) const {
    return softmax(output_weights_ * combine(x) + output_bias_.col(0));
}

double WeightedAverageNetwork::backprop(const Vector& x, std::size_t target,
                                        std::vector<Matrix>& grads) const {
    const Vector s = combine(x);
    const Vector logits = output_weights_ * s + output_bias_.col(0);
    const double loss = log_sum_exp(logits) - logits[static_cast<Eigen::Index>(target)];
    Vector delta = softmax(logits);
    delta[static_cast<Eigen::Index>(target)] -= 1.0;

    grads[1] += delta * s.transpose();
    grads[2] += delta;
    const Vector ds = output_weights_.transpose() * delta;
    const auto n = static_cast<Eigen::Index>(n_);
    for (std::size_t k = 0; k < k_; ++k)
        grads[0](static_cast<Eigen::Index>(k), 0) += ds.dot(x.segment(static_cast<Eigen::Index>(k) * n, n));
    return loss;
}

std::vector<Matrix*> WeightedAverageNetwork::parameters() {
    return {&learner_weights_, &output_weights_, &output_bias_};
}

std::vector<double> WeightedAverageNetwork::fit(std::span<const LabeledInput> data,
                                                const TrainConfig& config) {
    return fit_adam(*this, data, config, n_, n_ * k_);
}

}  // namespace afa
