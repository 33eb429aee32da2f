#include "afa/afa_model.hpp"

#include <cmath>
#include <numeric>

#include "afa/error.hpp"
#include "afa/rng.hpp"
#include "afa/simplex.hpp"

namespace afa {

std::string to_string(Activation activation) {
    return activation == Activation::Softmax ? "softmax" : "identity";
}

Activation parse_activation(std::string_view text) {
    if (text == "softmax") return Activation::Softmax;
    if (text == "identity") return Activation::Identity;
    throw InputError("unknown activation '" + std::string(text) + "'");
}

Vector softmax(const Vector& z) {
    Vector e = (z.array() - z.maxCoeff()).exp();
    return e / e.sum();
}

namespace {

double log_sum_exp(const Vector& z) {
    const double m = z.maxCoeff();
    return m + std::log((z.array() - m).exp().sum());
}

struct BranchTrace {
    Vector fx;      // f_j(x), length K*N
    Vector u;       // W_j f_j(x), clamped into the inverse domain
    Vector output;  // f_j^-1(u)
};

BranchTrace trace_branch(const FAverageBranch& branch, const Vector& x, std::size_t index) {
    BranchTrace t;
    try {
        t.fx = apply_f(branch.kind, x);
    } catch (const InputError& e) {
        throw DomainError(index, e.what());
    }
    t.u = branch.weights * t.fx;
    t.output.resize(t.u.size());
    for (Eigen::Index i = 0; i < t.u.size(); ++i) {
        if (!clamp_to_inverse_domain(branch.kind, t.u[i]))
            throw DomainError(index, "pre-activation " + std::to_string(i) +
                                         " outside the inverse domain of " +
                                         branch.kind.to_string());
        t.output[i] = f_inv_scalar(branch.kind, t.u[i]);
    }
    return t;
}

}  // namespace

void validate_stacked_input(const Vector& x, std::size_t n, std::size_t k) {
    if (static_cast<std::size_t>(x.size()) != n * k)
        throw InputError("stacked input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n * k));
    for (Eigen::Index i = 0; i < x.size(); ++i)
        if (!(x[i] >= 0.0 && x[i] <= 1.0))
            throw InputError("stacked input component " + std::to_string(i) + " outside [0, 1]");
    for (std::size_t b = 0; b < k; ++b) {
        const double s = x.segment(static_cast<Eigen::Index>(b * n), static_cast<Eigen::Index>(n)).sum();
        if (std::abs(s - 1.0) > 1e-6)
            throw InputError("stacked input block " + std::to_string(b) + " sums to " +
                             std::to_string(s));
    }
}

Vector branch_forward(const FAverageBranch& branch, const Vector& x, std::size_t index) {
    if (x.size() != branch.weights.cols())
        throw InputError("branch input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(branch.weights.cols()));
    return trace_branch(branch, x, index).output;
}

double AfaGradients::squared_norm() const {
    double s = aggregation.squaredNorm();
    for (const auto& w : weights) s += w.squaredNorm();
    return s;
}

AfaNetwork::AfaNetwork(std::vector<FAverageBranch> branches, Matrix aggregation,
                       Activation activation)
    : branches_(std::move(branches)), aggregation_(std::move(aggregation)), activation_(activation) {
    if (branches_.empty()) throw InputError("AFA network needs at least one branch");
    n_ = static_cast<std::size_t>(branches_.front().weights.rows());
    if (n_ == 0) throw InputError("AFA network needs at least one class");
    const auto cols = static_cast<std::size_t>(branches_.front().weights.cols());
    if (cols % n_ != 0 || cols == 0)
        throw InputError("branch weight width must be a positive multiple of N");
    k_ = cols / n_;
    for (std::size_t j = 0; j < branches_.size(); ++j) {
        const auto& w = branches_[j].weights;
        if (static_cast<std::size_t>(w.rows()) != n_ || static_cast<std::size_t>(w.cols()) != cols)
            throw InputError("branch " + std::to_string(j) + " has shape " +
                             std::to_string(w.rows()) + "x" + std::to_string(w.cols()) +
                             ", expected " + std::to_string(n_) + "x" + std::to_string(cols));
    }
    if (static_cast<std::size_t>(aggregation_.rows()) != n_ ||
        static_cast<std::size_t>(aggregation_.cols()) != n_ * branches_.size())
        throw InputError("aggregation matrix must be N x (N*J)");
    check_constraints();
}

AfaNetwork AfaNetwork::uniform(std::size_t n, std::size_t k, const std::vector<MeanKind>& kinds,
                               Activation activation) {
    if (n == 0 || k == 0 || kinds.empty())
        throw InputError("uniform AFA needs n >= 1, k >= 1 and at least one mean kind");
    const auto nn = static_cast<Eigen::Index>(n);
    Matrix w(nn, nn * static_cast<Eigen::Index>(k));
    for (std::size_t b = 0; b < k; ++b)
        w.middleCols(static_cast<Eigen::Index>(b) * nn, nn) =
            Matrix::Identity(nn, nn) / static_cast<double>(k);
    std::vector<FAverageBranch> branches;
    branches.reserve(kinds.size());
    for (const auto& kind : kinds) branches.push_back({kind, w});

    const auto j_count = static_cast<Eigen::Index>(kinds.size());
    Matrix a(nn, nn * j_count);
    for (Eigen::Index j = 0; j < j_count; ++j)
        a.middleCols(j * nn, nn) = Matrix::Identity(nn, nn) / static_cast<double>(j_count);
    return AfaNetwork(std::move(branches), std::move(a), activation);
}

std::size_t AfaNetwork::param_count() const noexcept {
    return branches_.size() * n_ * n_ * (k_ + 1);
}

void AfaNetwork::check_input(const Vector& x) const {
    if (static_cast<std::size_t>(x.size()) != n_ * k_)
        throw InputError("input has length " + std::to_string(x.size()) + ", expected " +
                         std::to_string(n_ * k_));
}

Vector AfaNetwork::forward(const Vector& x) const {
    check_input(x);
    const auto nn = static_cast<Eigen::Index>(n_);
    Vector stacked(nn * static_cast<Eigen::Index>(branches_.size()));
    for (std::size_t j = 0; j < branches_.size(); ++j)
        stacked.segment(static_cast<Eigen::Index>(j) * nn, nn) = trace_branch(branches_[j], x, j).output;
    Vector z = aggregation_ * stacked;
    return activation_ == Activation::Softmax ? softmax(z) : z;
}

double AfaNetwork::loss(const Vector& x, std::size_t target) const {
    check_input(x);
    if (target >= n_) throw InputError("target class out of range");
    const auto nn = static_cast<Eigen::Index>(n_);
    Vector stacked(nn * static_cast<Eigen::Index>(branches_.size()));
    for (std::size_t j = 0; j < branches_.size(); ++j)
        stacked.segment(static_cast<Eigen::Index>(j) * nn, nn) = trace_branch(branches_[j], x, j).output;
    const Vector z = aggregation_ * stacked;
    return log_sum_exp(z) - z[static_cast<Eigen::Index>(target)];
}

AfaGradients AfaNetwork::gradients(const Vector& x, std::size_t target) const {
    if (activation_ != Activation::Softmax)
        throw InputError("cross-entropy gradients need a softmax output");
    check_input(x);
    if (target >= n_) throw InputError("target class out of range");

    const auto nn = static_cast<Eigen::Index>(n_);
    const std::size_t j_count = branches_.size();
    std::vector<BranchTrace> traces;
    traces.reserve(j_count);
    Vector stacked(nn * static_cast<Eigen::Index>(j_count));
    for (std::size_t j = 0; j < j_count; ++j) {
        traces.push_back(trace_branch(branches_[j], x, j));
        stacked.segment(static_cast<Eigen::Index>(j) * nn, nn) = traces.back().output;
    }
    const Vector z = aggregation_ * stacked;

    AfaGradients g;
    g.loss = log_sum_exp(z) - z[static_cast<Eigen::Index>(target)];
    Vector delta = softmax(z);
    delta[static_cast<Eigen::Index>(target)] -= 1.0;

    g.aggregation = delta * stacked.transpose();
    if (!g.aggregation.allFinite() || !std::isfinite(g.loss))
        throw NumericError("non-finite gradient in the aggregation layer");

    g.weights.reserve(j_count);
    for (std::size_t j = 0; j < j_count; ++j) {
        const auto& t = traces[j];
        const Vector upstream =
            aggregation_.middleCols(static_cast<Eigen::Index>(j) * nn, nn).transpose() * delta;
        Vector du(nn);
        for (Eigen::Index i = 0; i < nn; ++i)
            du[i] = upstream[i] * f_inv_derivative(branches_[j].kind, t.u[i]);
        Matrix gw = du * t.fx.transpose();
        if (!gw.allFinite())
            throw NumericError("non-finite gradient in branch " + std::to_string(j) + " (" +
                               branches_[j].kind.to_string() + ")");
        g.weights.push_back(std::move(gw));
    }
    return g;
}

void AfaNetwork::check_constraints(double tol) const {
    for (std::size_t j = 0; j < branches_.size(); ++j) {
        const auto& w = branches_[j].weights;
        if (!w.allFinite()) throw InputError("branch " + std::to_string(j) + " has non-finite weights");
        if (!is_row_stochastic(w, tol))
            throw InputError("branch " + std::to_string(j) + " weights are not row-stochastic");
    }
    if (!aggregation_.allFinite() || (aggregation_.array() < 0.0).any())
        throw InputError("aggregation matrix must be finite and nonnegative");
}

AfaTrainResult train(AfaNetwork model, std::span<const LabeledInput> data,
                     const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    if (data.empty()) throw InputError("training set is empty");
    if (model.activation() != Activation::Softmax)
        throw InputError("training uses cross-entropy and needs a softmax output");
    const std::size_t n = model.n_classes();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data[i].label >= n)
            throw InputError("sample " + std::to_string(i) + " has label out of range");
        if (static_cast<std::size_t>(data[i].x.size()) != n * model.n_learners())
            throw InputError("sample " + std::to_string(i) + " has wrong input length");
    }

    const std::size_t j_count = model.n_branches();
    std::vector<AdamState> w_states;
    for (std::size_t j = 0; j < j_count; ++j)
        w_states.emplace_back(model.branch(j).weights.rows(), model.branch(j).weights.cols());
    AdamState a_state(model.aggregation().rows(), model.aggregation().cols());

    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(config.seed);

    AfaTrainResult result{model, {}};
    AfaNetwork& m = result.model;
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
        shuffle(order, rng);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
            const std::size_t stop = std::min(order.size(), start + config.batch_size);
            AfaGradients sum;
            for (std::size_t b = start; b < stop; ++b) {
                const auto& sample = data[order[b]];
                AfaGradients g;
                try {
                    g = m.gradients(sample.x, sample.label);
                } catch (const Error& e) {
                    throw TrainingError(epoch, e.what());
                }
                epoch_loss += g.loss;
                if (b == start) {
                    sum = std::move(g);
                } else {
                    sum.aggregation += g.aggregation;
                    for (std::size_t j = 0; j < j_count; ++j) sum.weights[j] += g.weights[j];
                }
            }
            const double scale = 1.0 / static_cast<double>(stop - start);
            ++step;
            try {
                for (std::size_t j = 0; j < j_count; ++j) {
                    w_states[j].step(m.branch_weights(j), sum.weights[j] * scale, config, step);
                    m.branch_weights(j) = project_rows(m.branch_weights(j));
                }
                a_state.step(m.aggregation(), sum.aggregation * scale, config, step);
                m.aggregation() = clamp_nonneg(m.aggregation());
                m.check_constraints();
            } catch (const InputError& e) {
                throw TrainingError(epoch, e.what());
            }
            if (observer) observer(m, step);
        }
        const double mean_loss = epoch_loss / static_cast<double>(data.size());
        if (!std::isfinite(mean_loss)) throw TrainingError(epoch, "loss diverged");
        result.loss_trace.push_back(mean_loss);
    }
    return result;
}

}  // namespace afa
