#pragma once

#include <cstddef>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "afa/means.hpp"
#include "afa/optim.hpp"

namespace afa {

enum class Activation { Softmax, Identity };

std::string to_string(Activation activation);
Activation parse_activation(std::string_view text);

/// One f-average: x -> f^-1(W f(x)) with W an N x (K*N) row-stochastic matrix.
struct FAverageBranch {
    MeanKind kind;
    Matrix weights;
};

/// A stacked input (K concatenated prediction vectors) with its class.
struct LabeledInput {
    Vector x;
    std::size_t label = 0;
};

/// Checks the stacked-input invariants: length k*n, components in [0, 1],
/// every block summing to 1 within 1e-6.
void validate_stacked_input(const Vector& x, std::size_t n, std::size_t k);

/// Evaluates one branch. `index` only labels errors.
Vector branch_forward(const FAverageBranch& branch, const Vector& x, std::size_t index = 0);

/// Per-parameter gradients, laid out like the network.
struct AfaGradients {
    std::vector<Matrix> weights;
    Matrix aggregation;
    double loss = 0.0;

    double squared_norm() const;
};

/// Aggregated f-averages: J f-average branches over the same stacked input,
/// mixed by a nonnegative N x (N*J) matrix A and an output activation.
class AfaNetwork {
public:
    AfaNetwork(std::vector<FAverageBranch> branches, Matrix aggregation, Activation activation);

    /// W_j = [I | ... | I] / K for every branch, A = [I | ... | I] / J. With a
    /// single arithmetic branch and identity output this is the plain mean.
    static AfaNetwork uniform(std::size_t n, std::size_t k, const std::vector<MeanKind>& kinds,
                              Activation activation);

    std::size_t n_classes() const noexcept { return n_; }
    std::size_t n_learners() const noexcept { return k_; }
    std::size_t n_branches() const noexcept { return branches_.size(); }
    Activation activation() const noexcept { return activation_; }

    const std::vector<FAverageBranch>& branches() const noexcept { return branches_; }
    const FAverageBranch& branch(std::size_t j) const { return branches_.at(j); }
    const Matrix& aggregation() const noexcept { return aggregation_; }

    Matrix& branch_weights(std::size_t j) { return branches_.at(j).weights; }
    Matrix& aggregation() noexcept { return aggregation_; }

    /// J * N^2 * (K + 1).
    std::size_t param_count() const noexcept;

    Vector forward(const Vector& x) const;

    /// Cross-entropy of the softmax output against `target`.
    double loss(const Vector& x, std::size_t target) const;

    /// Analytic cross-entropy gradients for every W_j and A. Requires softmax.
    AfaGradients gradients(const Vector& x, std::size_t target) const;

    /// Throws InputError when a W_j row leaves the simplex (tolerance `tol`)
    /// or A has a negative entry.
    void check_constraints(double tol = 1e-9) const;

    void save(std::ostream& out) const;
    static AfaNetwork load(std::istream& in);

private:
    void check_input(const Vector& x) const;

    std::vector<FAverageBranch> branches_;
    Matrix aggregation_;
    Activation activation_;
    std::size_t n_ = 0;
    std::size_t k_ = 0;
};

/// Free-function spelling used throughout the harness.
inline std::size_t param_count(const AfaNetwork& model) { return model.param_count(); }

/// Called after every optimizer step (step is 1-based).
using StepObserver = std::function<void(const AfaNetwork&, std::size_t step)>;

struct AfaTrainResult {
    AfaNetwork model;
    std::vector<double> loss_trace;  // mean per-sample loss of each epoch
};

/// Mini-batch Adam on cross-entropy. After each update the rows of every W_j
/// are projected onto the simplex and A is clamped to be nonnegative; the
/// constraints are re-checked before `observer` runs. Deterministic for a
/// given (model, data order, config).
AfaTrainResult train(AfaNetwork model, std::span<const LabeledInput> data,
                     const TrainConfig& config, const StepObserver& observer = {});

Vector softmax(const Vector& z);

}  // namespace afa
