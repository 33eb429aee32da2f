#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace afa {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

inline constexpr double kDefaultEpsilon = 1e-3;
inline constexpr double kDefaultPowerQ = 2.0;
// Components that leave a domain by at most this much (scaled by the
// magnitude of the bound) are clamped back instead of rejected.
inline constexpr double kDomainSlack = 1e-9;

enum class MeanFamily { Arithmetic, Geometric, Harmonic, PowerQ };

/// Choice of conjugation function f for a quasi-arithmetic mean
/// f^-1(sum_k w_k f(x_k)). Geometric and harmonic carry a smoothing
/// epsilon in (0, 1); power-q carries its exponent q > 0.
class MeanKind {
public:
    static MeanKind arithmetic() { return MeanKind(MeanFamily::Arithmetic, 0.0); }
    static MeanKind geometric(double epsilon = kDefaultEpsilon);
    static MeanKind harmonic(double epsilon = kDefaultEpsilon);
    static MeanKind power(double q = kDefaultPowerQ);

    /// Parses "arithmetic", "geometric[:eps]", "harmonic[:eps]", "power[:q]".
    static MeanKind parse(std::string_view text);

    MeanFamily family() const noexcept { return family_; }
    double epsilon() const noexcept { return param_; }
    double q() const noexcept { return param_; }

    /// Round-trips through parse() bit-exactly.
    std::string to_string() const;

    friend bool operator==(const MeanKind&, const MeanKind&) = default;

private:
    MeanKind(MeanFamily family, double param) : family_(family), param_(param) {}

    MeanFamily family_;
    double param_;
};

/// Leaky hyperbolic function: 1/(x+eps) - eps on [0, 1/eps - eps], extended
/// linearly (C^1) on both sides. A decreasing involution of the real line.
double leaky_hyperbolic(double x, double epsilon);
double leaky_hyperbolic_derivative(double x, double epsilon);

// Scalar conjugation functions. Domain checks happen in the vector forms.
double f_scalar(const MeanKind& kind, double x);
double f_inv_scalar(const MeanKind& kind, double y);
double f_inv_derivative(const MeanKind& kind, double y);

/// Component-wise f. Rejects components outside f's domain (beyond the
/// clamping slack) with an InputError naming the index.
Vector apply_f(const MeanKind& kind, const Vector& x);

/// Component-wise f^-1 with the same domain policy.
Vector apply_f_inv(const MeanKind& kind, const Vector& y);

/// Clamps y into the domain of f^-1 when it is off by at most the slack;
/// returns false when the violation is larger.
bool clamp_to_inverse_domain(const MeanKind& kind, double& y);

/// Nonnegative weights summing to one.
class SimplexWeights {
public:
    explicit SimplexWeights(std::vector<double> weights);
    static SimplexWeights uniform(std::size_t k);

    std::size_t size() const noexcept { return w_.size(); }
    double operator[](std::size_t i) const { return w_[i]; }
    const std::vector<double>& values() const noexcept { return w_; }

private:
    std::vector<double> w_;
};

/// Exact weighted mean from the textbook formulas, without epsilon
/// smoothing. Used as the reference for the conjugated forms.
Vector closed_form_mean(const MeanKind& kind, const SimplexWeights& weights,
                        const std::vector<Vector>& inputs);

}  // namespace afa
