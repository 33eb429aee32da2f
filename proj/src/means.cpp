#include "afa/means.hpp"

#include <charconv>
#include <cmath>
#include <numeric>

#include "afa/error.hpp"

namespace afa {

namespace {

double parse_double(std::string_view text, std::string_view what) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || ptr != text.data() + text.size())
        throw InputError("invalid " + std::string(what) + " '" + std::string(text) + "'");
    return value;
}

std::string format_shortest(double value) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
    return std::string(buf, ptr);
}

void check_epsilon(double epsilon) {
    if (!(epsilon > 0.0 && epsilon < 1.0))
        throw InputError("mean epsilon must lie in (0, 1), got " + format_shortest(epsilon));
}

double harmonic_upper(double epsilon) { return 1.0 / epsilon - epsilon; }

double slack_for(double bound) { return kDomainSlack * std::max(1.0, std::abs(bound)); }

}  // namespace

MeanKind MeanKind::geometric(double epsilon) {
    check_epsilon(epsilon);
    return MeanKind(MeanFamily::Geometric, epsilon);
}

MeanKind MeanKind::harmonic(double epsilon) {
    check_epsilon(epsilon);
    return MeanKind(MeanFamily::Harmonic, epsilon);
}

MeanKind MeanKind::power(double q) {
    if (!(q > 0.0) || !std::isfinite(q))
        throw InputError("power mean exponent must be positive, got " + format_shortest(q));
    return MeanKind(MeanFamily::PowerQ, q);
}

MeanKind MeanKind::parse(std::string_view text) {
    const auto colon = text.find(':');
    const std::string_view name = text.substr(0, colon);
    const bool has_param = colon != std::string_view::npos;
    const std::string_view param = has_param ? text.substr(colon + 1) : std::string_view{};

    if (name == "arithmetic") {
        if (has_param) throw InputError("arithmetic mean takes no parameter");
        return arithmetic();
    }
    if (name == "geometric")
        return geometric(has_param ? parse_double(param, "epsilon") : kDefaultEpsilon);
    if (name == "harmonic")
        return harmonic(has_param ? parse_double(param, "epsilon") : kDefaultEpsilon);
    if (name == "power")
        return power(has_param ? parse_double(param, "exponent") : kDefaultPowerQ);
    throw InputError("unknown mean kind '" + std::string(text) + "'");
}

std::string MeanKind::to_string() const {
    switch (family_) {
        case MeanFamily::Arithmetic: return "arithmetic";
        case MeanFamily::Geometric: return "geometric:" + format_shortest(param_);
        case MeanFamily::Harmonic: return "harmonic:" + format_shortest(param_);
        case MeanFamily::PowerQ: return "power:" + format_shortest(param_);
    }
    return {};
}

double leaky_hyperbolic(double x, double epsilon) {
    const double upper = harmonic_upper(epsilon);
    if (x < 0.0) return -x / (epsilon * epsilon) + upper;
    if (x > upper) return -epsilon * epsilon * (x - upper);
    return 1.0 / (x + epsilon) - epsilon;
}

// At the two joints the middle-branch derivative is used; it matches the
// outer slopes there anyway since the function is C^1.
double leaky_hyperbolic_derivative(double x, double epsilon) {
    const double upper = harmonic_upper(epsilon);
    if (x < 0.0) return -1.0 / (epsilon * epsilon);
    if (x > upper) return -epsilon * epsilon;
    const double s = x + epsilon;
    return -1.0 / (s * s);
}

double f_scalar(const MeanKind& kind, double x) {
    switch (kind.family()) {
        case MeanFamily::Arithmetic: return x;
        case MeanFamily::Geometric: return std::log(x + kind.epsilon());
        case MeanFamily::Harmonic: return leaky_hyperbolic(x, kind.epsilon());
        case MeanFamily::PowerQ: return std::pow(x, kind.q());
    }
    return x;
}

double f_inv_scalar(const MeanKind& kind, double y) {
    switch (kind.family()) {
        case MeanFamily::Arithmetic: return y;
        case MeanFamily::Geometric: return std::exp(y) - kind.epsilon();
        case MeanFamily::Harmonic: return leaky_hyperbolic(y, kind.epsilon());
        case MeanFamily::PowerQ: return std::pow(y, 1.0 / kind.q());
    }
    return y;
}

double f_inv_derivative(const MeanKind& kind, double y) {
    switch (kind.family()) {
        case MeanFamily::Arithmetic: return 1.0;
        case MeanFamily::Geometric: return std::exp(y);
        case MeanFamily::Harmonic: return leaky_hyperbolic_derivative(y, kind.epsilon());
        case MeanFamily::PowerQ: {
            const double inv_q = 1.0 / kind.q();
            return inv_q * std::pow(y, inv_q - 1.0);
        }
    }
    return 1.0;
}

bool clamp_to_inverse_domain(const MeanKind& kind, double& y) {
    if (!std::isfinite(y)) return false;
    switch (kind.family()) {
        case MeanFamily::Arithmetic: return true;
        case MeanFamily::Geometric: {
            const double lower = std::log(kind.epsilon());
            if (y >= lower) return true;
            if (lower - y > slack_for(lower)) return false;
            y = lower;
            return true;
        }
        case MeanFamily::Harmonic: {
            const double upper = harmonic_upper(kind.epsilon());
            if (y <= upper) return true;
            if (y - upper > slack_for(upper)) return false;
            y = upper;
            return true;
        }
        case MeanFamily::PowerQ: {
            if (y >= 0.0) return true;
            if (-y > kDomainSlack) return false;
            y = 0.0;
            return true;
        }
    }
    return true;
}

Vector apply_f(const MeanKind& kind, const Vector& x) {
    const bool needs_nonneg =
        kind.family() == MeanFamily::Geometric || kind.family() == MeanFamily::PowerQ;
    Vector out(x.size());
    for (Eigen::Index i = 0; i < x.size(); ++i) {
        double v = x[i];
        if (!std::isfinite(v))
            throw InputError("non-finite component at index " + std::to_string(i));
        if (needs_nonneg && v < 0.0) {
            if (-v > kDomainSlack)
                throw InputError(kind.to_string() + ": negative component at index " +
                                 std::to_string(i));
            v = 0.0;
        }
        out[i] = f_scalar(kind, v);
    }
    return out;
}

Vector apply_f_inv(const MeanKind& kind, const Vector& y) {
    Vector out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        double v = y[i];
        if (!clamp_to_inverse_domain(kind, v))
            throw InputError(kind.to_string() + ": component at index " + std::to_string(i) +
                             " outside the inverse domain");
        out[i] = f_inv_scalar(kind, v);
    }
    return out;
}

SimplexWeights::SimplexWeights(std::vector<double> weights) : w_(std::move(weights)) {
    if (w_.empty()) throw InputError("simplex weights must be non-empty");
    for (std::size_t i = 0; i < w_.size(); ++i)
        if (!(w_[i] >= 0.0)) throw InputError("negative weight at index " + std::to_string(i));
    const double total = std::accumulate(w_.begin(), w_.end(), 0.0);
    if (std::abs(total - 1.0) > 1e-9) throw InputError("weights must sum to 1");
}

SimplexWeights SimplexWeights::uniform(std::size_t k) {
    if (k == 0) throw InputError("simplex weights must be non-empty");
    return SimplexWeights(std::vector<double>(k, 1.0 / static_cast<double>(k)));
}

Vector closed_form_mean(const MeanKind& kind, const SimplexWeights& weights,
                        const std::vector<Vector>& inputs) {
    if (inputs.size() != weights.size())
        throw InputError("closed_form_mean: " + std::to_string(inputs.size()) + " inputs for " +
                         std::to_string(weights.size()) + " weights");
    const Eigen::Index n = inputs.front().size();
    for (const auto& x : inputs)
        if (x.size() != n) throw InputError("closed_form_mean: inputs differ in length");

    auto require = [&](bool ok, std::size_t k, Eigen::Index i) {
        if (!ok)
            throw InputError("closed_form_mean: input " + std::to_string(k) + " component " +
                             std::to_string(i) + " outside the " + kind.to_string() + " domain");
    };

    Vector out(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        double acc = kind.family() == MeanFamily::Geometric ? 1.0 : 0.0;
        for (std::size_t k = 0; k < inputs.size(); ++k) {
            const double x = inputs[k][i];
            const double w = weights[k];
            switch (kind.family()) {
                case MeanFamily::Arithmetic: acc += w * x; break;
                case MeanFamily::Geometric:
                    require(x >= 0.0, k, i);
                    acc *= std::pow(x, w);
                    break;
                case MeanFamily::Harmonic:
                    require(x > 0.0, k, i);
                    acc += w / x;
                    break;
                case MeanFamily::PowerQ:
                    require(x >= 0.0, k, i);
                    acc += w * std::pow(x, kind.q());
                    break;
            }
        }
        switch (kind.family()) {
            case MeanFamily::Harmonic: out[i] = 1.0 / acc; break;
            case MeanFamily::PowerQ: out[i] = std::pow(acc, 1.0 / kind.q()); break;
            default: out[i] = acc; break;
        }
    }
    return out;
}

}  // namespace afa
