#include "afa/optim.hpp"

#include <cmath>

#include "afa/error.hpp"

namespace afa {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw InputError("learning_rate must be positive");
    if (epochs < 1) throw InputError("epochs must be at least 1");
    if (batch_size < 1) throw InputError("batch_size must be at least 1");
    if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0))
        throw InputError("moment decays must lie in [0, 1)");
    if (!(adam_epsilon > 0.0)) throw InputError("adam_epsilon must be positive");
}

AdamState::AdamState(Eigen::Index rows, Eigen::Index cols)
    : m_(Matrix::Zero(rows, cols)), v_(Matrix::Zero(rows, cols)) {}

void AdamState::step(Matrix& param, const Matrix& grad, const TrainConfig& config, std::size_t t) {
    m_ = config.beta1 * m_ + (1.0 - config.beta1) * grad;
    v_ = config.beta2 * v_ + (1.0 - config.beta2) * grad.cwiseProduct(grad);
    const double td = static_cast<double>(t);
    const double m_scale = 1.0 / (1.0 - std::pow(config.beta1, td));
    const double v_scale = 1.0 / (1.0 - std::pow(config.beta2, td));
    param.array() -= config.learning_rate * (m_.array() * m_scale) /
                     ((v_.array() * v_scale).sqrt() + config.adam_epsilon);
}

}  // namespace afa
