#include <cmath>

#include "apc/numcore.hpp"

namespace apc::numcore {

void adam_step(AdamState& state, std::span<double> params, std::span<const double> grad) {
  check_dim(grad.size(), params.size(), "adam_step grad");
  check_dim(state.first_moment.size(), params.size(), "adam_step state");
  check_finite(grad, "adam_step grad");

  const AdamConfig& c = state.config;
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double correction1 = 1.0 - std::pow(c.beta1, t);
  const double correction2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t i = 0; i < params.size(); ++i) {
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = c.beta1 * m + (1.0 - c.beta1) * grad[i];
    v = c.beta2 * v + (1.0 - c.beta2) * grad[i] * grad[i];
    const double m_hat = m / correction1;
    const double v_hat = v / correction2;
    params[i] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
  check_finite(params, "adam_step params");
}

}  // namespace apc::numcore
