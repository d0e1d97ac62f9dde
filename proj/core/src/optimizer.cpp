#include "super/optimizer.hpp"

#include <cmath>

#include "super/errors.hpp"

namespace super {

template <typename Scalar>
Optimizer<Scalar>::Optimizer(OptimizerKind kind, double learning_rate, double adam_epsilon,
                             std::size_t param_count) {
  state_.kind = kind;
  state_.learning_rate = learning_rate;
  state_.adam_epsilon = adam_epsilon;
  if (kind == OptimizerKind::Adam) {
    state_.first_moment.assign(param_count, Scalar{0});
    state_.second_moment.assign(param_count, Scalar{0});
  }
}

template <typename Scalar>
void Optimizer<Scalar>::apply(std::span<Scalar> params, std::span<const Scalar> grad) {
  if (params.size() != grad.size()) throw ContractViolation("optimizer: gradient size mismatch");
  ++state_.step;
  const auto lr = static_cast<Scalar>(state_.learning_rate);
  if (state_.kind == OptimizerKind::Sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) params[i] -= lr * grad[i];
    return;
  }
  if (state_.first_moment.size() != params.size()) {
    throw ContractViolation("optimizer: moment shape does not match parameters");
  }
  const auto b1 = static_cast<Scalar>(state_.beta1);
  const auto b2 = static_cast<Scalar>(state_.beta2);
  const auto t = static_cast<double>(state_.step);
  const auto bias1 = static_cast<Scalar>(1.0 - std::pow(state_.beta1, t));
  const auto bias2_sqrt = static_cast<Scalar>(std::sqrt(1.0 - std::pow(state_.beta2, t)));
  const auto eps = static_cast<Scalar>(state_.adam_epsilon);
  const Scalar step_size = lr / bias1;
  auto& m = state_.first_moment;
  auto& v = state_.second_moment;
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Scalar g = grad[i];
    m[i] = b1 * m[i] + (Scalar{1} - b1) * g;
    v[i] = b2 * v[i] + (Scalar{1} - b2) * g * g;
    params[i] -= step_size * m[i] / (std::sqrt(v[i]) / bias2_sqrt + eps);
  }
}

template class Optimizer<float>;
template class Optimizer<double>;

}  // namespace super
