#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "super/config.hpp"

namespace super {

template <typename Scalar>
struct OptimizerState {
  OptimizerKind kind = OptimizerKind::Adam;
  double learning_rate = 0.0;
  double adam_epsilon = 1.5e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  std::vector<Scalar> first_moment;
  std::vector<Scalar> second_moment;
  std::uint64_t step = 0;
};

/// Adam or plain SGD over a flat parameter vector.
template <typename Scalar>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate, double adam_epsilon, std::size_t param_count);
  explicit Optimizer(OptimizerState<Scalar> state) : state_(std::move(state)) {}

  void apply(std::span<Scalar> params, std::span<const Scalar> grad);

  std::uint64_t step_count() const { return state_.step; }
  const OptimizerState<Scalar>& state() const { return state_; }
  OptimizerState<Scalar>& state() { return state_; }

 private:
  OptimizerState<Scalar> state_;
};

extern template class Optimizer<float>;
extern template class Optimizer<double>;

}  // namespace super
