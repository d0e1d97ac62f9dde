#include "super/td_error.hpp"

#include <cmath>

#include "super/errors.hpp"

namespace super {

template <typename Scalar>
std::vector<double> td_errors(std::span<const Experience> batch, const BasicQNetwork<Scalar>& q_online,
                              const BasicQNetwork<Scalar>& q_target, double gamma, bool double_q) {
  if (batch.empty()) return {};
  const std::size_t dim = q_online.shape().input_dim;
  for (const auto& exp : batch) {
    if (exp.obs.size() != dim || exp.next_obs.size() != dim) {
      throw ContractViolation("td_error: experience dimension does not match the network input");
    }
  }
  BootstrapConfig cfg;
  cfg.gamma = gamma;
  cfg.double_q = double_q;
  const auto y = bootstrap_targets(q_online, q_target, batch, cfg);
  const auto q = q_online.forward(stack_observations<Scalar>(batch, false, dim));
  std::vector<double> out(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    const int a = batch[j].action;
    if (a < 0 || static_cast<std::size_t>(a) >= q_online.shape().action_count) {
      throw ContractViolation("td_error: action out of range");
    }
    out[j] = std::abs(static_cast<double>(y[j]) - static_cast<double>(q(a, static_cast<Eigen::Index>(j))));
  }
  return out;
}

template <typename Scalar>
TdError td_error(const Experience& exp, const BasicQNetwork<Scalar>& q_online,
                 const BasicQNetwork<Scalar>& q_target, double gamma, bool double_q) {
  return TdError(td_errors<Scalar>(std::span<const Experience>(&exp, 1), q_online, q_target, gamma, double_q)[0]);
}

template TdError td_error<float>(const Experience&, const QNetwork&, const QNetwork&, double, bool);
template TdError td_error<double>(const Experience&, const QNetwork64&, const QNetwork64&, double, bool);
template std::vector<double> td_errors<float>(std::span<const Experience>, const QNetwork&, const QNetwork&, double, bool);
template std::vector<double> td_errors<double>(std::span<const Experience>, const QNetwork64&, const QNetwork64&, double, bool);

}  // namespace super
