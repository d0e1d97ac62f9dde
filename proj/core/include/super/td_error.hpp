#pragma once

#include <span>
#include <vector>

#include "super/qnetwork.hpp"
#include "super/types.hpp"

namespace super {

/// |target - Q_online(obs, action)| for one experience. Terminal transitions
/// drop the bootstrap term. Throws ContractViolation on dimension mismatch.
template <typename Scalar>
TdError td_error(const Experience& exp, const BasicQNetwork<Scalar>& q_online,
                 const BasicQNetwork<Scalar>& q_target, double gamma, bool double_q);

/// Batched form of td_error; one entry per experience.
template <typename Scalar>
std::vector<double> td_errors(std::span<const Experience> batch, const BasicQNetwork<Scalar>& q_online,
                              const BasicQNetwork<Scalar>& q_target, double gamma, bool double_q);

}  // namespace super
