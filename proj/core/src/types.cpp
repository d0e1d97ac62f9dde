#include "super/types.hpp"

#include <cmath>

#include "super/errors.hpp"

namespace super {

void MarkovGameSpec::validate() const {
  if (agent_count == 0) throw ContractViolation("agent_count must be positive");
  if (observation_dim == 0) throw ContractViolation("observation_dim must be positive");
  if (action_count == 0) throw ContractViolation("action_count must be positive");
  if (max_episode_steps == 0) throw ContractViolation("max_episode_steps must be positive");
  if (!(gamma >= 0.0 && gamma < 1.0)) throw ContractViolation("gamma must lie in [0, 1)");
}

void validate_experience(const Experience& exp, const MarkovGameSpec& spec) {
  if (exp.obs.size() != spec.observation_dim || exp.next_obs.size() != spec.observation_dim) {
    throw ContractViolation("experience observation dimension " + std::to_string(exp.obs.size()) +
                            "/" + std::to_string(exp.next_obs.size()) + " does not match " +
                            std::to_string(spec.observation_dim));
  }
  if (exp.action < 0 || static_cast<std::size_t>(exp.action) >= spec.action_count) {
    throw ContractViolation("experience action " + std::to_string(exp.action) + " out of range");
  }
  if (exp.td_at_share && !(*exp.td_at_share >= 0.0F)) {
    throw ContractViolation("td_at_share must be non-negative");
  }
}

TdError::TdError(double value) : value_(value) {
  if (!(value >= 0.0) || !std::isfinite(value)) {
    throw ContractViolation("td-error must be finite and non-negative");
  }
}

}  // namespace super
