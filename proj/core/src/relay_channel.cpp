#include "super/relay_channel.hpp"

#include "super/errors.hpp"
#include "super/experience_io.hpp"

namespace super {

InProcessTransport::InProcessTransport(std::size_t agent_count)
    : queues_(agent_count, std::vector<std::deque<WireRecord>>(agent_count)) {}

void InProcessTransport::send(AgentId sender, AgentId recipient, WireRecord record) {
  std::lock_guard lock(mutex_);
  queues_.at(recipient).at(sender).push_back(std::move(record));
}

std::vector<WireRecord> InProcessTransport::receive(AgentId recipient) {
  std::lock_guard lock(mutex_);
  std::vector<WireRecord> out;
  for (auto& queue : queues_.at(recipient)) {
    for (auto& record : queue) out.push_back(std::move(record));
    queue.clear();
  }
  return out;
}

std::size_t InProcessTransport::pending(AgentId recipient) const {
  std::lock_guard lock(mutex_);
  std::size_t n = 0;
  for (const auto& queue : queues_.at(recipient)) n += queue.size();
  return n;
}

RelayChannel::RelayChannel(std::size_t agent_count, std::size_t observation_dim,
                           std::unique_ptr<RelayTransport> transport)
    : agent_count_(agent_count),
      observation_dim_(observation_dim),
      transport_(transport ? std::move(transport) : std::make_unique<InProcessTransport>(agent_count)),
      counters_(agent_count) {
  if (agent_count == 0) throw ContractViolation("relay channel needs at least one agent");
}

void RelayChannel::check_agent(AgentId agent) const {
  if (agent >= agent_count_) throw ContractViolation("relay channel: unknown agent " + std::to_string(agent));
}

void RelayChannel::record_offered(AgentId sender, std::size_t count) {
  check_agent(sender);
  std::lock_guard lock(mutex_);
  counters_[sender].offered += count;
}

void RelayChannel::broadcast(AgentId sender, const Experience& exp) {
  check_agent(sender);
  WireRecord record;
  encode_experience(exp, observation_dim_, record);
  std::uint64_t sent = 0;
  for (AgentId recipient = 0; recipient < agent_count_; ++recipient) {
    if (recipient == sender) continue;
    transport_->send(sender, recipient, record);
    ++sent;
  }
  std::lock_guard lock(mutex_);
  counters_[sender].shared += 1;
  counters_[sender].bytes_shared += sent * record.size();
  enqueued_ += sent;
}

std::vector<Experience> RelayChannel::drain(AgentId recipient) {
  check_agent(recipient);
  std::vector<Experience> out;
  for (const auto& record : transport_->receive(recipient)) out.push_back(decode_experience(record, observation_dim_));
  return out;
}

std::size_t RelayChannel::pending(AgentId recipient) const {
  check_agent(recipient);
  return transport_->pending(recipient);
}

RelayChannel::AgentCounters RelayChannel::counters(AgentId agent) const {
  check_agent(agent);
  std::lock_guard lock(mutex_);
  return counters_[agent];
}

std::uint64_t RelayChannel::total_enqueued() const {
  std::lock_guard lock(mutex_);
  return enqueued_;
}

void RelayChannel::reset_counters() {
  std::lock_guard lock(mutex_);
  for (auto& c : counters_) c = {};
  enqueued_ = 0;
}

void RelayChannel::restore_counters(AgentId agent, const AgentCounters& counters) {
  check_agent(agent);
  std::lock_guard lock(mutex_);
  counters_[agent] = counters;
}

}  // namespace super
