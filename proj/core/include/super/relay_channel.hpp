#pragma once

#include <cstddef>
#include <cstdint>
#include <deque>
#include <memory>
#include <mutex>
#include <vector>

#include "super/types.hpp"

namespace super {

using WireRecord = std::vector<std::byte>;

/// Moves encoded experience records between agents. Implementations must make
/// send() safe to call concurrently; receive() is only called by the recipient.
class RelayTransport {
 public:
  virtual ~RelayTransport() = default;
  virtual void send(AgentId sender, AgentId recipient, WireRecord record) = 0;
  /// Returns and clears the recipient's records, ordered by sender id and then
  /// by send order.
  virtual std::vector<WireRecord> receive(AgentId recipient) = 0;
  virtual std::size_t pending(AgentId recipient) const = 0;
};

class InProcessTransport final : public RelayTransport {
 public:
  explicit InProcessTransport(std::size_t agent_count);

  void send(AgentId sender, AgentId recipient, WireRecord record) override;
  std::vector<WireRecord> receive(AgentId recipient) override;
  std::size_t pending(AgentId recipient) const override;

 private:
  mutable std::mutex mutex_;
  // queues_[recipient][sender]
  std::vector<std::vector<std::deque<WireRecord>>> queues_;
};

/// Broadcast channel for selected experiences with per-agent bandwidth
/// accounting. Experiences are serialized with the binary record format on
/// the way in and decoded on drain.
class RelayChannel {
 public:
  struct AgentCounters {
    std::uint64_t offered = 0;       // own experiences considered for sharing
    std::uint64_t shared = 0;        // own experiences broadcast
    std::uint64_t bytes_shared = 0;  // wire bytes sent, summed over recipients

    /// shared / offered, 0 before anything was offered.
    double actual_bandwidth() const {
      return offered == 0 ? 0.0 : static_cast<double>(shared) / static_cast<double>(offered);
    }
  };

  RelayChannel(std::size_t agent_count, std::size_t observation_dim,
               std::unique_ptr<RelayTransport> transport = nullptr);

  std::size_t agent_count() const { return agent_count_; }

  void record_offered(AgentId sender, std::size_t count);
  /// Enqueues `exp` for every agent other than `sender`.
  void broadcast(AgentId sender, const Experience& exp);
  std::vector<Experience> drain(AgentId recipient);
  std::size_t pending(AgentId recipient) const;

  AgentCounters counters(AgentId agent) const;
  /// Records enqueued across all recipients since the last reset.
  std::uint64_t total_enqueued() const;
  void reset_counters();
  void restore_counters(AgentId agent, const AgentCounters& counters);

 private:
  void check_agent(AgentId agent) const;

  std::size_t agent_count_;
  std::size_t observation_dim_;
  std::unique_ptr<RelayTransport> transport_;
  mutable std::mutex mutex_;
  std::vector<AgentCounters> counters_;
  std::uint64_t enqueued_ = 0;
};

}  // namespace super
