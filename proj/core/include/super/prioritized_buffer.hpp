#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "super/sum_tree.hpp"
#include "super/types.hpp"

namespace super {

/// Identifies a stored experience. The generation changes whenever the slot is
/// overwritten, so updates for evicted entries can be detected.
struct SlotId {
  std::size_t index = 0;
  std::uint64_t generation = 0;
  friend bool operator==(const SlotId&, const SlotId&) = default;
};

struct ReplayConfig {
  std::size_t capacity = 120000;
  double alpha = 0.6;
  double epsilon = 1e-6;
};

struct PrioritizedSample {
  std::vector<Experience> experiences;
  std::vector<SlotId> slots;
  /// (N * P(i))^-beta / max over the sample; all in (0, 1].
  std::vector<double> weights;
};

/// Proportional prioritized replay: P(i) = p_i^alpha / sum_k p_k^alpha with
/// p_i = |td_i| + epsilon. Leaves hold p_i^alpha.
class PrioritizedBuffer {
 public:
  explicit PrioritizedBuffer(ReplayConfig config);

  /// Inserts at (hint + epsilon)^alpha when a hint is given, otherwise at the
  /// largest leaf priority seen so far. Evicts the oldest entry when full.
  SlotId insert(Experience exp, std::optional<double> priority_hint = std::nullopt);

  /// n stratified proportional draws. Throws EmptySampleError when empty.
  PrioritizedSample sample(std::size_t n, double is_beta, std::mt19937_64& rng) const;

  /// Sets leaves to (|td| + epsilon)^alpha. Stale slots are skipped and counted.
  void update_priorities(std::span<const SlotId> slots, std::span<const double> abs_td);

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return config_.capacity; }
  const ReplayConfig& config() const { return config_; }
  double total_priority() const { return tree_.total(); }
  double leaf_priority(std::size_t index) const { return tree_.get(index); }
  double max_priority() const { return max_priority_; }
  std::uint64_t stale_updates() const { return stale_updates_; }
  std::uint64_t insert_count() const { return inserts_; }
  const SumTree& tree() const { return tree_; }
  const Experience& at(std::size_t index) const { return storage_.at(index); }

  struct Counters {
    std::size_t cursor = 0;
    std::size_t size = 0;
    double max_priority = 1.0;
    std::uint64_t stale_updates = 0;
    std::uint64_t inserts = 0;
    std::vector<std::uint64_t> generations;
  };
  Counters counters() const;
  /// Rebuilds a buffer from stored slots (slot order) and counters.
  static PrioritizedBuffer restore(ReplayConfig config, std::vector<Experience> slots,
                                   std::vector<double> leaves, const Counters& counters);

 private:
  double leaf_for(double abs_td) const;

  ReplayConfig config_;
  std::vector<Experience> storage_;
  std::vector<std::uint64_t> generations_;
  SumTree tree_;
  std::size_t cursor_ = 0;
  std::size_t size_ = 0;
  double max_priority_ = 1.0;
  std::uint64_t stale_updates_ = 0;
  std::uint64_t inserts_ = 0;
};

}  // namespace super
