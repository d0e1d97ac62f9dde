#include "super/prioritized_buffer.hpp"

#include <algorithm>
#include <cmath>

#include "super/errors.hpp"

namespace super {

PrioritizedBuffer::PrioritizedBuffer(ReplayConfig config)
    : config_(config), generations_(config.capacity, 0), tree_(config.capacity) {
  if (!(config_.alpha >= 0.0)) throw ConfigError("replay alpha must be >= 0");
  if (!(config_.epsilon > 0.0)) throw ConfigError("replay epsilon must be > 0");
  storage_.reserve(std::min<std::size_t>(config_.capacity, 1 << 16));
}

double PrioritizedBuffer::leaf_for(double abs_td) const {
  if (!(abs_td >= 0.0) || !std::isfinite(abs_td)) throw ContractViolation("priority must be finite and >= 0");
  return std::pow(abs_td + config_.epsilon, config_.alpha);
}

SlotId PrioritizedBuffer::insert(Experience exp, std::optional<double> priority_hint) {
  const double leaf = priority_hint ? leaf_for(*priority_hint) : max_priority_;
  const std::size_t index = cursor_;
  if (index < storage_.size()) {
    storage_[index] = std::move(exp);
  } else {
    storage_.push_back(std::move(exp));
  }
  const std::uint64_t generation = ++generations_[index];
  tree_.set(index, leaf);
  max_priority_ = std::max(max_priority_, leaf);
  cursor_ = (cursor_ + 1) % config_.capacity;
  size_ = std::min(size_ + 1, config_.capacity);
  ++inserts_;
  return {index, generation};
}

PrioritizedSample PrioritizedBuffer::sample(std::size_t n, double is_beta, std::mt19937_64& rng) const {
  if (size_ == 0) throw EmptySampleError("cannot sample from an empty replay buffer");
  PrioritizedSample out;
  out.experiences.reserve(n);
  out.slots.reserve(n);
  out.weights.reserve(n);
  const double total = tree_.total();
  const double segment = total / static_cast<double>(n);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  double max_weight = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double mass = (static_cast<double>(i) + unit(rng)) * segment;
    if (mass >= total) mass = std::nextafter(total, 0.0);
    const std::size_t index = tree_.find_prefix(mass);
    const double prob = tree_.get(index) / total;
    const double w = std::pow(static_cast<double>(size_) * prob, -is_beta);
    max_weight = std::max(max_weight, w);
    out.experiences.push_back(storage_[index]);
    out.slots.push_back({index, generations_[index]});
    out.weights.push_back(w);
  }
  for (auto& w : out.weights) w /= max_weight;
  return out;
}

void PrioritizedBuffer::update_priorities(std::span<const SlotId> slots, std::span<const double> abs_td) {
  if (slots.size() != abs_td.size()) throw ContractViolation("update_priorities: size mismatch");
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const SlotId slot = slots[i];
    if (slot.index >= storage_.size() || generations_[slot.index] != slot.generation) {
      ++stale_updates_;
      continue;
    }
    const double leaf = leaf_for(abs_td[i]);
    tree_.set(slot.index, leaf);
    max_priority_ = std::max(max_priority_, leaf);
  }
}

PrioritizedBuffer::Counters PrioritizedBuffer::counters() const {
  return {cursor_, size_, max_priority_, stale_updates_, inserts_, generations_};
}

PrioritizedBuffer PrioritizedBuffer::restore(ReplayConfig config, std::vector<Experience> slots,
                                             std::vector<double> leaves, const Counters& counters) {
  PrioritizedBuffer buf(config);
  if (slots.size() != leaves.size() || slots.size() > config.capacity || counters.size != slots.size() ||
      counters.generations.size() != config.capacity || counters.cursor >= config.capacity) {
    throw FormatError("replay buffer snapshot is inconsistent with its configuration");
  }
  buf.storage_ = std::move(slots);
  for (std::size_t i = 0; i < leaves.size(); ++i) buf.tree_.set(i, leaves[i]);
  buf.cursor_ = counters.cursor;
  buf.size_ = counters.size;
  buf.max_priority_ = counters.max_priority;
  buf.stale_updates_ = counters.stale_updates;
  buf.inserts_ = counters.inserts;
  buf.generations_ = counters.generations;
  return buf;
}

}  // namespace super
