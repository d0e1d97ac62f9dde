#include "super/sum_tree.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

#include "super/errors.hpp"

namespace super {

SumTree::SumTree(std::size_t capacity)
    : capacity_(capacity), padded_(std::bit_ceil(std::max<std::size_t>(capacity, 1))), nodes_(2 * padded_, 0.0) {
  if (capacity == 0) throw ContractViolation("sum tree capacity must be positive");
}

void SumTree::set(std::size_t leaf, double value) {
  if (leaf >= capacity_) throw ContractViolation("sum tree leaf out of range");
  if (!(value >= 0.0) || !std::isfinite(value)) throw ContractViolation("sum tree values must be finite and >= 0");
  std::size_t node = padded_ + leaf;
  nodes_[node] = value;
  for (node /= 2; node >= 1; node /= 2) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

std::size_t SumTree::find_prefix(double mass) const {
  std::size_t node = 1;
  while (node < padded_) {
    const double left = nodes_[2 * node];
    const double right = nodes_[2 * node + 1];
    if (mass < left || right <= 0.0) {
      node = 2 * node;
    } else {
      mass -= left;
      node = 2 * node + 1;
    }
  }
  std::size_t leaf = node - padded_;
  // Rounding can walk onto an empty leaf at the far right; step back to the
  // nearest occupied one.
  while (leaf > 0 && nodes_[padded_ + leaf] <= 0.0) --leaf;
  return leaf;
}

void SumTree::rebuild() {
  for (std::size_t node = padded_ - 1; node >= 1; --node) nodes_[node] = nodes_[2 * node] + nodes_[2 * node + 1];
}

double SumTree::max_inconsistency() const {
  double worst = 0.0;
  for (std::size_t node = 1; node < padded_; ++node) {
    worst = std::max(worst, std::abs(nodes_[node] - (nodes_[2 * node] + nodes_[2 * node + 1])));
  }
  return worst;
}

}  // namespace super
