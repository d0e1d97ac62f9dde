#pragma once

#include <cstddef>
#include <vector>

namespace super {

/// Binary tree of partial sums over a power-of-two padded leaf array.
/// Node 1 is the root; leaf i lives at node padded_capacity + i.
class SumTree {
 public:
  explicit SumTree(std::size_t capacity);

  std::size_t capacity() const { return capacity_; }
  std::size_t padded_capacity() const { return padded_; }

  /// Sets a leaf (value >= 0) and refreshes the sums on its root path.
  void set(std::size_t leaf, double value);
  double get(std::size_t leaf) const { return nodes_[padded_ + leaf]; }
  double total() const { return nodes_[1]; }

  /// Leaf whose cumulative interval [prefix_before, prefix_before + leaf)
  /// contains `mass`, for mass in [0, total()). Never returns a zero leaf
  /// while total() > 0.
  std::size_t find_prefix(double mass) const;

  /// Recomputes every internal node from the leaves.
  void rebuild();
  /// Largest |node - (left + right)| over internal nodes.
  double max_inconsistency() const;

 private:
  std::size_t capacity_;
  std::size_t padded_;
  std::vector<double> nodes_;
};

}  // namespace super
