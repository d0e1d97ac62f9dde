#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace super {

/// Sliding window over the last k absolute td-errors with running sum and sum
/// of squares. The running sums are recomputed exactly every time the ring
/// wraps, which bounds floating-point drift.
class WindowStats {
 public:
  explicit WindowStats(std::size_t k);

  void push(double td);

  std::size_t count() const { return count_; }
  std::size_t capacity() const { return ring_.size(); }
  bool empty() const { return count_ == 0; }
  double sum() const { return sum_; }
  double sum_squares() const { return sum_sq_; }
  double mean() const;
  /// Population variance; 0 for windows whose spread is below rounding noise.
  double variance() const;
  /// m-th largest value, 1-based; m must lie in [1, count()].
  double kth_largest(std::size_t m) const;
  /// Current contents in ring order (not chronological once wrapped).
  std::span<const double> values() const { return {ring_.data(), count_}; }
  std::size_t cursor() const { return cursor_; }

  /// Restores the exact state saved from values(), cursor(), sum() and sum_squares().
  static WindowStats restore(std::size_t k, std::span<const double> values, std::size_t cursor,
                             double sum, double sum_squares);

 private:
  std::vector<double> ring_;
  std::size_t cursor_ = 0;
  std::size_t count_ = 0;
  double sum_ = 0.0;
  double sum_sq_ = 0.0;
  mutable std::vector<double> scratch_;
};

}  // namespace super
