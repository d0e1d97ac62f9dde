#include "super/window_stats.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "super/errors.hpp"

namespace super {

WindowStats::WindowStats(std::size_t k) : ring_(k, 0.0) {
  if (k == 0) throw ConfigError("selection.window_size_k: must be >= 1");
}

void WindowStats::push(double td) {
  if (count_ == ring_.size()) {
    const double old = ring_[cursor_];
    sum_ -= old;
    sum_sq_ -= old * old;
  } else {
    ++count_;
  }
  ring_[cursor_] = td;
  sum_ += td;
  sum_sq_ += td * td;
  cursor_ = (cursor_ + 1) % ring_.size();
  if (cursor_ == 0) {
    sum_ = 0.0;
    sum_sq_ = 0.0;
    for (std::size_t i = 0; i < count_; ++i) {
      sum_ += ring_[i];
      sum_sq_ += ring_[i] * ring_[i];
    }
  }
}

double WindowStats::mean() const {
  return count_ == 0 ? 0.0 : sum_ / static_cast<double>(count_);
}

double WindowStats::variance() const {
  if (count_ == 0) return 0.0;
  const double n = static_cast<double>(count_);
  const double m = sum_ / n;
  const double var = sum_sq_ / n - m * m;
  // Cancellation noise of E[x^2] - E[x]^2 is a few ulps of E[x^2].
  const double noise = 16.0 * std::numeric_limits<double>::epsilon() * (sum_sq_ / n);
  return var <= noise ? 0.0 : var;
}

double WindowStats::kth_largest(std::size_t m) const {
  if (m < 1 || m > count_) throw ContractViolation("kth_largest: rank out of range");
  scratch_.assign(ring_.begin(), ring_.begin() + static_cast<std::ptrdiff_t>(count_));
  auto nth = scratch_.begin() + static_cast<std::ptrdiff_t>(m - 1);
  std::nth_element(scratch_.begin(), nth, scratch_.end(), std::greater<>());
  return *nth;
}

WindowStats WindowStats::restore(std::size_t k, std::span<const double> values, std::size_t cursor,
                                 double sum, double sum_squares) {
  WindowStats w(k);
  if (values.size() > k || cursor >= k || (values.size() < k && cursor != values.size() % k)) {
    throw FormatError("window snapshot is inconsistent");
  }
  std::copy(values.begin(), values.end(), w.ring_.begin());
  w.count_ = values.size();
  w.cursor_ = cursor;
  w.sum_ = sum;
  w.sum_sq_ = sum_squares;
  return w;
}

}  // namespace super
