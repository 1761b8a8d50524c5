#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

namespace volterra {

/// Uniform grid t_k = k T / n on [0, T].
class TimeGrid {
public:
  TimeGrid(double horizon, std::size_t steps) : horizon_(horizon), steps_(steps) {
    if (!(horizon > 0.0) || !std::isfinite(horizon))
      throw std::invalid_argument("TimeGrid: horizon must be positive and finite");
    if (steps < 2) throw std::invalid_argument("TimeGrid: need at least 2 steps");
  }

  double horizon() const noexcept { return horizon_; }
  std::size_t steps() const noexcept { return steps_; }
  std::size_t size() const noexcept { return steps_ + 1; }
  double dt() const noexcept { return horizon_ / static_cast<double>(steps_); }

  double operator[](std::size_t k) const noexcept {
    if (k == steps_) return horizon_;
    return horizon_ * static_cast<double>(k) / static_cast<double>(steps_);
  }

  std::vector<double> points() const {
    std::vector<double> t(size());
    for (std::size_t k = 0; k < t.size(); ++k) t[k] = (*this)[k];
    return t;
  }

  /// Index of the cell [t_k, t_{k+1}) containing t, clamped to [0, n-1].
  std::size_t cell_of(double t) const noexcept {
    if (t <= 0.0) return 0;
    auto k = static_cast<std::size_t>(std::floor(t / dt()));
    return k >= steps_ ? steps_ - 1 : k;
  }

  friend bool operator==(const TimeGrid& a, const TimeGrid& b) noexcept {
    return a.horizon_ == b.horizon_ && a.steps_ == b.steps_;
  }

private:
  double horizon_;
  std::size_t steps_;
};

}  // namespace volterra
