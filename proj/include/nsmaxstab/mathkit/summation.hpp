#pragma once

#include <cmath>
#include <limits>
#include <vector>

namespace nsmaxstab::mathkit {

/// Correctly rounded floating-point sum (Shewchuk partials, as in Python's
/// math.fsum). The result does not depend on the order in which terms are
/// added. Infinities and NaNs are tracked separately.
class ExactSum {
 public:
  void add(double x) {
    if (!std::isfinite(x)) {
      special_ += x;
      has_special_ = true;
      return;
    }
    std::size_t i = 0;
    for (double y : partials_) {
      if (std::fabs(x) < std::fabs(y)) std::swap(x, y);
      const double hi = x + y;
      const double lo = y - (hi - x);
      if (lo != 0.0) partials_[i++] = lo;
      x = hi;
    }
    partials_.resize(i);
    partials_.push_back(x);
  }

  ExactSum& operator+=(double x) {
    add(x);
    return *this;
  }

  void merge(const ExactSum& other) {
    for (double p : other.partials_) add(p);
    if (other.has_special_) {
      special_ += other.special_;
      has_special_ = true;
    }
  }

  [[nodiscard]] double value() const {
    if (has_special_) return special_;
    if (partials_.empty()) return 0.0;
    std::size_t n = partials_.size();
    double hi = partials_[--n];
    double lo = 0.0;
    while (n > 0) {
      const double x = hi;
      const double y = partials_[--n];
      hi = x + y;
      const double yr = hi - x;
      lo = y - yr;
      if (lo != 0.0) break;
    }
    // half-way correction
    if (n > 0 && ((lo < 0.0 && partials_[n - 1] < 0.0) || (lo > 0.0 && partials_[n - 1] > 0.0))) {
      const double y = lo * 2.0;
      const double x = hi + y;
      const double yr = x - hi;
      if (y == yr) hi = x;
    }
    return hi;
  }

 private:
  std::vector<double> partials_;
  double special_ = 0.0;
  bool has_special_ = false;
};

}  // namespace nsmaxstab::mathkit
