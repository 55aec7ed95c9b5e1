#pragma once

#include <cmath>
#include <span>

namespace fxbench {

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double value) noexcept {
    double t = sum_ + value;
    if (std::abs(sum_) >= std::abs(value)) {
      compensation_ += (sum_ - t) + value;
    } else {
      compensation_ += (value - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double compensated_sum(std::span<const double> values) noexcept {
  CompensatedSum sum;
  for (double v : values) {
    sum.add(v);
  }
  return sum.value();
}

}  // namespace fxbench
