#pragma once

#include <cmath>

namespace supest::detail {

// Neumaier's variant of Kahan summation.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  [[nodiscard]] double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

// ceil(1 / p) with a relative guard so that p = 1/m (rounded) maps back to m.
inline double tight_domain_size(double min_prob) {
  const double inv = 1.0 / min_prob;
  return std::ceil(inv * (1.0 - 1e-12));
}

}  // namespace supest::detail
