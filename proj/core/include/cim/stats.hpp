#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace cim {

/// Neumaier-compensated accumulator.
class CompensatedSum {
 public:
  void add(double x) noexcept {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      comp_ += (sum_ - t) + x;
    } else {
      comp_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  void add(const CompensatedSum& other) noexcept {
    add(other.sum_);
    add(other.comp_);
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline double compensated_sum(std::span<const double> xs) noexcept {
  CompensatedSum s;
  for (double x : xs) s.add(x);
  return s.value();
}

struct MeanAndError {
  double mean = 0.0;
  double stderr_ = 0.0;
};

/// Mean and standard error from a set of equally sized batch means.
/// With fewer than two batches the error is reported as zero.
inline MeanAndError batch_mean_error(std::span<const double> batch_means) {
  MeanAndError out;
  const std::size_t k = batch_means.size();
  if (k == 0) return out;
  out.mean = compensated_sum(batch_means) / static_cast<double>(k);
  if (k < 2) return out;
  CompensatedSum ss;
  for (double b : batch_means) ss.add((b - out.mean) * (b - out.mean));
  const double var = ss.value() / static_cast<double>(k - 1);
  out.stderr_ = std::sqrt(var / static_cast<double>(k));
  return out;
}

}  // namespace cim
