#pragma once

#include <cmath>
#include <limits>
#include <optional>

namespace kirchhoff {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// Neumaier's variant of Kahan summation. Terms are accumulated in call order.
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
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

/// Running log(Σ exp(x_j)) that never leaves log-space. Empty sum is -inf.
class LogSum {
 public:
  void add(double log_term) noexcept {
    if (log_term == kNegInf) return;
    if (max_ == kNegInf) {
      max_ = log_term;
      scaled_ = 1.0;
    } else if (log_term <= max_) {
      scaled_ += std::exp(log_term - max_);
    } else {
      scaled_ = scaled_ * std::exp(max_ - log_term) + 1.0;
      max_ = log_term;
    }
  }
  double value() const noexcept {
    return max_ == kNegInf ? kNegInf : max_ + std::log(scaled_);
  }

 private:
  double max_ = kNegInf;
  double scaled_ = 0.0;
};

/// log(e^a + e^b).
inline double log_add(double a, double b) noexcept {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

/// log(e^a - e^b) for a ≥ b; -inf when equal.
inline double log_sub(double a, double b) noexcept {
  if (b == kNegInf) return a;
  if (b >= a) return kNegInf;
  return a + std::log1p(-std::exp(b - a));
}

/// A positive quantity carried in log form, with its plain value when that
/// value is representable as a finite, non-underflowed double.
struct LogValue {
  double log = kNegInf;
  std::optional<double> value;

  static LogValue from_log(double log_value) {
    LogValue out{log_value, std::nullopt};
    if (log_value == kNegInf) {
      out.value = 0.0;
    } else {
      const double v = std::exp(log_value);
      if (std::isfinite(v) && v > 0.0) out.value = v;
    }
    return out;
  }
};

}  // namespace kirchhoff
