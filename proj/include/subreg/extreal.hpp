#pragma once

#include <cmath>
#include <limits>
#include <string>

#include "subreg/errors.hpp"

namespace subreg {

// Extended real value in [-inf, +inf]. Used wherever a profile or gauge is
// allowed to report an infinite value without abusing NaN. Arithmetic is not
// provided on purpose: callers either branch on finiteness or go through
// reciprocal(), which implements the two conventions needed by gauges,
//   1/0 = +inf   and   1/inf = 0.
class ExtReal {
 public:
  constexpr ExtReal() : v_(0.0) {}
  constexpr ExtReal(double v) : v_(v) {}

  static constexpr ExtReal pos_inf() { return ExtReal(std::numeric_limits<double>::infinity()); }
  static constexpr ExtReal neg_inf() { return ExtReal(-std::numeric_limits<double>::infinity()); }

  bool finite() const { return std::isfinite(v_); }
  bool is_pos_inf() const { return std::isinf(v_) && v_ > 0; }
  bool is_neg_inf() const { return std::isinf(v_) && v_ < 0; }

  // Finite value accessor; throws rather than silently leaking inf into
  // downstream arithmetic.
  double value() const {
    if (!finite()) throw DomainError("ExtReal: value() on non-finite " + str());
    return v_;
  }

  // Raw double, inf included. For comparisons and serialization.
  double raw() const { return v_; }

  friend bool operator==(ExtReal a, ExtReal b) { return a.v_ == b.v_; }
  friend bool operator<(ExtReal a, ExtReal b) { return a.v_ < b.v_; }
  friend bool operator<=(ExtReal a, ExtReal b) { return a.v_ <= b.v_; }
  friend bool operator>(ExtReal a, ExtReal b) { return a.v_ > b.v_; }
  friend bool operator>=(ExtReal a, ExtReal b) { return a.v_ >= b.v_; }

  std::string str() const {
    if (is_pos_inf()) return "inf";
    if (is_neg_inf()) return "-inf";
    return std::to_string(v_);
  }

 private:
  double v_;
};

// Gauge-style reciprocal with the conventions 1/0 = +inf, 1/inf = 0.
// Negative inputs are a caller bug (gauges and moduli are nonnegative).
inline ExtReal reciprocal(ExtReal x) {
  if (x.raw() < 0) throw ArgumentError("reciprocal: negative input " + x.str());
  if (x.raw() == 0) return ExtReal::pos_inf();
  if (x.is_pos_inf()) return ExtReal(0.0);
  return ExtReal(1.0 / x.raw());
}

}  // namespace subreg
