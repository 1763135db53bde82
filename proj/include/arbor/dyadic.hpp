#pragma once

#include <compare>
#include <cstdint>
#include <string>

#include "arbor/errors.hpp"

namespace arbor {

/// Exact number of the form numerator / 2^exponent, kept in lowest terms.
class Dyadic {
 public:
  constexpr Dyadic() = default;
  constexpr Dyadic(std::int64_t numerator, int exponent = 0) : num_(numerator), exp_(exponent) {
    normalize();
  }

  /// 2^k for any integer k.
  static constexpr Dyadic pow2(int k) { return k >= 0 ? Dyadic(std::int64_t{1} << k) : Dyadic(1, -k); }

  constexpr std::int64_t numerator() const noexcept { return num_; }
  constexpr int exponent() const noexcept { return exp_; }
  double to_double() const noexcept {
    double v = static_cast<double>(num_);
    for (int i = 0; i < exp_; ++i) v *= 0.5;
    return v;
  }

  friend constexpr Dyadic operator-(Dyadic a) { return Dyadic(checked_neg(a.num_), a.exp_); }

  friend constexpr Dyadic operator+(Dyadic a, Dyadic b) {
    const int e = a.exp_ > b.exp_ ? a.exp_ : b.exp_;
    return Dyadic(checked_add(scale(a.num_, e - a.exp_), scale(b.num_, e - b.exp_)), e);
  }
  friend constexpr Dyadic operator-(Dyadic a, Dyadic b) { return a + (-b); }
  constexpr Dyadic& operator+=(Dyadic b) { return *this = *this + b; }
  constexpr Dyadic& operator-=(Dyadic b) { return *this = *this - b; }

  /// Multiplication by 2^{-k}.
  constexpr Dyadic halved(int k = 1) const { return Dyadic(num_, exp_ + k); }

  friend constexpr bool operator==(Dyadic a, Dyadic b) = default;
  friend constexpr std::strong_ordering operator<=>(Dyadic a, Dyadic b) {
    const Dyadic d = a - b;
    return d.num_ <=> std::int64_t{0};
  }

  std::string to_string() const {
    if (exp_ == 0) return std::to_string(num_);
    return std::to_string(num_) + "/2^" + std::to_string(exp_);
  }

 private:
  static constexpr std::int64_t checked_add(std::int64_t a, std::int64_t b) {
    std::int64_t r = 0;
    if (__builtin_add_overflow(a, b, &r)) throw NumericalError("dyadic overflow");
    return r;
  }
  static constexpr std::int64_t checked_neg(std::int64_t a) {
    std::int64_t r = 0;
    if (__builtin_sub_overflow(std::int64_t{0}, a, &r)) throw NumericalError("dyadic overflow");
    return r;
  }
  static constexpr std::int64_t scale(std::int64_t a, int shift) {
    std::int64_t r = a;
    for (int i = 0; i < shift; ++i)
      if (__builtin_mul_overflow(r, std::int64_t{2}, &r)) throw NumericalError("dyadic overflow");
    return r;
  }

  constexpr void normalize() {
    if (num_ == 0) {
      exp_ = 0;
      return;
    }
    while (exp_ > 0 && num_ % 2 == 0) {
      num_ /= 2;
      --exp_;
    }
    while (exp_ < 0) {
      num_ = scale(num_, 1);
      ++exp_;
    }
  }

  std::int64_t num_ = 0;
  int exp_ = 0;
};

}  // namespace arbor
