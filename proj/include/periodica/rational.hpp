#pragma once

#include <cstdint>
#include <cstdlib>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>

namespace periodica {

using i64 = std::int64_t;
using i128 = __int128;

struct exact_overflow : std::runtime_error {
  exact_overflow() : std::runtime_error("exact arithmetic overflow") {}
};

inline i128 abs128(i128 v) { return v < 0 ? -v : v; }

inline i128 gcd128(i128 a, i128 b) {
  a = abs128(a);
  b = abs128(b);
  while (b != 0) {
    i128 t = a % b;
    a = b;
    b = t;
  }
  return a;
}

inline i64 narrow_checked(i128 v) {
  if (v > i128(std::numeric_limits<i64>::max()) ||
      v < i128(std::numeric_limits<i64>::min()))
    throw exact_overflow();
  return static_cast<i64>(v);
}

// Reduced fraction over int64. All arithmetic goes through 128-bit
// intermediates and throws exact_overflow instead of wrapping.
class Rat {
 public:
  Rat() : num_(0), den_(1) {}
  Rat(i64 v) : num_(v), den_(1) {}
  Rat(i64 p, i64 q) { assign(i128(p), i128(q)); }

  static Rat from_i128(i128 p, i128 q) {
    Rat r;
    r.assign(p, q);
    return r;
  }

  i64 num() const { return num_; }
  i64 den() const { return den_; }

  bool is_zero() const { return num_ == 0; }
  bool is_integer() const { return den_ == 1; }

  Rat operator-() const {
    Rat r;
    r.num_ = narrow_checked(-i128(num_));
    r.den_ = den_;
    return r;
  }

  Rat operator+(const Rat& o) const {
    return from_i128(i128(num_) * o.den_ + i128(o.num_) * den_,
                     i128(den_) * o.den_);
  }
  Rat operator-(const Rat& o) const {
    return from_i128(i128(num_) * o.den_ - i128(o.num_) * den_,
                     i128(den_) * o.den_);
  }
  Rat operator*(const Rat& o) const {
    // cross-reduce first to keep intermediates small
    i64 g1 = static_cast<i64>(gcd128(num_, o.den_));
    i64 g2 = static_cast<i64>(gcd128(o.num_, den_));
    if (g1 == 0) g1 = 1;
    if (g2 == 0) g2 = 1;
    return from_i128(i128(num_ / g1) * (o.num_ / g2),
                     i128(den_ / g2) * (o.den_ / g1));
  }
  Rat operator/(const Rat& o) const {
    if (o.num_ == 0) throw std::domain_error("rational division by zero");
    return *this * from_i128(o.den_, o.num_);
  }

  Rat& operator+=(const Rat& o) { return *this = *this + o; }
  Rat& operator-=(const Rat& o) { return *this = *this - o; }
  Rat& operator*=(const Rat& o) { return *this = *this * o; }
  Rat& operator/=(const Rat& o) { return *this = *this / o; }

  bool operator==(const Rat& o) const {
    return num_ == o.num_ && den_ == o.den_;
  }
  bool operator!=(const Rat& o) const { return !(*this == o); }
  bool operator<(const Rat& o) const {
    return i128(num_) * o.den_ < i128(o.num_) * den_;
  }
  bool operator<=(const Rat& o) const { return !(o < *this); }
  bool operator>(const Rat& o) const { return o < *this; }
  bool operator>=(const Rat& o) const { return !(*this < o); }

  Rat abs() const { return num_ < 0 ? -*this : *this; }

  // largest integer <= value
  i64 floor() const {
    i64 q = num_ / den_;
    if (num_ % den_ != 0 && num_ < 0) --q;
    return q;
  }

  // fractional part in [0,1)
  Rat frac() const { return *this - Rat(floor()); }

  double to_double() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  std::string str() const {
    if (den_ == 1) return std::to_string(num_);
    return std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  void assign(i128 p, i128 q) {
    if (q == 0) throw std::domain_error("rational with zero denominator");
    if (q < 0) {
      p = -p;
      q = -q;
    }
    i128 g = gcd128(p, q);
    if (g > 1) {
      p /= g;
      q /= g;
    }
    num_ = narrow_checked(p);
    den_ = narrow_checked(q);
  }

  i64 num_;
  i64 den_;
};

inline Rat operator*(i64 a, const Rat& r) { return Rat(a) * r; }

// Nearest rational p/q with q <= max_den, accepted only if it matches x to
// within a few ulps (continued fraction expansion). Used to recover exact
// inputs that were serialized as doubles.
inline std::optional<Rat> rationalize(double x, i64 max_den = (i64(1) << 20)) {
  if (!std::isfinite(x)) return std::nullopt;
  double target = x;
  i64 p0 = 0, q0 = 1, p1 = 1, q1 = 0;
  double v = x;
  for (int iter = 0; iter < 64; ++iter) {
    double fl = std::floor(v);
    if (fl > 9.0e18 || fl < -9.0e18) return std::nullopt;
    i64 a = static_cast<i64>(fl);
    i128 p2 = i128(a) * p1 + p0;
    i128 q2 = i128(a) * q1 + q0;
    if (q2 > max_den) break;
    p0 = p1;
    q0 = q1;
    p1 = narrow_checked(p2);
    q1 = narrow_checked(q2);
    double approx = double(p1) / double(q1);
    double tol = 8.0 * std::numeric_limits<double>::epsilon() *
                 std::max(1.0, std::abs(target));
    if (std::abs(approx - target) <= tol) return Rat(p1, q1);
    double rem = v - fl;
    if (rem < 1e-15) break;
    v = 1.0 / rem;
  }
  return std::nullopt;
}

}  // namespace periodica
