#pragma once

#include <boost/multiprecision/mpfr.hpp>

#include <charconv>
#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <type_traits>

namespace nhq {

/// Multiprecision real with runtime-selected precision (MPFR backend).
using Mp = boost::multiprecision::number<boost::multiprecision::mpfr_float_backend<0>, boost::multiprecision::et_off>;

template <class R>
inline constexpr bool is_mp_v = std::is_same_v<R, Mp>;

/// Thrown by every numerical kernel that cannot meet its accuracy contract.
class NumericalError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Working-precision settings shared by all kernels.
///
/// `digits` is the decimal precision of the arithmetic, `safety_margin` the
/// number of digits held back as headroom; kernels accept residuals up to
/// 10^-(digits - safety_margin).
struct PrecisionContext {
  int digits = 64;
  int safety_margin = 16;

  PrecisionContext() = default;
  PrecisionContext(int d, int margin) : digits(d), safety_margin(margin) { validate(); }
  explicit PrecisionContext(int d) : PrecisionContext(d, d / 4) {}

  /// IEEE double as a context: 16 digits with 4 held back.
  static PrecisionContext double_precision() { return PrecisionContext(16, 4); }

  /// 64 digits up to L = 32, 128 up to L = 64, 250 beyond.
  static PrecisionContext for_size(int sites) {
    if (sites <= 32) return PrecisionContext(64);
    if (sites <= 64) return PrecisionContext(128);
    return PrecisionContext(250);
  }

  void validate() const {
    if (digits < 16) throw std::invalid_argument("precision: digits must be >= 16");
    if (safety_margin < 1 || safety_margin >= digits)
      throw std::invalid_argument("precision: safety_margin must lie in [1, digits)");
  }

  int tolerance_exponent() const { return digits - safety_margin; }

  /// 10^-(digits - safety_margin) as a double (fine down to ~1e-300).
  double tolerance_double() const { return std::pow(10.0, -tolerance_exponent()); }

  template <class R>
  R tolerance() const {
    if constexpr (is_mp_v<R>) {
      return Mp(std::string("1e-") + std::to_string(tolerance_exponent()));
    } else {
      return static_cast<R>(tolerance_double());
    }
  }

  friend bool operator==(const PrecisionContext&, const PrecisionContext&) = default;
};

/// Sets the process-wide MPFR precision for the lifetime of the scope.
///
/// Boost 1.74 keeps the default precision in a global, so every thread of a
/// run must agree on `digits`.
class PrecisionScope {
public:
  explicit PrecisionScope(const PrecisionContext& ctx) : saved_(Mp::default_precision()) {
    ctx.validate();
    Mp::default_precision(static_cast<unsigned>(ctx.digits));
  }
  ~PrecisionScope() { Mp::default_precision(saved_); }
  PrecisionScope(const PrecisionScope&) = delete;
  PrecisionScope& operator=(const PrecisionScope&) = delete;

private:
  unsigned saved_;
};

// Scalar helpers. Multiprecision constants are always built from exact
// integers or decimal strings, never from binary doubles.

template <class R>
R from_int(long long v) {
  if constexpr (is_mp_v<R>) return Mp(v);
  else return static_cast<R>(v);
}

template <class R>
R ratio(long long num, long long den) {
  return from_int<R>(num) / from_int<R>(den);
}

template <class R>
R from_string(const std::string& s) {
  if constexpr (is_mp_v<R>) return Mp(s);
  else return static_cast<R>(std::stod(s));
}

/// Shortest round-trip decimal of a double, e.g. 0.8 -> "0.8".
inline std::string shortest_decimal(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// Lifts a user-facing double (config value) to R through its shortest
/// decimal, so "0.8" becomes exactly 0.8 at working precision.
template <class R>
R from_decimal(double v) {
  if constexpr (is_mp_v<R>) return Mp(shortest_decimal(v));
  else return static_cast<R>(v);
}

template <class R>
double to_double(const R& v) {
  if constexpr (is_mp_v<R>) return v.template convert_to<double>();
  else return static_cast<double>(v);
}

template <class R>
R pi() {
  if constexpr (is_mp_v<R>) {
    Mp r;
    mpfr_const_pi(r.backend().data(), MPFR_RNDN);
    return r;
  } else return static_cast<R>(3.141592653589793238462643383279502884L);
}

template <class R>
bool is_finite(const R& v) {
  using std::isfinite;
  using boost::multiprecision::isfinite;
  return isfinite(v);
}

/// Decimal rendering with `sig` significant digits, scientific when needed.
template <class R>
std::string format_number(const R& v, int sig) {
  if constexpr (is_mp_v<R>) {
    return v.str(sig, std::ios_base::fmtflags(0));
  } else {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), static_cast<double>(v),
                             std::chars_format::general, sig);
    return std::string(buf, res.ptr);
  }
}

/// Angle given as a number or as "pi", "pi/6", "2*pi/3", "-pi/12".
template <class R>
R parse_angle(std::string_view text) {
  std::string s;
  for (char c : text)
    if (c != ' ') s.push_back(c);
  auto pos = s.find("pi");
  if (pos == std::string::npos) return from_string<R>(s);
  std::string num = s.substr(0, pos);
  std::string den = s.substr(pos + 2);
  long long k = 1;
  if (!num.empty()) {
    if (num.back() != '*' && num != "-") throw std::invalid_argument("bad angle: " + s);
    if (num == "-") k = -1;
    else k = std::stoll(num.substr(0, num.size() - 1));
  }
  long long d = 1;
  if (!den.empty()) {
    if (den.front() != '/') throw std::invalid_argument("bad angle: " + s);
    d = std::stoll(den.substr(1));
    if (d == 0) throw std::invalid_argument("bad angle: " + s);
  }
  return pi<R>() * from_int<R>(k) / from_int<R>(d);
}

}  // namespace nhq
