#pragma once

#include "nhq/precision.hpp"

#include <cmath>
#include <ostream>

namespace nhq {

/// Complex number over an arbitrary real type. std::complex is only
/// specified for the built-in floating types, so this carries the
/// multiprecision case.
template <class R>
struct Complex {
  R re{};
  R im{};

  Complex() = default;
  Complex(const R& r) : re(r), im(from_int<R>(0)) {}  // NOLINT(google-explicit-constructor)
  Complex(const R& r, const R& i) : re(r), im(i) {}

  Complex& operator+=(const Complex& o) {
    re += o.re;
    im += o.im;
    return *this;
  }
  Complex& operator-=(const Complex& o) {
    re -= o.re;
    im -= o.im;
    return *this;
  }
  Complex& operator*=(const Complex& o) {
    R r = re * o.re - im * o.im;
    im = re * o.im + im * o.re;
    re = r;
    return *this;
  }
  Complex& operator*=(const R& s) {
    re *= s;
    im *= s;
    return *this;
  }
  Complex& operator/=(const R& s) {
    re /= s;
    im /= s;
    return *this;
  }
  Complex& operator/=(const Complex& o) {
    *this = *this / o;
    return *this;
  }

  friend Complex operator+(Complex a, const Complex& b) { return a += b; }
  friend Complex operator-(Complex a, const Complex& b) { return a -= b; }
  friend Complex operator-(const Complex& a) { return {-a.re, -a.im}; }
  friend Complex operator*(const Complex& a, const Complex& b) {
    return {R(a.re * b.re - a.im * b.im), R(a.re * b.im + a.im * b.re)};
  }
  friend Complex operator*(const Complex& a, const R& s) { return {R(a.re * s), R(a.im * s)}; }
  friend Complex operator*(const R& s, const Complex& a) { return {R(a.re * s), R(a.im * s)}; }
  friend Complex operator/(const Complex& a, const R& s) { return {R(a.re / s), R(a.im / s)}; }
  friend Complex operator/(const Complex& a, const Complex& b) {
    // Smith's algorithm keeps the intermediate magnitudes bounded.
    using std::abs;
    if (abs(b.re) >= abs(b.im)) {
      R q = b.im / b.re;
      R d = b.re + b.im * q;
      return {R((a.re + a.im * q) / d), R((a.im - a.re * q) / d)};
    }
    R q = b.re / b.im;
    R d = b.re * q + b.im;
    return {R((a.re * q + a.im) / d), R((a.im * q - a.re) / d)};
  }
  friend bool operator==(const Complex& a, const Complex& b) { return a.re == b.re && a.im == b.im; }

  friend std::ostream& operator<<(std::ostream& os, const Complex& z) {
    return os << '(' << z.re << ',' << z.im << ')';
  }
};

template <class R>
Complex<R> conj(const Complex<R>& z) {
  return {z.re, R(-z.im)};
}

/// |z|^2
template <class R>
R norm2(const Complex<R>& z) {
  return z.re * z.re + z.im * z.im;
}

template <class R>
R abs(const Complex<R>& z) {
  using std::hypot;
  using boost::multiprecision::hypot;
  return hypot(z.re, z.im);
}

/// max(|re|, |im|); cheap magnitude for pivoting.
template <class R>
R abs1(const Complex<R>& z) {
  using std::abs;
  R a = abs(z.re);
  R b = abs(z.im);
  return a > b ? a : b;
}

/// e^{i phi}
template <class R>
Complex<R> expi(const R& phi) {
  using std::cos;
  using std::sin;
  return {R(cos(phi)), R(sin(phi))};
}

template <class R>
Complex<R> sqrt(const Complex<R>& z) {
  using std::sqrt;
  using std::abs;
  R m = abs(z);
  if (m == 0) return {};
  R two = from_int<R>(2);
  R r = sqrt((m + abs(z.re)) / two);
  if (z.re >= 0) return {r, R(z.im / (two * r))};
  R i = z.im >= 0 ? r : R(-r);
  return {R(abs(z.im) / (two * r)), i};
}

/// Unit imaginary.
template <class R>
Complex<R> imag_unit() {
  return {from_int<R>(0), from_int<R>(1)};
}

/// acc += a * b without temporaries on the multiprecision path.
template <class R>
inline void mac(Complex<R>& acc, const Complex<R>& a, const Complex<R>& b) {
  acc.re += a.re * b.re;
  acc.re -= a.im * b.im;
  acc.im += a.re * b.im;
  acc.im += a.im * b.re;
}

/// acc += conj(a) * b
template <class R>
inline void mac_conj(Complex<R>& acc, const Complex<R>& a, const Complex<R>& b) {
  acc.re += a.re * b.re;
  acc.re += a.im * b.im;
  acc.im += a.re * b.im;
  acc.im -= a.im * b.re;
}

template <class R>
inline void mac(R& acc, const R& a, const R& b) {
  acc += a * b;
}

template <class R>
inline void mac_conj(R& acc, const R& a, const R& b) {
  acc += a * b;
}

// Uniform accessors so kernels can be written once for real and complex
// element types.

template <class T>
struct scalar_traits {
  using real_type = T;
  static constexpr bool is_complex = false;
};

template <class R>
struct scalar_traits<Complex<R>> {
  using real_type = R;
  static constexpr bool is_complex = true;
};

template <class T>
using real_t = typename scalar_traits<T>::real_type;

template <class R>
R conj(const R& x) {
  return x;
}
template <class R>
R norm2(const R& x) {
  return x * x;
}
template <class R>
R abs1(const R& x) {
  using std::abs;
  return abs(x);
}
template <class R>
const R& real_part(const R& x) {
  return x;
}
template <class R>
const R& real_part(const Complex<R>& z) {
  return z.re;
}
template <class R>
R imag_part(const R&) {
  return from_int<R>(0);
}
template <class R>
const R& imag_part(const Complex<R>& z) {
  return z.im;
}

template <class R>
bool is_zero(const R& x) {
  return x == 0;
}
template <class R>
bool is_zero(const Complex<R>& z) {
  return z.re == 0 && z.im == 0;
}

template <class T>
T scalar_zero() {
  if constexpr (scalar_traits<T>::is_complex) return T(from_int<real_t<T>>(0));
  else return from_int<T>(0);
}
template <class T>
T scalar_one() {
  if constexpr (scalar_traits<T>::is_complex) return T(from_int<real_t<T>>(1));
  else return from_int<T>(1);
}

}  // namespace nhq
