#pragma once

// Dense kernels at working precision: LU, Cholesky, thin QR, Hermitian
// eigensolver, matrix exponential, Pfaffian.

#include "nhq/gemm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

namespace nhq {

/// Unit roundoff of R at the current precision.
template <class R>
R machine_eps() {
  if constexpr (is_mp_v<R>) {
    Mp one(1);
    Mp e;
    mpfr_set_ui_2exp(e.backend().data(), 1, -static_cast<long>(mpfr_get_prec(one.backend().data())) + 1, MPFR_RNDN);
    return e;
  } else {
    return std::numeric_limits<R>::epsilon();
  }
}

namespace detail {
template <class T>
real_t<T> magnitude(const T& v) {
  if constexpr (scalar_traits<T>::is_complex) return abs(v);
  else {
    using std::abs;
    return abs(v);
  }
}

/// v / |v| for complex, sign for real; 1 at zero.
template <class T>
T unit_phase(const T& v) {
  auto m = magnitude(v);
  if (m == 0) return scalar_one<T>();
  return v / m;
}
}  // namespace detail

// ---------------------------------------------------------------- LU

template <class T>
struct LU {
  Matrix<T> lu;
  std::vector<std::size_t> perm;
  int sign = 1;
  bool singular = false;
};

template <class T>
LU<T> lu_decompose(Matrix<T> a) {
  if (!a.square()) throw std::invalid_argument("lu_decompose: matrix not square");
  const std::size_t n = a.rows();
  LU<T> out;
  out.perm.resize(n);
  std::iota(out.perm.begin(), out.perm.end(), std::size_t{0});
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    real_t<T> best = abs1(a(k, k));
    for (std::size_t i = k + 1; i < n; ++i) {
      real_t<T> v = abs1(a(i, k));
      if (v > best) {
        best = v;
        p = i;
      }
    }
    if (best == 0) {
      out.singular = true;
      continue;
    }
    if (p != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k, j), a(p, j));
      std::swap(out.perm[k], out.perm[p]);
      out.sign = -out.sign;
    }
    const T piv = a(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      if (is_zero(a(i, k))) continue;
      T f = a(i, k) / piv;
      a(i, k) = f;
      T* ai = a.row_ptr(i);
      const T* ak = a.row_ptr(k);
      T mf = -f;
      for (std::size_t j = k + 1; j < n; ++j) mac(ai[j], mf, ak[j]);
    }
  }
  out.lu = std::move(a);
  return out;
}

template <class T>
T determinant(const Matrix<T>& a) {
  auto f = lu_decompose(a);
  if (f.singular) return scalar_zero<T>();
  T d = scalar_one<T>();
  for (std::size_t i = 0; i < a.rows(); ++i) d *= f.lu(i, i);
  if (f.sign < 0) d = -d;
  return d;
}

/// Solves A X = B.
template <class T>
Matrix<T> lu_solve(const LU<T>& f, const Matrix<T>& b) {
  if (f.singular) throw NumericalError("lu_solve: singular matrix");
  const std::size_t n = f.lu.rows();
  Matrix<T> x(n, b.cols());
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < b.cols(); ++j) x(i, j) = b(f.perm[i], j);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t k = 0; k < i; ++k) {
      T m = -f.lu(i, k);
      if (is_zero(m)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) mac(x(i, j), m, x(k, j));
    }
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      T m = -f.lu(ii, k);
      if (is_zero(m)) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) mac(x(ii, j), m, x(k, j));
    }
    for (std::size_t j = 0; j < b.cols(); ++j) x(ii, j) = x(ii, j) / f.lu(ii, ii);
  }
  return x;
}

template <class T>
Matrix<T> solve(const Matrix<T>& a, const Matrix<T>& b) {
  return lu_solve(lu_decompose(a), b);
}

template <class T>
Matrix<T> inverse(const Matrix<T>& a) {
  return solve(a, Matrix<T>::identity(a.rows()));
}

// ---------------------------------------------------------- Cholesky

/// Upper-triangular R with A = R^dagger R and real positive diagonal.
/// Returns false when A is not numerically positive definite.
template <class T>
bool cholesky_upper(const Matrix<T>& a, Matrix<T>& r) {
  using std::sqrt;
  const std::size_t n = a.rows();
  r = Matrix<T>(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    real_t<T> d = real_part(a(j, j));
    for (std::size_t k = 0; k < j; ++k) d -= norm2(r(k, j));
    if (!(d > 0)) return false;
    real_t<T> rjj = sqrt(d);
    r(j, j) = T(rjj);
    for (std::size_t i = j + 1; i < n; ++i) {
      T s = a(j, i);
      for (std::size_t k = 0; k < j; ++k) {
        T m = -conj(r(k, j));
        mac(s, m, r(k, i));
      }
      r(j, i) = s / rjj;
    }
  }
  return true;
}

/// Inverse of an upper-triangular matrix.
template <class T>
Matrix<T> upper_triangular_inverse(const Matrix<T>& r) {
  const std::size_t n = r.rows();
  Matrix<T> x(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    x(j, j) = scalar_one<T>() / r(j, j);
    for (std::size_t ii = j; ii-- > 0;) {
      T s = scalar_zero<T>();
      for (std::size_t k = ii + 1; k <= j; ++k) mac(s, r(ii, k), x(k, j));
      x(ii, j) = -s / r(ii, ii);
    }
  }
  return x;
}

/// Cholesky factor R (A = R^dagger R) together with R^-1, by recursive
/// halving so the bulk of the work runs through the matrix product.
template <class T>
bool cholesky_with_inverse(const Matrix<T>& a, Matrix<T>& r, Matrix<T>& rinv) {
  const std::size_t n = a.rows();
  if (n <= 16) {
    if (!cholesky_upper(a, r)) return false;
    rinv = upper_triangular_inverse(r);
    return true;
  }
  const std::size_t h = n / 2, m = n - h;
  Matrix<T> r11, r11i, r22, r22i;
  if (!cholesky_with_inverse(a.block(0, 0, h, h), r11, r11i)) return false;
  Matrix<T> r12 = multiply(adjoint(r11i), a.block(0, h, h, m));
  Matrix<T> s = a.block(h, h, m, m) - multiply(adjoint(r12), r12);
  if (!cholesky_with_inverse(s, r22, r22i)) return false;
  r = Matrix<T>(n, n);
  r.set_block(0, 0, r11);
  r.set_block(0, h, r12);
  r.set_block(h, h, r22);
  rinv = Matrix<T>(n, n);
  rinv.set_block(0, 0, r11i);
  rinv.set_block(0, h, -multiply(multiply(r11i, r12), r22i));
  rinv.set_block(h, h, r22i);
  return true;
}

// ------------------------------------------------------------ thin QR

namespace detail {
/// Householder QR; Q has positive real R diagonal.
template <class T>
Matrix<T> householder_thin_qr(const Matrix<T>& w, const real_t<T>& tol) {
  using R = real_t<T>;
  using std::sqrt;
  const std::size_t m = w.rows(), n = w.cols();
  Matrix<T> a = w;
  std::vector<std::vector<T>> vs(n);
  std::vector<T> diag(n);
  const R scale = frobenius_norm(w);
  for (std::size_t k = 0; k < n; ++k) {
    R xn = from_int<R>(0);
    for (std::size_t i = k; i < m; ++i) xn += norm2(a(i, k));
    xn = sqrt(xn);
    if (!(xn > tol * scale) || scale == 0)
      throw NumericalError("thin_qr: rank deficient input (column " + std::to_string(k) + ")");
    T alpha = -unit_phase(a(k, k)) * T(xn);
    std::vector<T> v(m - k);
    for (std::size_t i = k; i < m; ++i) v[i - k] = a(i, k);
    v[0] -= alpha;
    R vn = from_int<R>(0);
    for (const auto& x : v) vn += norm2(x);
    vn = sqrt(vn);
    if (vn > 0)
      for (auto& x : v) x = x / vn;
    // a <- (I - 2 v v^dagger) a on the trailing block.
    for (std::size_t j = k; j < n; ++j) {
      T s = scalar_zero<T>();
      for (std::size_t i = k; i < m; ++i) mac_conj(s, v[i - k], a(i, j));
      s = s * T(from_int<R>(2));
      T ms = -s;
      for (std::size_t i = k; i < m; ++i) mac(a(i, j), ms, v[i - k]);
    }
    diag[k] = alpha;
    vs[k] = std::move(v);
  }
  Matrix<T> q(m, n);
  for (std::size_t j = 0; j < n; ++j) q(j, j) = scalar_one<T>();
  for (std::size_t k = n; k-- > 0;) {
    const auto& v = vs[k];
    for (std::size_t j = 0; j < n; ++j) {
      T s = scalar_zero<T>();
      for (std::size_t i = k; i < m; ++i) mac_conj(s, v[i - k], q(i, j));
      s = s * T(from_int<R>(2));
      T ms = -s;
      for (std::size_t i = k; i < m; ++i) mac(q(i, j), ms, v[i - k]);
    }
  }
  for (std::size_t k = 0; k < n; ++k) {
    T ph = unit_phase(diag[k]);
    for (std::size_t i = 0; i < m; ++i) q(i, k) *= ph;
  }
  return q;
}
}  // namespace detail

/// Orthonormal basis Q (Q^dagger Q = I) of the column span of w, with the
/// phase fixed by a real positive R diagonal.
///
/// Well-conditioned inputs take the Cholesky-QR route (two products and a
/// small triangular inverse, all through the fast GEMM); anything with a
/// large diagonal spread in R falls back to Householder.
template <class T>
Matrix<T> thin_qr(const Matrix<T>& w, const PrecisionContext& ctx) {
  using R = real_t<T>;
  if (w.rows() < w.cols()) throw std::invalid_argument("thin_qr: need rows >= cols");
  if (!all_finite(w)) throw NumericalError("thin_qr: non-finite input");
  const R tol = ctx.tolerance<R>();
  if (w.cols() >= 8) {
    Matrix<T> r, rinv;
    if (cholesky_with_inverse(multiply(adjoint(w), w), r, rinv)) {
      R dmax = real_part(r(0, 0)), dmin = dmax;
      for (std::size_t i = 1; i < r.rows(); ++i) {
        const R& d = real_part(r(i, i));
        if (d > dmax) dmax = d;
        if (d < dmin) dmin = d;
      }
      // Loss of orthogonality scales like eps * cond(R)^2.
      R cond = dmax / dmin;
      if (cond * cond * machine_eps<R>() * from_int<R>(static_cast<long long>(w.rows())) < tol)
        return multiply(w, rinv);
    }
  }
  return detail::householder_thin_qr(w, tol);
}

/// max |Q^dagger Q - I|
template <class T>
real_t<T> orthonormality_defect(const Matrix<T>& q) {
  return max_abs(multiply(adjoint(q), q) - Matrix<T>::identity(q.cols()));
}

// ------------------------------------------------- Hermitian eigensolver

template <class R>
struct EigenSystem {
  std::vector<R> values;  // ascending
  CMatrix<R> vectors;     // columns
};

template <class T>
real_t<T> hermiticity_defect(const Matrix<T>& a) {
  real_t<T> m = from_int<real_t<T>>(0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) {
      real_t<T> d = abs1(a(i, j) - conj(a(j, i)));
      if (d > m) m = d;
    }
  return m;
}

namespace detail {
template <class R>
R sign_of(const R& a, const R& b) {
  using std::abs;
  return b >= 0 ? R(abs(a)) : R(-abs(a));
}

/// Implicit QL on a real symmetric tridiagonal (d, e[i] couples i,i+1);
/// rotations are accumulated into the columns of z.
template <class R>
void tridiagonal_ql(std::vector<R>& d, std::vector<R>& e, CMatrix<R>& z) {
  using std::abs;
  using std::hypot;
  using boost::multiprecision::hypot;
  const std::size_t n = d.size();
  if (n == 0) return;
  const R eps = machine_eps<R>();
  const R two = from_int<R>(2);
  e.resize(n);
  e[n - 1] = from_int<R>(0);
  for (std::size_t l = 0; l < n; ++l) {
    int iter = 0;
    std::size_t m;
    do {
      for (m = l; m + 1 < n; ++m) {
        R dd = abs(d[m]) + abs(d[m + 1]);
        if (abs(e[m]) <= eps * dd) break;
      }
      if (m != l) {
        if (iter++ == 200) throw NumericalError("hermitian_eigen: QL iteration did not converge");
        R g = (d[l + 1] - d[l]) / (two * e[l]);
        R r = hypot(g, from_int<R>(1));
        g = d[m] - d[l] + e[l] / (g + sign_of(r, g));
        R s = from_int<R>(1), c = from_int<R>(1), p = from_int<R>(0);
        bool underflow = false;
        std::size_t i = m;
        while (i-- > l) {
          R f = s * e[i];
          R b = c * e[i];
          r = hypot(f, g);
          e[i + 1] = r;
          if (r == 0) {
            d[i + 1] -= p;
            e[m] = from_int<R>(0);
            underflow = true;
            break;
          }
          s = f / r;
          c = g / r;
          g = d[i + 1] - p;
          r = (d[i] - g) * s + two * c * b;
          p = s * r;
          d[i + 1] = g + p;
          g = c * r - b;
          for (std::size_t k = 0; k < z.rows(); ++k) {
            Complex<R> f2 = z(k, i + 1);
            z(k, i + 1) = z(k, i) * s + f2 * c;
            z(k, i) = z(k, i) * c - f2 * s;
          }
        }
        if (underflow) continue;
        d[l] -= p;
        e[l] = g;
        e[m] = from_int<R>(0);
      }
    } while (m != l);
  }
}
}  // namespace detail

/// Eigen-decomposition of a Hermitian matrix: Householder reduction to a
/// real tridiagonal followed by implicit QL.
template <class R>
EigenSystem<R> hermitian_eigen(const CMatrix<R>& input) {
  using std::sqrt;
  using T = Complex<R>;
  if (!input.square()) throw std::invalid_argument("hermitian_eigen: matrix not square");
  const std::size_t n = input.rows();
  CMatrix<R> a = input;
  CMatrix<R> q = CMatrix<R>::identity(n);
  for (std::size_t k = 0; k + 2 < n; ++k) {
    R xn = from_int<R>(0);
    for (std::size_t i = k + 1; i < n; ++i) xn += norm2(a(i, k));
    xn = sqrt(xn);
    if (xn == 0) continue;
    T alpha = -detail::unit_phase(a(k + 1, k)) * T(xn);
    std::vector<T> v(n, T{});
    for (std::size_t i = k + 1; i < n; ++i) v[i] = a(i, k);
    v[k + 1] -= alpha;
    R vn = from_int<R>(0);
    for (std::size_t i = k + 1; i < n; ++i) vn += norm2(v[i]);
    vn = sqrt(vn);
    if (vn == 0) continue;
    for (std::size_t i = k + 1; i < n; ++i) v[i] = v[i] / vn;
    // p = A v, w = p - (v^dagger p) v, A <- A - 2 (v w^dagger + w v^dagger)
    std::vector<T> p(n, T{});
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k + 1; j < n; ++j) mac(p[i], a(i, j), v[j]);
    T vp{};
    for (std::size_t i = k + 1; i < n; ++i) mac_conj(vp, v[i], p[i]);
    std::vector<T> w(n, T{});
    for (std::size_t i = k; i < n; ++i) w[i] = p[i] - vp * v[i];
    const R two = from_int<R>(2);
    for (std::size_t i = k; i < n; ++i)
      for (std::size_t j = k; j < n; ++j) {
        T upd = v[i] * conj(w[j]);
        mac(upd, w[i], conj(v[j]));
        a(i, j) -= upd * two;
      }
    // q <- q H
    for (std::size_t i = 0; i < n; ++i) {
      T s{};
      for (std::size_t j = k + 1; j < n; ++j) mac(s, q(i, j), v[j]);
      s = s * two;
      for (std::size_t j = k + 1; j < n; ++j) q(i, j) -= s * conj(v[j]);
    }
  }
  std::vector<R> d(n), e(n, from_int<R>(0));
  for (std::size_t i = 0; i < n; ++i) d[i] = a(i, i).re;
  // Diagonal phases turn the complex sub-diagonal real and positive.
  T phase = scalar_one<T>();
  for (std::size_t i = 0; i + 1 < n; ++i) {
    R m = abs(a(i + 1, i));
    e[i] = m;
    T next = m == 0 ? phase : phase * (a(i + 1, i) / m);
    for (std::size_t r = 0; r < n; ++r) q(r, i + 1) *= next;
    phase = next;
  }
  detail::tridiagonal_ql(d, e, q);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return d[x] < d[y]; });
  EigenSystem<R> es;
  es.values.reserve(n);
  es.vectors = CMatrix<R>(n, n);
  for (std::size_t c = 0; c < n; ++c) {
    es.values.push_back(d[order[c]]);
    for (std::size_t r = 0; r < n; ++r) es.vectors(r, c) = q(r, order[c]);
  }
  return es;
}

/// Eigenvalues of a correlation block, which must lie in [0, 1]. Values
/// within tolerance of the boundary are clamped; anything further out is a
/// broken correlation matrix.
template <class R>
std::vector<R> pair_spectrum(const CMatrix<R>& g, const PrecisionContext& ctx) {
  const R tol = ctx.tolerance<R>();
  R scale = max_abs(g);
  if (scale < 1) scale = from_int<R>(1);
  if (hermiticity_defect(g) > tol * scale) throw NumericalError("pair_spectrum: input is not Hermitian");
  auto vals = hermitian_eigen(g).values;
  const R one = from_int<R>(1), zero = from_int<R>(0);
  for (auto& v : vals) {
    if (v < -tol || v > one + tol)
      throw NumericalError("pair_spectrum: eigenvalue " + format_number(v, 12) + " outside [0,1]");
    if (v < zero) v = zero;
    if (v > one) v = one;
  }
  return vals;
}

// ------------------------------------------------ matrix exponential

template <class R>
struct ExpPair {
  CMatrix<R> forward;   // exp(scale * A)
  CMatrix<R> backward;  // exp(-scale * A)
  R residual;           // max |forward * backward - I|
  bool used_eigen = false;
};

namespace detail {

/// Smallest diagonal Pade degree whose truncation bound at ||X|| <= 1/2
/// stays below 10^-(digits + 4).
inline int pade_degree(int digits) {
  for (int m = 2; m < 400; ++m) {
    double log10_err = (2.0 * std::lgamma(m + 1.0) - std::lgamma(2.0 * m + 1.0) - std::lgamma(2.0 * m + 2.0)) /
                           std::log(10.0) +
                       (2.0 * m + 1.0) * std::log10(0.5) + std::log10(8.0);
    if (log10_err < -(digits + 4)) return m;
  }
  return 400;
}

template <class R>
CMatrix<R> pade_exp(const CMatrix<R>& a, int digits) {
  using T = Complex<R>;
  const std::size_t n = a.rows();
  // Scale to ||X||_1 <= 1/2.
  R nrm = one_norm(a);
  int s = 0;
  R half = ratio<R>(1, 2);
  R lim = half;
  while (nrm > lim) {
    lim *= 2;
    ++s;
  }
  CMatrix<R> x = a;
  if (s > 0) {
    R f = from_int<R>(1);
    for (int i = 0; i < s; ++i) f /= 2;
    x *= T(f);
  }
  const int m = pade_degree(digits);
  std::vector<R> c(m + 1);
  c[0] = from_int<R>(1);
  for (int k = 0; k < m; ++k) c[k + 1] = c[k] * from_int<R>(m - k) / (from_int<R>(2 * m - k) * from_int<R>(k + 1));
  CMatrix<R> y = multiply(x, x);
  auto horner = [&](int parity) {
    int top = m;
    if ((top & 1) != parity) --top;
    CMatrix<R> acc = CMatrix<R>::identity(n) * T(c[top]);
    for (int k = top - 2; k >= 0; k -= 2) {
      acc = multiply(acc, y);
      for (std::size_t i = 0; i < n; ++i) acc(i, i) += T(c[k]);
    }
    return acc;
  };
  CMatrix<R> even = horner(0);
  CMatrix<R> odd = multiply(x, horner(1));
  CMatrix<R> num = even + odd;
  CMatrix<R> den = even - odd;
  CMatrix<R> e = solve(den, num);
  for (int i = 0; i < s; ++i) e = multiply(e, e);
  return e;
}

template <class R>
Complex<R> cexp(const Complex<R>& z) {
  using std::exp;
  R m = exp(z.re);
  Complex<R> p = expi(z.im);
  return p * m;
}

}  // namespace detail

/// exp(scale * A) and exp(-scale * A) without the residual gate.
template <class R>
ExpPair<R> mat_exp_pair_unchecked(const CMatrix<R>& a, const Complex<R>& scale, const PrecisionContext& ctx) {
  if (!a.square()) throw std::invalid_argument("mat_exp: matrix not square");
  if (!all_finite(a) || !is_finite(scale.re) || !is_finite(scale.im))
    throw std::invalid_argument("mat_exp: non-finite input");
  const std::size_t n = a.rows();
  ExpPair<R> out;
  R scl = max_abs(a);
  if (scl < 1) scl = from_int<R>(1);
  if (hermiticity_defect(a) <= ctx.tolerance<R>() * scl) {
    // Normal input: eigenvector matrix is unitary (condition number 1).
    auto es = hermitian_eigen(a);
    CMatrix<R> vf = es.vectors, vb = es.vectors;
    for (std::size_t j = 0; j < n; ++j) {
      Complex<R> lam(es.values[j]);
      Complex<R> ef = detail::cexp(scale * lam);
      Complex<R> eb = detail::cexp(-(scale * lam));
      for (std::size_t i = 0; i < n; ++i) {
        vf(i, j) *= ef;
        vb(i, j) *= eb;
      }
    }
    CMatrix<R> vh = adjoint(es.vectors);
    out.forward = multiply(vf, vh);
    out.backward = multiply(vb, vh);
    out.used_eigen = true;
  } else {
    CMatrix<R> sa = a * scale;
    out.forward = detail::pade_exp(sa, ctx.digits);
    out.backward = detail::pade_exp(-sa, ctx.digits);
  }
  out.residual = max_abs(multiply(out.forward, out.backward) - CMatrix<R>::identity(n));
  return out;
}

/// exp(scale * A) together with exp(-scale * A); throws when the product
/// of the two misses the identity by more than dimension * tolerance,
/// relative to the size of the factors.
template <class R>
ExpPair<R> mat_exp_pair(const CMatrix<R>& a, const Complex<R>& scale, const PrecisionContext& ctx) {
  auto out = mat_exp_pair_unchecked(a, scale, ctx);
  R bound = ctx.tolerance<R>() * from_int<R>(static_cast<long long>(a.rows()));
  R growth = max_abs(out.forward) * max_abs(out.backward);
  if (growth < 1) growth = from_int<R>(1);
  if (!(out.residual <= bound * growth))
    throw NumericalError("mat_exp: residual " + format_number(out.residual, 6) + " exceeds bound");
  return out;
}

template <class R>
CMatrix<R> mat_exp(const CMatrix<R>& a, const Complex<R>& scale, const PrecisionContext& ctx) {
  return mat_exp_pair(a, scale, ctx).forward;
}

// ------------------------------------------------------------ Pfaffian

template <class T>
real_t<T> antisymmetry_defect(const Matrix<T>& a) {
  real_t<T> m = from_int<real_t<T>>(0);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j) {
      real_t<T> d = abs1(a(i, j) + a(j, i));
      if (d > m) m = d;
    }
  return m;
}

/// Pfaffian by Parlett-Reid elimination with partial pivoting.
template <class T>
T pfaffian(const Matrix<T>& input, const PrecisionContext& ctx) {
  using Rl = real_t<T>;
  if (!input.square()) throw std::invalid_argument("pfaffian: matrix not square");
  const std::size_t n = input.rows();
  if (n % 2 == 1) throw std::invalid_argument("pfaffian: odd dimension");
  if (n == 0) return scalar_one<T>();
  Rl scl = max_abs(input);
  if (scl < 1) scl = from_int<Rl>(1);
  if (antisymmetry_defect(input) > ctx.tolerance<Rl>() * scl)
    throw std::invalid_argument("pfaffian: matrix not antisymmetric");
  Matrix<T> a = input;
  T result = scalar_one<T>();
  for (std::size_t k = 0; k + 1 < n; k += 2) {
    std::size_t kp = k + 1;
    Rl best = abs1(a(k + 1, k));
    for (std::size_t i = k + 2; i < n; ++i) {
      Rl v = abs1(a(i, k));
      if (v > best) {
        best = v;
        kp = i;
      }
    }
    if (kp != k + 1) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a(k + 1, j), a(kp, j));
      for (std::size_t i = 0; i < n; ++i) std::swap(a(i, k + 1), a(i, kp));
      result = -result;
    }
    if (best == 0) return scalar_zero<T>();
    const T piv = a(k, k + 1);
    result *= piv;
    if (k + 2 < n) {
      std::vector<T> tau(n - k - 2);
      for (std::size_t i = k + 2; i < n; ++i) tau[i - k - 2] = a(k, i) / piv;
      // a[i][j] += tau_i a[j][k+1] - tau_j a[i][k+1]
      for (std::size_t i = k + 2; i < n; ++i) {
        const T ti = tau[i - k - 2];
        const T ai1 = -a(i, k + 1);
        for (std::size_t j = k + 2; j < n; ++j) {
          mac(a(i, j), ti, a(j, k + 1));
          mac(a(i, j), tau[j - k - 2], ai1);
        }
      }
    }
  }
  return result;
}

}  // namespace nhq
