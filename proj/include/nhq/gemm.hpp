#pragma once

// Matrix product dispatch. Multiprecision complex products go through a
// block fixed-point kernel: each row of the left factor and each column of
// the right factor is scaled to a common binary exponent and converted to
// integers, limb products are summed column-wise in 128-bit words, and
// each result entry is rounded once. The error bound matches the usual
// normwise floating-point GEMM bound, at a fraction of the MPFR cost.

#include "nhq/matrix.hpp"

#include <gmp.h>
#include <mpfr.h>

#include <algorithm>
#include <climits>
#include <cstdint>
#include <iterator>
#include <utility>
#include <vector>

namespace nhq {

namespace detail {

/// Sign-magnitude integers of a fixed limb count, laid out contiguously.
struct FixedBlock {
  std::size_t limbs = 0;
  std::vector<mp_limb_t> mag;
  std::vector<signed char> sign;

  void resize(std::size_t count, std::size_t nl) {
    limbs = nl;
    mag.assign(count * nl, 0);
    sign.assign(count, 0);
  }
  const mp_limb_t* at(std::size_t idx) const { return mag.data() + idx * limbs; }
};

class FixedPointGemm {
public:
  explicit FixedPointGemm(mpfr_prec_t prec) {
    limbs_ = static_cast<std::size_t>((prec + 16 + GMP_NUMB_BITS - 1) / GMP_NUMB_BITS);
    frac_bits_ = static_cast<long>(limbs_ * GMP_NUMB_BITS) - 2;
    mpz_init(z_);
  }
  ~FixedPointGemm() { mpz_clear(z_); }
  FixedPointGemm(const FixedPointGemm&) = delete;
  FixedPointGemm& operator=(const FixedPointGemm&) = delete;

  /// Largest binary exponent among the nonzero entries; LONG_MIN if none.
  static long max_exponent(const mpfr_srcptr* vals, std::size_t n) {
    long e = LONG_MIN;
    for (std::size_t i = 0; i < n; ++i)
      if (mpfr_regular_p(vals[i])) e = std::max<long>(e, mpfr_get_exp(vals[i]));
    return e;
  }

  /// Stores round(x * 2^(frac_bits - e)) into slot idx of the block.
  void encode(mpfr_srcptr x, long e, FixedBlock& blk, std::size_t idx) {
    mp_limb_t* dst = blk.mag.data() + idx * limbs_;
    std::fill(dst, dst + limbs_, mp_limb_t{0});
    blk.sign[idx] = 0;
    if (!mpfr_regular_p(x)) return;
    mpfr_exp_t ex = mpfr_get_z_2exp(z_, x);
    long shift = static_cast<long>(ex) - e + frac_bits_;
    if (shift >= 0) mpz_mul_2exp(z_, z_, static_cast<mp_bitcnt_t>(shift));
    else mpz_tdiv_q_2exp(z_, z_, static_cast<mp_bitcnt_t>(-shift));
    std::size_t n = mpz_size(z_);
    if (n == 0) return;
    const mp_limb_t* src = mpz_limbs_read(z_);
    std::copy(src, src + std::min(n, limbs_), dst);
    blk.sign[idx] = static_cast<signed char>(mpz_sgn(z_));
  }

  std::size_t limbs() const { return limbs_; }
  long frac_bits() const { return frac_bits_; }

private:
  std::size_t limbs_;
  long frac_bits_;
  mpz_t z_;
};

/// Truncated dot product of sign-magnitude fixed-point vectors by product
/// scanning: each output column is summed in a 192-bit register window over
/// all terms of one sign, and carries move to the next column. Columns below
/// kLow are dropped; their weight is far under the working precision.
template <std::size_t NL>
struct DotKernel {
  using u128 = unsigned __int128;
  static constexpr std::size_t kLow = NL >= 2 ? NL - 2 : 0;
  static constexpr std::size_t kWidth = 2 * NL + 1 - kLow;

  template <std::size_t P>
  static void column(const mp_limb_t* a, const mp_limb_t* b, const std::uint32_t* ka, const std::uint32_t* kb,
                     std::size_t count, u128& lo, std::uint64_t& hi) {
    constexpr std::size_t i0 = P + 1 > NL ? P + 1 - NL : 0;
    constexpr std::size_t i1 = P < NL - 1 ? P : NL - 1;
    for (std::size_t t = 0; t < count; ++t) {
      const mp_limb_t* x = a + ka[t];
      const mp_limb_t* y = b + kb[t];
      [&]<std::size_t... I>(std::index_sequence<I...>) {
        ((lo += static_cast<u128>(x[i0 + I]) * y[P - i0 - I], hi += lo < static_cast<u128>(x[i0 + I]) * y[P - i0 - I]),
         ...);
      }(std::make_index_sequence<i1 - i0 + 1>{});
    }
  }

  /// out[0..kWidth) = sum over listed terms of a_k * b_k, shifted right by kLow limbs.
  static void run(const mp_limb_t* a, const mp_limb_t* b, const std::uint32_t* ka, const std::uint32_t* kb,
                  std::size_t count, mp_limb_t* out) {
    u128 carry = 0;
    [&]<std::size_t... Q>(std::index_sequence<Q...>) {
      (
          [&] {
            constexpr std::size_t P = kLow + Q;
            u128 lo = carry;
            std::uint64_t hi = 0;
            column<P>(a, b, ka, kb, count, lo, hi);
            out[P - kLow] = static_cast<mp_limb_t>(lo);
            carry = (lo >> 64) | (static_cast<u128>(hi) << 64);
          }(),
          ...);
    }(std::make_index_sequence<2 * NL - kLow>{});
    out[2 * NL - kLow] = static_cast<mp_limb_t>(carry);
  }
};

/// Signed integer (pos - neg) * 2^scale into an MPFR value.
inline void store_difference(const mp_limb_t* pos, const mp_limb_t* neg, std::size_t n, long scale, mpfr_ptr out,
                             mpz_t tmp) {
  int c = mpn_cmp(pos, neg, static_cast<mp_size_t>(n));
  if (c == 0) {
    mpfr_set_zero(out, 1);
    return;
  }
  mp_limb_t* d = mpz_limbs_write(tmp, static_cast<mp_size_t>(n));
  if (c > 0) mpn_sub_n(d, pos, neg, static_cast<mp_size_t>(n));
  else mpn_sub_n(d, neg, pos, static_cast<mp_size_t>(n));
  mp_size_t used = static_cast<mp_size_t>(n);
  while (used > 0 && d[used - 1] == 0) --used;
  mpz_limbs_finish(tmp, c > 0 ? used : -used);
  mpfr_set_z_2exp(out, tmp, scale, MPFR_RNDN);
}

/// Complex product with three real dot products per entry:
/// re = ar.br - ai.bi, im = (ar+ai).(br+bi) - ar.br - ai.bi, all exact in
/// integers before the final rounding.
template <std::size_t NL>
void fixed_point_kernel(const FixedBlock* A, const FixedBlock* B, const std::vector<long>& row_exp,
                        const std::vector<long>& col_exp, std::size_t kk, long frac_bits, Matrix<Complex<Mp>>& c) {
  using K = DotKernel<NL>;
  constexpr std::size_t W = K::kWidth;
  std::vector<std::uint32_t> ka[3][2], kb[3][2];
  for (auto& pr : ka)
    for (auto& v : pr) v.resize(kk);
  for (auto& pr : kb)
    for (auto& v : pr) v.resize(kk);
  mp_limb_t dot[3][2][W];
  mp_limb_t rp[W], rn[W], ip[W], in[W];
  mpz_t tmp;
  mpz_init(tmp);
  for (std::size_t i = 0; i < c.rows(); ++i) {
    if (row_exp[i] == LONG_MIN) continue;
    for (std::size_t j = 0; j < c.cols(); ++j) {
      if (col_exp[j] == LONG_MIN) continue;
      for (int q = 0; q < 3; ++q) {
        std::size_t cnt[2] = {0, 0};
        const auto& sa = A[q].sign;
        const auto& sb = B[q].sign;
        for (std::size_t k = 0; k < kk; ++k) {
          const int s = sa[i * kk + k] * sb[j * kk + k];
          if (s == 0) continue;
          const int w = s > 0 ? 0 : 1;
          ka[q][w][cnt[w]] = static_cast<std::uint32_t>((i * kk + k) * NL);
          kb[q][w][cnt[w]] = static_cast<std::uint32_t>((j * kk + k) * NL);
          ++cnt[w];
        }
        for (int w = 0; w < 2; ++w)
          K::run(A[q].mag.data(), B[q].mag.data(), ka[q][w].data(), kb[q][w].data(), cnt[w], dot[q][w]);
      }
      // re: P1 - P2
      mpn_add_n(rp, dot[0][0], dot[1][1], W);
      mpn_add_n(rn, dot[0][1], dot[1][0], W);
      // im: P3 - P1 - P2
      mpn_add_n(ip, dot[2][0], dot[0][1], W);
      mpn_add_n(ip, ip, dot[1][1], W);
      mpn_add_n(in, dot[2][1], dot[0][0], W);
      mpn_add_n(in, in, dot[1][0], W);
      const long scale = row_exp[i] + col_exp[j] - 2 * frac_bits + static_cast<long>(K::kLow * GMP_NUMB_BITS);
      store_difference(rp, rn, W, scale, c(i, j).re.backend().data(), tmp);
      store_difference(ip, in, W, scale, c(i, j).im.backend().data(), tmp);
    }
  }
  mpz_clear(tmp);
}

template <std::size_t... N>
bool dispatch_kernel(std::size_t nl, std::index_sequence<N...>, const FixedBlock* A, const FixedBlock* B,
                     const std::vector<long>& row_exp, const std::vector<long>& col_exp, std::size_t kk,
                     long frac_bits, Matrix<Complex<Mp>>& c) {
  return ((nl == N + 1 ? (fixed_point_kernel<N + 1>(A, B, row_exp, col_exp, kk, frac_bits, c), true) : false) ||
          ...);
}

/// dst = x + y in sign-magnitude, slot by slot.
inline void add_blocks(const FixedBlock& x, const FixedBlock& y, FixedBlock& dst) {
  const std::size_t nl = x.limbs;
  const std::size_t count = x.sign.size();
  dst.resize(count, nl);
  for (std::size_t t = 0; t < count; ++t) {
    const int sx = x.sign[t], sy = y.sign[t];
    mp_limb_t* d = dst.mag.data() + t * nl;
    const mp_limb_t* px = x.at(t);
    const mp_limb_t* py = y.at(t);
    if (sx == 0 && sy == 0) continue;
    if (sy == 0 || sx == 0) {
      const mp_limb_t* src = sx ? px : py;
      std::copy(src, src + nl, d);
      dst.sign[t] = static_cast<signed char>(sx ? sx : sy);
    } else if (sx == sy) {
      mpn_add_n(d, px, py, static_cast<mp_size_t>(nl));
      dst.sign[t] = static_cast<signed char>(sx);
    } else {
      int c = mpn_cmp(px, py, static_cast<mp_size_t>(nl));
      if (c == 0) continue;
      if (c > 0) mpn_sub_n(d, px, py, static_cast<mp_size_t>(nl));
      else mpn_sub_n(d, py, px, static_cast<mp_size_t>(nl));
      dst.sign[t] = static_cast<signed char>(c > 0 ? sx : sy);
    }
  }
}

inline constexpr std::size_t kMaxFixedLimbs = 16;

inline Matrix<Complex<Mp>> multiply_fixed_point(const Matrix<Complex<Mp>>& a, const Matrix<Complex<Mp>>& b) {
  const std::size_t m = a.rows(), kk = a.cols(), n = b.cols();
  Matrix<Complex<Mp>> c(m, n);
  if (m == 0 || n == 0) return c;
  mpfr_prec_t prec = mpfr_get_prec(c(0, 0).re.backend().data());
  for (const auto& v : a.storage())
    prec = std::max(prec, std::max(mpfr_get_prec(v.re.backend().data()), mpfr_get_prec(v.im.backend().data())));
  for (const auto& v : b.storage())
    prec = std::max(prec, std::max(mpfr_get_prec(v.re.backend().data()), mpfr_get_prec(v.im.backend().data())));
  FixedPointGemm fx(prec);
  const std::size_t nl = fx.limbs();
  if (nl > kMaxFixedLimbs) return multiply_naive(a, b);

  // Rows of a, columns of b: real and imaginary parts stored separately.
  FixedBlock ar, ai, br, bi;
  ar.resize(m * kk, nl);
  ai.resize(m * kk, nl);
  br.resize(n * kk, nl);
  bi.resize(n * kk, nl);
  std::vector<long> row_exp(m), col_exp(n);
  std::vector<mpfr_srcptr> buf(2 * std::max(m, std::max(n, kk)));

  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t k = 0; k < kk; ++k) {
      buf[2 * k] = a(i, k).re.backend().data();
      buf[2 * k + 1] = a(i, k).im.backend().data();
    }
    long e = FixedPointGemm::max_exponent(buf.data(), 2 * kk);
    row_exp[i] = e;
    if (e == LONG_MIN) continue;
    for (std::size_t k = 0; k < kk; ++k) {
      fx.encode(a(i, k).re.backend().data(), e, ar, i * kk + k);
      fx.encode(a(i, k).im.backend().data(), e, ai, i * kk + k);
    }
  }
  for (std::size_t j = 0; j < n; ++j) {
    for (std::size_t k = 0; k < kk; ++k) {
      buf[2 * k] = b(k, j).re.backend().data();
      buf[2 * k + 1] = b(k, j).im.backend().data();
    }
    long e = FixedPointGemm::max_exponent(buf.data(), 2 * kk);
    col_exp[j] = e;
    if (e == LONG_MIN) continue;
    for (std::size_t k = 0; k < kk; ++k) {
      fx.encode(b(k, j).re.backend().data(), e, br, j * kk + k);
      fx.encode(b(k, j).im.backend().data(), e, bi, j * kk + k);
    }
  }

  FixedBlock A[3] = {std::move(ar), std::move(ai), {}};
  FixedBlock B[3] = {std::move(br), std::move(bi), {}};
  add_blocks(A[0], A[1], A[2]);
  add_blocks(B[0], B[1], B[2]);
  dispatch_kernel(nl, std::make_index_sequence<kMaxFixedLimbs>{}, A, B, row_exp, col_exp, kk, fx.frac_bits(), c);
  return c;
}

inline bool all_regular_or_zero(const Matrix<Complex<Mp>>& a) {
  for (const auto& v : a.storage()) {
    mpfr_srcptr r = v.re.backend().data(), i = v.im.backend().data();
    if (!(mpfr_regular_p(r) || mpfr_zero_p(r)) || !(mpfr_regular_p(i) || mpfr_zero_p(i))) return false;
  }
  return true;
}

}  // namespace detail

template <class T>
Matrix<T> multiply(const Matrix<T>& a, const Matrix<T>& b) {
  if constexpr (std::is_same_v<T, Complex<Mp>>) {
    if (a.cols() != b.rows()) throw std::invalid_argument("multiply: inner dimension mismatch");
    if (a.cols() >= 4 && detail::all_regular_or_zero(a) && detail::all_regular_or_zero(b))
      return detail::multiply_fixed_point(a, b);
  }
  return multiply_naive(a, b);
}

}  // namespace nhq
