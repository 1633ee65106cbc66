#include "test_util.hpp"

using namespace nhq;
using namespace nhq::testing;

namespace {

/// exp(s A) by a plain truncated Taylor series.
CMatrix<Mp> taylor_exp(const CMatrix<Mp>& a, const Complex<Mp>& s, int terms) {
  const std::size_t n = a.rows();
  CMatrix<Mp> sa = a * s;
  CMatrix<Mp> term = CMatrix<Mp>::identity(n), sum = term;
  for (int k = 1; k < terms; ++k) {
    term = multiply_naive(term, sa);
    term *= Complex<Mp>(Mp(1) / k);
    sum += term;
  }
  return sum;
}

CMatrix<Mp> hn_block(const Mp& J, const Mp& g) {
  CMatrix<Mp> a(2, 2);
  a(0, 1) = Complex<Mp>(-(J + g));
  a(1, 0) = Complex<Mp>(-(J - g));
  return a;
}

Mp pf4(const RMatrix<Mp>& a) { return a(0, 1) * a(2, 3) - a(0, 2) * a(1, 3) + a(0, 3) * a(1, 2); }

}  // namespace

class Linalg : public MpTest {};

// ----------------------------------------------------------- mat_exp

TEST_F(Linalg, ExpOfZeroIsIdentity) {
  auto e = mat_exp(CMatrix<Mp>(3, 3), Complex<Mp>(Mp(1)), ctx());
  EXPECT_LT(max_abs_diff(e, CMatrix<Mp>::identity(3)), tol());
}

TEST_F(Linalg, ExpOfImaginaryDiagonal) {
  CMatrix<Mp> a(2, 2);
  a(0, 0) = Complex<Mp>(Mp(0), pi<Mp>());
  a(1, 1) = Complex<Mp>(Mp(0), -pi<Mp>());
  auto e = mat_exp(a, Complex<Mp>(Mp(1)), ctx());
  EXPECT_LT(max_abs_diff(e, CMatrix<Mp>::identity(2) * Complex<Mp>(Mp(-1))), tol());
}

TEST_F(Linalg, ExpMatchesTaylorOracleOnNonReciprocalBlock) {
  auto a = hn_block(Mp(1), Mp("0.5"));
  Complex<Mp> s(Mp(0), Mp("-0.1"));
  auto e = mat_exp(a, s, ctx());
  auto ref = taylor_exp(a, s, 200);
  EXPECT_LT(max_abs_diff(e, ref), Mp("1e-60"));
}

TEST_F(Linalg, ExpIdentityHoldsForRandomNonNormal) {
  Rng rng(11);
  for (std::size_t n = 1; n <= 8; ++n) {
    auto a = rng.cmatrix(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < i; ++j) a(i, j) *= Complex<Mp>(Mp(1) / 20);  // strongly non-normal
    Complex<Mp> s = rng.complex();
    auto f = mat_exp(a, s, ctx());
    auto b = mat_exp(a, -s, ctx());
    Mp growth = max_abs(f) * max_abs(b);
    EXPECT_LT(max_abs_diff(multiply(f, b), CMatrix<Mp>::identity(n)), tol() * Mp(n) * growth) << "n=" << n;
  }
}

TEST_F(Linalg, ExpSemigroup) {
  Rng rng(12);
  auto a = rng.cmatrix(5, 5);
  Complex<Mp> s1 = rng.complex(), s2 = rng.complex();
  auto lhs = mat_exp(a, s1 + s2, ctx());
  auto rhs = multiply(mat_exp(a, s1, ctx()), mat_exp(a, s2, ctx()));
  EXPECT_LT(max_abs_diff(lhs, rhs), tol() * (Mp(1) + max_abs(lhs)) * 10);
}

TEST_F(Linalg, ExpHandlesDefectiveMatrix) {
  // Jordan block: exp(sJ) = e^{s lambda} [[1, s], [0, 1]]
  CMatrix<Mp> a(2, 2);
  a(0, 0) = a(1, 1) = Complex<Mp>(Mp(2));
  a(0, 1) = Complex<Mp>(Mp(1));
  Complex<Mp> s(Mp("0.3"));
  auto e = mat_exp(a, s, ctx());
  Mp f = exp(Mp("0.6"));
  EXPECT_LT(abs(e(0, 0) - Complex<Mp>(f)), tol());
  EXPECT_LT(abs(e(0, 1) - Complex<Mp>(f * Mp("0.3"))), tol());
  EXPECT_LT(abs(e(1, 0)), tol());
}

TEST_F(Linalg, ExpRejectsBadInput) {
  EXPECT_THROW(mat_exp(CMatrix<Mp>(2, 3), Complex<Mp>(Mp(1)), ctx()), std::invalid_argument);
  CMatrix<Mp> a(2, 2);
  a(0, 0) = Complex<Mp>(Mp(1) / Mp(0));
  EXPECT_THROW(mat_exp(a, Complex<Mp>(Mp(1)), ctx()), std::invalid_argument);
}

TEST(LinalgPrecision, MoreDigitsNeverIncreaseResidual) {
  Mp prev = 1;
  for (int digits : {32, 48, 64, 80}) {
    PrecisionContext ctx(digits);
    PrecisionScope s(ctx);
    auto a = hn_block(Mp(1), Mp("0.9"));
    auto p = mat_exp_pair(a, Complex<Mp>(Mp(0), Mp(-3)), ctx);
    EXPECT_LE(p.residual, prev) << digits;
    prev = p.residual;
  }
}

// ---------------------------------------------------------- Pfaffian

TEST_F(Linalg, PfaffianTwoByTwo) {
  RMatrix<Mp> a(2, 2);
  a(0, 1) = Mp("0.7");
  a(1, 0) = Mp("-0.7");
  EXPECT_EQ(pfaffian(a, ctx()), Mp("0.7"));
}

TEST_F(Linalg, PfaffianMatchesCombinatorialExpansion) {
  Rng rng(21);
  for (int k = 0; k < 50; ++k) {
    auto a = rng.antisymmetric<Mp>(4);
    EXPECT_LT(abs(pfaffian(a, ctx()) - pf4(a)), tol());
  }
}

TEST_F(Linalg, PfaffianOfSingularIsZero) {
  Rng rng(22);
  auto a = rng.antisymmetric<Mp>(6);
  // duplicate row/column 1 into 3 keeps antisymmetry and kills the rank
  for (std::size_t j = 0; j < 6; ++j) {
    a(3, j) = a(1, j);
    a(j, 3) = a(j, 1);
  }
  a(3, 3) = a(1, 3) = a(3, 1) = 0;
  EXPECT_LT(abs(pfaffian(a, ctx())), tol());
}

TEST_F(Linalg, PfaffianSquaredIsDeterminant) {
  Rng rng(23);
  for (int k = 0; k < 200; ++k) {
    std::size_t n = 2 * static_cast<std::size_t>(rng.integer(1, 4));
    auto a = rng.antisymmetric<Complex<Mp>>(n);
    auto pf = pfaffian(a, ctx());
    auto det = determinant(a);
    EXPECT_LT(abs(pf * pf - det), tol() * (Mp(1) + abs(det)));
  }
}

TEST_F(Linalg, PfaffianCongruence) {
  Rng rng(24);
  for (std::size_t n : {2u, 4u, 6u}) {
    auto a = rng.antisymmetric<Mp>(n);
    auto b = rng.rmatrix(n, n);
    auto lhs = pfaffian(multiply(multiply(b, a), transpose(b)), ctx());
    auto rhs = determinant(b) * pfaffian(a, ctx());
    EXPECT_LT(abs(lhs - rhs), tol() * (Mp(1) + abs(rhs)));
  }
}

TEST_F(Linalg, PfaffianRejectsBadInput) {
  EXPECT_THROW(pfaffian(RMatrix<Mp>(3, 3), ctx()), std::invalid_argument);
  RMatrix<Mp> a(2, 2);
  a(0, 1) = 1;
  a(1, 0) = 1;
  EXPECT_THROW(pfaffian(a, ctx()), std::invalid_argument);
}

// --------------------------------------------------------------- QR

TEST_F(Linalg, QrOnOrthonormalInputIsIdentityMap) {
  Rng rng(31);
  auto q = rng.unitary(6, ctx()).block(0, 0, 6, 3);
  auto q2 = thin_qr(q, ctx());
  EXPECT_LT(max_abs_diff(q, q2), tol() * 10);
}

TEST_F(Linalg, QrSingleColumn) {
  CMatrix<Mp> w(2, 1);
  w(0, 0) = Complex<Mp>(Mp(2));
  auto q = thin_qr(w, ctx());
  EXPECT_EQ(q(0, 0), Complex<Mp>(Mp(1)));
  EXPECT_TRUE(is_zero(q(1, 0)));
}

TEST_F(Linalg, QrRandomIsOrthonormalAndSpanPreserving) {
  Rng rng(32);
  for (auto [r, c] : {std::pair<std::size_t, std::size_t>{6, 3}, {20, 10}, {40, 16}}) {
    auto w = rng.cmatrix(r, c);
    auto q = thin_qr(w, ctx());
    EXPECT_LT(orthonormality_defect(q), Mp("1e-60"));
    // Q Q^dagger W = W
    auto proj = multiply(q, multiply(adjoint(q), w));
    EXPECT_LT(max_abs_diff(proj, w), tol() * 100);
    for (std::size_t i = 0; i < c; ++i) {
      // positive real diagonal of R = Q^dagger W
      auto rd = multiply(adjoint(q), w)(i, i);
      EXPECT_GT(rd.re, 0);
      EXPECT_LT(abs(rd.im), tol() * 100);
    }
  }
}

TEST_F(Linalg, QrRankDeficientThrows) {
  Rng rng(33);
  auto w = rng.cmatrix(6, 3);
  for (std::size_t i = 0; i < 6; ++i) w(i, 2) = w(i, 0);
  EXPECT_THROW(thin_qr(w, ctx()), NumericalError);
}

// ------------------------------------------------------ eigen / LU

TEST_F(Linalg, HermitianEigenReconstructs) {
  Rng rng(41);
  auto a = rng.cmatrix(7, 7);
  a = a + adjoint(a);
  auto es = hermitian_eigen(a);
  CMatrix<Mp> d(7, 7);
  for (std::size_t i = 0; i < 7; ++i) d(i, i) = Complex<Mp>(es.values[i]);
  EXPECT_LT(max_abs_diff(multiply(multiply(es.vectors, d), adjoint(es.vectors)), a), tol() * 10);
  EXPECT_TRUE(std::is_sorted(es.values.begin(), es.values.end()));
}

TEST_F(Linalg, PairSpectrumDiagonal) {
  CMatrix<Mp> g(3, 3);
  g(1, 1) = Complex<Mp>(Mp(1));
  g(2, 2) = Complex<Mp>(Mp("0.5"));
  auto v = pair_spectrum(g, ctx());
  ASSERT_EQ(v.size(), 3u);
  EXPECT_EQ(v[0], 0);
  EXPECT_LT(abs(v[1] - Mp("0.5")), tol());
  EXPECT_EQ(v[2], 1);
}

TEST_F(Linalg, PairSpectrumRejectsBrokenInput) {
  CMatrix<Mp> g(2, 2);
  g(0, 0) = Complex<Mp>(Mp("1.1"));
  EXPECT_THROW(pair_spectrum(g, ctx()), NumericalError);
  CMatrix<Mp> h(2, 2);
  h(0, 1) = Complex<Mp>(Mp("0.1"));
  EXPECT_THROW(pair_spectrum(h, ctx()), NumericalError);
}

TEST_F(Linalg, DeterminantByHand) {
  auto a = RMatrix<Mp>::from_rows({{Mp(2), Mp(1), Mp(0)}, {Mp(1), Mp(3), Mp(1)}, {Mp(0), Mp(1), Mp(4)}});
  EXPECT_LT(abs(determinant(a) - Mp(18)), tol());
}

TEST(LinalgGemm, FixedPointMatchesNaive) {
  for (int digits : {40, 128, 250}) {
    PrecisionContext ctx(digits);
    PrecisionScope s(ctx);
    Rng rng(51);
    auto a = rng.cmatrix(17, 23), b = rng.cmatrix(23, 9);
    a(3, 4) = Complex<Mp>(Mp("1e30"));  // wide dynamic range inside a row
    b(5, 2) = Complex<Mp>(Mp("-1e-40"));
    auto fast = multiply(a, b), ref = multiply_naive(a, b);
    Mp scale = max_abs(a) * max_abs(b) * 23;
    EXPECT_LT(max_abs_diff(fast, ref), scale * ctx.tolerance<Mp>()) << digits;
  }
}
