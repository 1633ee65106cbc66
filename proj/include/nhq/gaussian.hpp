#pragma once

// Pure fermionic Gaussian states as 2L x L occupied-mode matrices W = [A; B]
// in the Nambu basis (c_1..c_L, c+_1..c+_L).
//
// Column v = (u; w) of W is the mode whose creation operator sum u c+ + w c
// annihilates the state. P = W W^dagger then holds P[a][b] = <Psi+_b Psi_a>,
// so C = conj(A) A^T and F = conj(B) A^T.

#include "nhq/model.hpp"

#include <functional>
#include <optional>

namespace nhq {

template <class R>
struct BogoliubovState {
  CMatrix<R> W;
  R t{};
  long steps = 0;

  std::size_t sites() const { return W.cols(); }
};

template <class R>
struct NambuCorrelations {
  CMatrix<R> C;  // <c+_i c_j>
  CMatrix<R> F;  // <c_i c_j>
};

/// Occupied modes of a BdG matrix: the L eigenvectors of negative energy.
/// Exact zero modes are split by shifting the hopping diagonal by +tol,
/// which keeps the particle-hole structure and empties the zero mode.
template <class R>
BogoliubovState<R> ground_state(const CMatrix<R>& bdg, const PrecisionContext& ctx) {
  const std::size_t n = bdg.rows();
  if (!bdg.square() || n % 2 != 0) throw std::invalid_argument("ground_state: BdG matrix must be 2L x 2L");
  const std::size_t L = n / 2;
  const R tol = ctx.tolerance<R>();
  if (hermiticity_defect(bdg) > tol) throw std::invalid_argument("ground_state: BdG matrix not Hermitian");
  CMatrix<R> shifted = bdg;
  for (std::size_t j = 0; j < L; ++j) {
    shifted(j, j) += Complex<R>(tol);
    shifted(L + j, L + j) -= Complex<R>(tol);
  }
  auto es = hermitian_eigen(shifted);
  std::size_t negative = 0;
  for (const auto& v : es.values)
    if (v < 0) ++negative;
  if (negative != L)
    throw NumericalError("ground_state: " + std::to_string(negative) + " negative modes for L=" + std::to_string(L));
  BogoliubovState<R> st;
  st.W = es.vectors.block(0, 0, n, L);
  st.W = thin_qr(st.W, ctx);
  return st;
}

/// Flips every odd site (0-based): c_k -> s_k c_k (k even), s_k c+_k (k odd),
/// with s_k = (-1)^(number of odd sites below k). Maps the tilted FM cat onto
/// the tilted AFM cat.
template <class R>
CMatrix<R> afm_transform(const CMatrix<R>& w) {
  const std::size_t L = w.rows() / 2;
  CMatrix<R> out(w.rows(), w.cols());
  int odd_below = 0;
  for (std::size_t k = 0; k < L; ++k) {
    const bool neg = odd_below % 2 != 0;
    const std::size_t src_top = (k % 2 == 0) ? k : L + k;
    const std::size_t src_bot = (k % 2 == 0) ? L + k : k;
    for (std::size_t c = 0; c < w.cols(); ++c) {
      out(k, c) = neg ? -w(src_top, c) : w(src_top, c);
      out(L + k, c) = neg ? -w(src_bot, c) : w(src_bot, c);
    }
    if (k % 2 == 1) ++odd_below;
  }
  return out;
}

/// Initial state: ground state of the pairing Hamiltonian at angle theta,
/// optionally mapped to the AFM pattern.
template <class R>
BogoliubovState<R> initial_state(const R& theta, Pattern pattern, const LatticeSpec& prep, const PrecisionContext& ctx,
                                 const R& J = from_int<R>(1)) {
  auto st = ground_state(initial_bdg_matrix(initial_params(theta, J), prep), ctx);
  if (pattern == Pattern::AFM) st.W = afm_transform(st.W);
  return st;
}

// ------------------------------------------------------------ propagation

template <class R>
struct Propagator {
  CMatrix<R> K;  // diag(exp(-i h dt), exp(+i h^T dt))
  R dt;
  R exp_residual;
};

template <class R>
Propagator<R> make_propagator(const CMatrix<R>& h, const R& dt, const PrecisionContext& ctx) {
  if (!(dt > 0)) throw std::invalid_argument("make_propagator: dt must be > 0");
  const std::size_t L = h.rows();
  auto pair = mat_exp_pair(h, Complex<R>(from_int<R>(0), R(-dt)), ctx);
  Propagator<R> p;
  p.K = CMatrix<R>(2 * L, 2 * L);
  p.K.set_block(0, 0, pair.forward);
  p.K.set_block(L, L, transpose(pair.backward));
  p.dt = dt;
  p.exp_residual = pair.residual;
  return p;
}

/// K W using the block-diagonal structure.
template <class R>
CMatrix<R> apply_propagator(const Propagator<R>& p, const CMatrix<R>& w) {
  const std::size_t L = w.rows() / 2;
  CMatrix<R> top = multiply(p.K.block(0, 0, L, L), w.block(0, 0, L, w.cols()));
  CMatrix<R> bot = multiply(p.K.block(L, L, L, L), w.block(L, 0, L, w.cols()));
  CMatrix<R> out(w.rows(), w.cols());
  out.set_block(0, 0, top);
  out.set_block(L, 0, bot);
  return out;
}

/// Blocks of K kept separately so repeated steps avoid re-slicing.
template <class R>
class Stepper {
 public:
  Stepper(const Propagator<R>& p, int renorm_every, const PrecisionContext& ctx)
      : ctx_(ctx), renorm_every_(renorm_every), dt_(p.dt) {
    if (renorm_every < 1) throw std::invalid_argument("evolve: renorm_every must be >= 1");
    const std::size_t L = p.K.rows() / 2;
    top_ = p.K.block(0, 0, L, L);
    bot_ = p.K.block(L, L, L, L);
  }

  void step(BogoliubovState<R>& st) {
    const std::size_t L = st.W.rows() / 2;
    CMatrix<R> top = multiply(top_, st.W.block(0, 0, L, st.W.cols()));
    CMatrix<R> bot = multiply(bot_, st.W.block(L, 0, L, st.W.cols()));
    st.W.set_block(0, 0, top);
    st.W.set_block(L, 0, bot);
    ++st.steps;
    st.t += dt_;
    if (st.steps % renorm_every_ == 0) {
      try {
        st.W = thin_qr(st.W, ctx_);
      } catch (const NumericalError& e) {
        throw NumericalError(std::string(e.what()) + " at t=" + format_number(st.t, 10));
      }
    }
  }

  void finish(BogoliubovState<R>& st) {
    if (st.steps % renorm_every_ != 0) st.W = thin_qr(st.W, ctx_);
  }

 private:
  PrecisionContext ctx_;
  int renorm_every_;
  R dt_;
  CMatrix<R> top_, bot_;
};

template <class R>
BogoliubovState<R> evolve(BogoliubovState<R> st, const Propagator<R>& p, long n_steps, int renorm_every,
                          const PrecisionContext& ctx,
                          const std::function<void(const BogoliubovState<R>&)>& hook = {}) {
  Stepper<R> s(p, renorm_every, ctx);
  for (long k = 0; k < n_steps; ++k) {
    s.step(st);
    if (hook && st.steps % renorm_every == 0) hook(st);
  }
  s.finish(st);
  return st;
}

// ---------------------------------------------------------- correlations

template <class R>
NambuCorrelations<R> correlations(const BogoliubovState<R>& st, const PrecisionContext& ctx) {
  const std::size_t L = st.sites();
  const R tol = ctx.tolerance<R>();
  if (orthonormality_defect(st.W) > tol * from_int<R>(static_cast<long long>(L)))
    throw NumericalError("correlations: W lost orthonormality");
  CMatrix<R> a = st.W.block(0, 0, L, L);
  CMatrix<R> b = st.W.block(L, 0, L, L);
  CMatrix<R> at = transpose(a);
  return {multiply(conjugate(a), at), multiply(conjugate(b), at)};
}

/// Nambu projector P[a][b] = <Psi+_b Psi_a> assembled from C and F.
template <class R>
CMatrix<R> assemble_nambu(const NambuCorrelations<R>& g) {
  const std::size_t L = g.C.rows();
  CMatrix<R> p(2 * L, 2 * L);
  p.set_block(0, 0, transpose(g.C));
  p.set_block(0, L, transpose(g.F));
  p.set_block(L, 0, conjugate(g.F));
  p.set_block(L, L, CMatrix<R>::identity(L) - g.C);
  return p;
}

template <class R>
CMatrix<R> nambu_projector(const BogoliubovState<R>& st) {
  return multiply(st.W, adjoint(st.W));
}

template <class R>
struct PurityReport {
  R orthonormality;  // max |W^dagger W - I|
  R isotropy;        // max |W^T Sigma_x W|
  R projector;       // max |G^2 - G|, only when requested
};

/// Cheap purity certificate: G^2 - G = W (W^dagger W - I) W^dagger, and
/// W^T Sigma_x W = 0 keeps G a valid fermionic projector.
template <class R>
PurityReport<R> purity(const BogoliubovState<R>& st, bool explicit_square) {
  const std::size_t L = st.sites();
  PurityReport<R> r;
  r.orthonormality = orthonormality_defect(st.W);
  CMatrix<R> a = st.W.block(0, 0, L, L), b = st.W.block(L, 0, L, L);
  CMatrix<R> at = transpose(a);
  r.isotropy = max_abs(multiply(at, b) + multiply(transpose(b), a));
  r.projector = from_int<R>(0);
  if (explicit_square) {
    CMatrix<R> g = nambu_projector(st);
    r.projector = max_abs(multiply(g, g) - g);
  }
  return r;
}

// ------------------------------------------- cheap entries for observables

/// n_j = sum_m |A_jm|^2
template <class R>
std::vector<R> densities(const BogoliubovState<R>& st) {
  const std::size_t L = st.sites();
  std::vector<R> n(L, from_int<R>(0));
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t m = 0; m < L; ++m) n[j] += norm2(st.W(j, m));
  return n;
}

/// C[j+1][j] for j = 0..L-2.
template <class R>
std::vector<Complex<R>> hopping_correlations(const BogoliubovState<R>& st) {
  const std::size_t L = st.sites();
  std::vector<Complex<R>> out(L > 0 ? L - 1 : 0);
  for (std::size_t j = 0; j + 1 < L; ++j) {
    Complex<R> s{};
    for (std::size_t m = 0; m < L; ++m) mac_conj(s, st.W(j + 1, m), st.W(j, m));
    out[j] = s;
  }
  return out;
}

/// Nambu projector restricted to indices {i, L+i} for the given sites,
/// ordered (sites..., L+sites...).
template <class R>
CMatrix<R> subsystem_projector(const BogoliubovState<R>& st, const std::vector<int>& sites) {
  const std::size_t L = st.sites();
  std::vector<std::size_t> idx;
  for (int s : sites) idx.push_back(static_cast<std::size_t>(s));
  for (int s : sites) idx.push_back(L + static_cast<std::size_t>(s));
  std::vector<std::size_t> cols(L);
  std::iota(cols.begin(), cols.end(), std::size_t{0});
  CMatrix<R> ws = st.W.select(idx, cols);
  return multiply(ws, adjoint(ws));
}

template <class R>
CMatrix<R> subsystem_projector(const NambuCorrelations<R>& g, const std::vector<int>& sites) {
  CMatrix<R> p = assemble_nambu(g);
  const std::size_t L = g.C.rows();
  std::vector<std::size_t> idx;
  for (int s : sites) idx.push_back(static_cast<std::size_t>(s));
  for (int s : sites) idx.push_back(L + static_cast<std::size_t>(s));
  return p.select(idx, idx);
}

/// Exact dN/dt of the normalized state under hopping matrix h. With
/// dW/dt = G W, G = -i diag(h, -h^T), the projector obeys
/// dP/dt = G P + P G^dagger - P (G + G^dagger) P.
template <class R>
R number_rate(const BogoliubovState<R>& st, const CMatrix<R>& h) {
  const std::size_t L = st.sites();
  const Complex<R> mi(from_int<R>(0), from_int<R>(-1));
  CMatrix<R> a = st.W.block(0, 0, L, L), b = st.W.block(L, 0, L, L);
  CMatrix<R> xa = multiply(h, a), xb = multiply(transpose(h), b);
  xa *= mi;
  xb *= -mi;
  CMatrix<R> x(2 * L, L);
  x.set_block(0, 0, xa);
  x.set_block(L, 0, xb);
  CMatrix<R> m = multiply(adjoint(st.W), x);
  m += adjoint(m);
  CMatrix<R> am = multiply(a, m);
  R rate = from_int<R>(0);
  for (std::size_t j = 0; j < L; ++j)
    for (std::size_t k = 0; k < L; ++k) {
      rate += 2 * (xa(j, k) * conj(a(j, k))).re;
      rate -= (am(j, k) * conj(a(j, k))).re;
    }
  return rate;
}

// --------------------------------------------------- single-shot baseline

/// One-shot propagation to time t without intermediate normalization:
/// K(t) W0 followed by a Gram-inverse projector. Returns max |G^2 - G|.
template <class R>
R single_shot_purity_defect(const CMatrix<R>& h, const CMatrix<R>& w0, const R& t, const PrecisionContext& ctx) {
  auto pair = mat_exp_pair_unchecked(h, Complex<R>(from_int<R>(0), R(-t)), ctx);
  const std::size_t L = h.rows();
  Propagator<R> p;
  p.K = CMatrix<R>(2 * L, 2 * L);
  p.K.set_block(0, 0, pair.forward);
  p.K.set_block(L, L, transpose(pair.backward));
  p.dt = t;
  CMatrix<R> w = apply_propagator(p, w0);
  CMatrix<R> gram = multiply(adjoint(w), w);
  auto f = lu_decompose(gram);
  if (f.singular) return from_int<R>(1);
  CMatrix<R> g = multiply(w, lu_solve(f, adjoint(w)));
  R d = max_abs(multiply(g, g) - g);
  if (!is_finite(d)) return from_int<R>(1);
  return d;
}

}  // namespace nhq
