#pragma once

// Lattice, initial pairing Hamiltonian (BdG form) and Hatano-Nelson generator.

#include "nhq/linalg.hpp"

#include <stdexcept>
#include <string>
#include <utility>

namespace nhq {

enum class Boundary { OBC, PBC, APBC };
enum class Pattern { FM, AFM };

inline std::string to_string(Boundary b) {
  switch (b) {
    case Boundary::OBC: return "OBC";
    case Boundary::PBC: return "PBC";
    case Boundary::APBC: return "APBC";
  }
  return "?";
}

inline Boundary parse_boundary(const std::string& s) {
  if (s == "OBC" || s == "obc") return Boundary::OBC;
  if (s == "PBC" || s == "pbc") return Boundary::PBC;
  if (s == "APBC" || s == "apbc") return Boundary::APBC;
  throw std::invalid_argument("unknown boundary '" + s + "'");
}

inline std::string to_string(Pattern p) { return p == Pattern::FM ? "FM" : "AFM"; }

inline Pattern parse_pattern(const std::string& s) {
  if (s == "FM" || s == "fm") return Pattern::FM;
  if (s == "AFM" || s == "afm") return Pattern::AFM;
  throw std::invalid_argument("unknown initial pattern '" + s + "'");
}

struct LatticeSpec {
  int L = 8;
  Boundary boundary = Boundary::OBC;

  void validate() const {
    if (L < 2 || L % 2 != 0) throw std::invalid_argument("lattice: L must be a positive even integer >= 2");
  }
  /// Sign of the wrap-around bond, 0 when absent.
  int wrap_sign() const {
    switch (boundary) {
      case Boundary::OBC: return 0;
      case Boundary::PBC: return 1;
      case Boundary::APBC: return -1;
    }
    return 0;
  }
};

template <class R>
struct InitialParams {
  R J, delta, mu, theta;
};

template <class R>
struct EvolutionParams {
  R J, gamma;

  EvolutionParams(R j, R g) : J(std::move(j)), gamma(std::move(g)) {
    if (gamma < 0) throw std::invalid_argument("evolution: gamma must be >= 0");
  }
  R t_left() const { return J + gamma; }
  R t_right() const { return J - gamma; }
};

/// (Delta, mu) from the tilt angle; theta in [0, pi/2].
template <class R>
std::pair<R, R> theta_to_params(const R& theta) {
  using std::cos;
  using std::sqrt;
  const R half_pi = pi<R>() / 2;
  if (theta < 0 || theta > half_pi) throw std::invalid_argument("theta outside [0, pi/2]");
  R c = cos(theta);
  R c2 = c * c;
  R delta = (1 - c2) / (1 + c2);
  R rad = 1 - delta * delta;
  if (rad < 0) rad = from_int<R>(0);
  R mu = 2 * sqrt(rad);
  return {delta, mu};
}

template <class R>
InitialParams<R> initial_params(const R& theta, const R& J) {
  auto [d, m] = theta_to_params(theta);
  return {J, d, m, theta};
}

/// BdG matrix [[h, D], [D^dagger, -h^T]] in the basis (c_1..c_L, c^dagger_1..c^dagger_L)
/// such that H = 1/2 Psi^dagger M Psi + 1/2 tr h.
template <class R>
CMatrix<R> initial_bdg_matrix(const InitialParams<R>& p, const LatticeSpec& lat) {
  lat.validate();
  const std::size_t L = static_cast<std::size_t>(lat.L);
  using T = Complex<R>;
  CMatrix<R> h(L, L), d(L, L);
  for (std::size_t j = 0; j < L; ++j) h(j, j) = T(-p.mu);
  auto bond = [&](std::size_t a, std::size_t b, int sign) {
    R s = from_int<R>(sign);
    h(a, b) = T(-p.J * s);
    h(b, a) = T(-p.J * s);
    d(a, b) = T(-p.delta * s);
    d(b, a) = T(p.delta * s);
  };
  for (std::size_t j = 0; j + 1 < L; ++j) bond(j, j + 1, 1);
  if (int w = lat.wrap_sign(); w != 0) {
    if (L == 2) throw std::invalid_argument("initial_bdg_matrix: wrap bond needs L > 2");
    bond(L - 1, 0, w);
  }
  CMatrix<R> m(2 * L, 2 * L);
  m.set_block(0, 0, h);
  m.set_block(0, L, d);
  m.set_block(L, 0, adjoint(d));
  m.set_block(L, L, -transpose(h));
  return m;
}

/// Hopping block of the initial Hamiltonian.
template <class R>
CMatrix<R> hopping_block(const CMatrix<R>& bdg) {
  const std::size_t L = bdg.rows() / 2;
  return bdg.block(0, 0, L, L);
}

template <class R>
CMatrix<R> pairing_block(const CMatrix<R>& bdg) {
  const std::size_t L = bdg.rows() / 2;
  return bdg.block(0, L, L, L);
}

/// Single-particle Hatano-Nelson matrix: h[j][j+1] = -t_L, h[j+1][j] = -t_R.
template <class R>
CMatrix<R> hn_matrix(const EvolutionParams<R>& p, const LatticeSpec& lat) {
  if (lat.L < 2) throw std::invalid_argument("hn_matrix: L < 2");
  const std::size_t L = static_cast<std::size_t>(lat.L);
  using T = Complex<R>;
  CMatrix<R> h(L, L);
  const R tl = p.t_left(), tr = p.t_right();
  for (std::size_t j = 0; j + 1 < L; ++j) {
    h(j, j + 1) = T(-tl);
    h(j + 1, j) = T(-tr);
  }
  if (int w = lat.wrap_sign(); w != 0 && L > 2) {
    R s = from_int<R>(w);
    h(L - 1, 0) = T(-tl * s);
    h(0, L - 1) = T(-tr * s);
  }
  return h;
}

template <class R>
struct Dispersion {
  Complex<R> energy;
  R group_velocity;
};

/// E(k) = -2J cos k - 2i gamma sin k and v_g = dRe E/dk.
template <class R>
Dispersion<R> dispersion_velocity(const EvolutionParams<R>& p, const R& k) {
  using std::cos;
  using std::sin;
  const R lim = pi<R>();
  if (k < -lim || k > lim) throw std::invalid_argument("dispersion: k outside [-pi, pi]");
  return {Complex<R>(R(-2 * p.J * cos(k)), R(-2 * p.gamma * sin(k))), R(2 * p.J * sin(k))};
}

template <class R>
R max_group_velocity(const EvolutionParams<R>& p) {
  return 2 * p.J;
}

template <class R>
R front_speed(const EvolutionParams<R>& p) {
  return 4 * p.J;
}

}  // namespace nhq
