#pragma once

// Exact many-body reference in the fermion Fock basis.
//
// Basis state |n> = (c+_0)^{n_0} ... (c+_{L-1})^{n_{L-1}} |0>, site j <-> bit j.
// With the Jordan-Wigner string taken over sites i < j and "up" identified
// with "occupied", spin-product amplitudes carry over without extra signs.

#include "nhq/model.hpp"

#include <bit>
#include <cstdint>
#include <map>
#include <vector>

namespace nhq {

inline constexpr int kMaxEdSites = 12;

using FockIndex = std::uint32_t;

namespace detail {
inline int parity_below(FockIndex s, int j) {
  return std::popcount(s & ((FockIndex{1} << j) - 1)) & 1;
}

/// c_j |s>; returns false when annihilated.
inline bool annihilate(FockIndex& s, int j, int& sign) {
  if (!(s >> j & 1U)) return false;
  if (parity_below(s, j)) sign = -sign;
  s &= ~(FockIndex{1} << j);
  return true;
}

inline bool create(FockIndex& s, int j, int& sign) {
  if (s >> j & 1U) return false;
  if (parity_below(s, j)) sign = -sign;
  s |= FockIndex{1} << j;
  return true;
}

inline void check_sites(int L) {
  if (L < 1 || L > kMaxEdSites)
    throw std::invalid_argument("ed: L=" + std::to_string(L) + " outside oracle range 1.." +
                                std::to_string(kMaxEdSites));
}
}  // namespace detail

template <class R>
struct FockVector {
  int L = 0;
  std::vector<Complex<R>> amps;

  FockVector() = default;
  explicit FockVector(int sites) : L(sites), amps(std::size_t{1} << sites) {}

  std::size_t dim() const { return amps.size(); }

  R norm() const {
    using std::sqrt;
    R s = from_int<R>(0);
    for (const auto& a : amps) s += norm2(a);
    return sqrt(s);
  }

  void normalize() {
    R n = norm();
    if (!(n > 0)) throw NumericalError("ed: zero-norm state");
    for (auto& a : amps) a = a / n;
  }
};

template <class R>
Complex<R> inner(const FockVector<R>& a, const FockVector<R>& b) {
  Complex<R> s{};
  for (std::size_t i = 0; i < a.amps.size(); ++i) mac_conj(s, a.amps[i], b.amps[i]);
  return s;
}

template <class R>
struct ManyBodyOperator {
  int L = 0;
  CMatrix<R> mat;
  bool number_conserving = true;
};

/// H = sum_ij hop_ij c+_i c_j + 1/2 sum_ij (pair_ij c+_i c+_j + conj(pair_ij) c_j c_i) + sum_j chem_j n_j
template <class R>
ManyBodyOperator<R> build_hamiltonian(const CMatrix<R>& hop, const CMatrix<R>& pair, const std::vector<R>& chem) {
  const int L = static_cast<int>(hop.rows());
  detail::check_sites(L);
  if (!hop.square() || pair.rows() != hop.rows() || !pair.square() || chem.size() != hop.rows())
    throw std::invalid_argument("build_hamiltonian: shape mismatch");
  const std::size_t dim = std::size_t{1} << L;
  using T = Complex<R>;
  ManyBodyOperator<R> op;
  op.L = L;
  op.mat = CMatrix<R>(dim, dim);
  op.number_conserving = true;
  for (std::size_t i = 0; i < pair.rows(); ++i)
    for (std::size_t j = 0; j < pair.cols(); ++j)
      if (!is_zero(pair(i, j))) op.number_conserving = false;
  const R half = ratio<R>(1, 2);
  for (FockIndex s = 0; s < dim; ++s) {
    T diag{};
    for (int j = 0; j < L; ++j)
      if (s >> j & 1U) diag += T(chem[j]);
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        const T& hij = hop(i, j);
        if (is_zero(hij)) continue;
        FockIndex t = s;
        int sign = 1;
        if (!detail::annihilate(t, j, sign) || !detail::create(t, i, sign)) continue;
        op.mat(t, s) += sign > 0 ? hij : -hij;
      }
    if (!is_zero(diag)) op.mat(s, s) += diag;
    if (op.number_conserving) continue;
    for (int i = 0; i < L; ++i)
      for (int j = 0; j < L; ++j) {
        const T& d = pair(i, j);
        if (is_zero(d)) continue;
        {
          FockIndex t = s;
          int sign = 1;
          if (detail::create(t, j, sign) && detail::create(t, i, sign)) op.mat(t, s) += (sign > 0 ? d : -d) * half;
        }
        {
          FockIndex t = s;
          int sign = 1;
          if (detail::annihilate(t, i, sign) && detail::annihilate(t, j, sign)) {
            T dc = conj(d);
            op.mat(t, s) += (sign > 0 ? dc : -dc) * half;
          }
        }
      }
  }
  return op;
}

/// Many-body form of the initial pairing Hamiltonian built from its BdG matrix.
template <class R>
ManyBodyOperator<R> build_initial_hamiltonian(const CMatrix<R>& bdg) {
  CMatrix<R> h = hopping_block(bdg);
  std::vector<R> chem(h.rows());
  for (std::size_t j = 0; j < h.rows(); ++j) {
    chem[j] = h(j, j).re;
    h(j, j) = Complex<R>{};
  }
  return build_hamiltonian(h, pairing_block(bdg), chem);
}

template <class R>
ManyBodyOperator<R> build_evolution_hamiltonian(const CMatrix<R>& hn) {
  return build_hamiltonian(hn, CMatrix<R>(hn.rows(), hn.cols()), std::vector<R>(hn.rows(), from_int<R>(0)));
}

/// Indices of basis states grouped by a key (particle number or parity).
inline std::map<int, std::vector<FockIndex>> sectors_by(int L, bool by_parity) {
  std::map<int, std::vector<FockIndex>> out;
  const FockIndex dim = FockIndex{1} << L;
  for (FockIndex s = 0; s < dim; ++s) {
    int n = std::popcount(s);
    out[by_parity ? (n & 1) : n].push_back(s);
  }
  return out;
}

template <class R>
CMatrix<R> sector_block(const ManyBodyOperator<R>& op, const std::vector<FockIndex>& idx) {
  CMatrix<R> b(idx.size(), idx.size());
  for (std::size_t a = 0; a < idx.size(); ++a)
    for (std::size_t c = 0; c < idx.size(); ++c) b(a, c) = op.mat(idx[a], idx[c]);
  return b;
}

template <class R>
struct GroundState {
  FockVector<R> psi;
  R energy;
  R gap;  // to the next level in the same parity sector
};

/// Lowest state of a Hermitian parity-conserving Hamiltonian in the even sector.
template <class R>
GroundState<R> ground_state_even(const ManyBodyOperator<R>& op) {
  auto idx = sectors_by(op.L, true).at(0);
  auto es = hermitian_eigen(sector_block(op, idx));
  GroundState<R> gs;
  gs.psi = FockVector<R>(op.L);
  Complex<R> phase{};
  // Global phase: largest component real positive.
  R best = from_int<R>(-1);
  for (std::size_t a = 0; a < idx.size(); ++a) {
    R m = abs(es.vectors(a, 0));
    if (m > best) {
      best = m;
      phase = conj(es.vectors(a, 0)) / m;
    }
  }
  for (std::size_t a = 0; a < idx.size(); ++a) gs.psi.amps[idx[a]] = es.vectors(a, 0) * phase;
  gs.psi.normalize();
  gs.energy = es.values[0];
  gs.gap = es.values.size() > 1 ? R(es.values[1] - es.values[0]) : from_int<R>(0);
  return gs;
}

/// Symmetric cat of tilted product states, even in the number of down spins.
/// The AFM pattern flips every odd site (0-based) of the FM amplitudes.
template <class R>
FockVector<R> cat_state(const R& theta, Pattern pattern, int L) {
  using std::cos;
  using std::sin;
  detail::check_sites(L);
  if (pattern == Pattern::AFM && L % 2 != 0) throw std::invalid_argument("cat_state: AFM needs even L");
  FockVector<R> psi(L);
  const R c = cos(theta / 2), s = sin(theta / 2);
  FockIndex odd_mask = 0;
  for (int j = 1; j < L; j += 2) odd_mask |= FockIndex{1} << j;
  for (FockIndex bits = 0; bits < psi.dim(); ++bits) {
    int holes = L - std::popcount(bits);
    if (holes % 2 != 0) continue;
    R amp = from_int<R>(1);
    for (int j = 0; j < L; ++j) amp *= (bits >> j & 1U) ? c : s;
    FockIndex target = pattern == Pattern::AFM ? (bits ^ odd_mask) : bits;
    psi.amps[target] = Complex<R>(amp);
  }
  psi.normalize();
  return psi;
}

enum class InitialConstruction { GroundState, Cat };

template <class R>
FockVector<R> build_initial_state(const R& theta, Pattern pattern, const LatticeSpec& lat, InitialConstruction how,
                                  const R& J = from_int<R>(1)) {
  lat.validate();
  if (how == InitialConstruction::Cat) return cat_state(theta, pattern, lat.L);
  if (pattern == Pattern::AFM) throw std::invalid_argument("build_initial_state: AFM is only defined by construction");
  auto op = build_initial_hamiltonian(initial_bdg_matrix(initial_params(theta, J), lat));
  return ground_state_even(op).psi;
}

/// exp(-i H dt) restricted to each conserved sector (particle number when
/// available, parity otherwise).
template <class R>
class EdPropagator {
 public:
  EdPropagator(const ManyBodyOperator<R>& op, const R& dt, const PrecisionContext& ctx) : L_(op.L) {
    auto groups = sectors_by(op.L, !op.number_conserving);
    for (auto& [key, idx] : groups) {
      Sector s;
      s.idx = idx;
      s.u = mat_exp(sector_block(op, idx), Complex<R>(from_int<R>(0), R(-dt)), ctx);
      sectors_.push_back(std::move(s));
    }
  }

  FockVector<R> apply(const FockVector<R>& psi) const {
    FockVector<R> out(L_);
    for (const auto& s : sectors_) {
      const std::size_t n = s.idx.size();
      for (std::size_t a = 0; a < n; ++a) {
        Complex<R> acc{};
        for (std::size_t b = 0; b < n; ++b) mac(acc, s.u(a, b), psi.amps[s.idx[b]]);
        out.amps[s.idx[a]] = acc;
      }
    }
    return out;
  }

 private:
  struct Sector {
    std::vector<FockIndex> idx;
    CMatrix<R> u;
  };
  int L_;
  std::vector<Sector> sectors_;
};

/// Normalized step: psi <- U psi / |U psi|.
template <class R>
FockVector<R> step_normalized(const FockVector<R>& psi, const EdPropagator<R>& u, const PrecisionContext& ctx) {
  FockVector<R> out = u.apply(psi);
  R n = out.norm();
  if (!(n > ctx.tolerance<R>() * ctx.tolerance<R>())) throw NumericalError("ed: post-selection weight vanished");
  for (auto& a : out.amps) a = a / n;
  return out;
}

template <class R>
FockVector<R> evolve_normalized(const FockVector<R>& psi, const ManyBodyOperator<R>& H, const R& t, int n_steps,
                                const PrecisionContext& ctx) {
  if (n_steps < 1) throw std::invalid_argument("evolve_normalized: n_steps < 1");
  EdPropagator<R> u(H, R(t / n_steps), ctx);
  FockVector<R> out = psi;
  for (int k = 0; k < n_steps; ++k) out = step_normalized(out, u, ctx);
  return out;
}

// ------------------------------------------------------- expectations

/// <c+_i c_j> for all i, j.
template <class R>
CMatrix<R> ed_normal_correlations(const FockVector<R>& psi) {
  const int L = psi.L;
  CMatrix<R> c(L, L);
  for (FockIndex s = 0; s < psi.dim(); ++s) {
    if (is_zero(psi.amps[s])) continue;
    for (int j = 0; j < L; ++j)
      for (int i = 0; i < L; ++i) {
        FockIndex t = s;
        int sign = 1;
        if (!detail::annihilate(t, j, sign) || !detail::create(t, i, sign)) continue;
        Complex<R> v = conj(psi.amps[t]) * psi.amps[s];
        c(i, j) += sign > 0 ? v : -v;
      }
  }
  return c;
}

/// <c_i c_j> for all i, j.
template <class R>
CMatrix<R> ed_anomalous_correlations(const FockVector<R>& psi) {
  const int L = psi.L;
  CMatrix<R> f(L, L);
  for (FockIndex s = 0; s < psi.dim(); ++s) {
    if (is_zero(psi.amps[s])) continue;
    for (int j = 0; j < L; ++j)
      for (int i = 0; i < L; ++i) {
        FockIndex t = s;
        int sign = 1;
        if (!detail::annihilate(t, j, sign) || !detail::annihilate(t, i, sign)) continue;
        Complex<R> v = conj(psi.amps[t]) * psi.amps[s];
        f(i, j) += sign > 0 ? v : -v;
      }
  }
  return f;
}

template <class R>
Complex<R> expectation(const FockVector<R>& psi, const ManyBodyOperator<R>& op) {
  Complex<R> s{};
  for (std::size_t a = 0; a < psi.dim(); ++a) {
    if (is_zero(psi.amps[a])) continue;
    Complex<R> row{};
    for (std::size_t b = 0; b < psi.dim(); ++b) mac(row, op.mat(a, b), psi.amps[b]);
    mac_conj(s, psi.amps[a], row);
  }
  return s;
}

// ------------------------------------------------ reduced density matrix

template <class R>
struct ReducedDensityMatrix {
  std::vector<int> sites;  // ascending; local bit k <-> sites[k]
  CMatrix<R> rho;
};

/// Partial trace onto `sites`. The kept modes are first moved to the front
/// of the creation-operator order, picking up the sign of the reordering on
/// each basis state, after which the trace over the trailing modes is plain.
template <class R>
ReducedDensityMatrix<R> reduced_density_matrix(const FockVector<R>& psi, std::vector<int> sites) {
  const int L = psi.L;
  std::sort(sites.begin(), sites.end());
  sites.erase(std::unique(sites.begin(), sites.end()), sites.end());
  if (sites.empty()) throw std::invalid_argument("reduced_density_matrix: empty subsystem");
  for (int s : sites)
    if (s < 0 || s >= L) throw std::invalid_argument("reduced_density_matrix: site out of range");
  const int l = static_cast<int>(sites.size());
  std::vector<int> order = sites;  // new position -> old site
  std::vector<bool> in_a(L, false);
  for (int s : sites) in_a[s] = true;
  for (int j = 0; j < L; ++j)
    if (!in_a[j]) order.push_back(j);

  const std::size_t da = std::size_t{1} << l, db = std::size_t{1} << (L - l);
  CMatrix<R> m(da, db);
  for (FockIndex s = 0; s < psi.dim(); ++s) {
    if (is_zero(psi.amps[s])) continue;
    FockIndex t = 0;
    int inversions = 0;
    // Occupied old indices listed in new order; count inversions.
    std::vector<int> occ;
    for (int p = 0; p < L; ++p)
      if (s >> order[p] & 1U) {
        t |= FockIndex{1} << p;
        for (int q : occ)
          if (q > order[p]) ++inversions;
        occ.push_back(order[p]);
      }
    FockIndex a = t & static_cast<FockIndex>(da - 1);
    FockIndex b = t >> l;
    m(a, b) = inversions % 2 ? -psi.amps[s] : psi.amps[s];
  }
  ReducedDensityMatrix<R> out;
  out.sites = sites;
  out.rho = multiply(m, adjoint(m));
  return out;
}

template <class R>
struct ExactMeasures {
  R s_vn, s2, s2_symmetrized, delta_s2;
  std::vector<R> charge_weights;  // tr(Pi_q rho), q = 0..l
};

template <class R>
ExactMeasures<R> exact_measures(const ReducedDensityMatrix<R>& rd, const PrecisionContext& ctx) {
  using std::log;
  const auto& rho = rd.rho;
  const R tol = ctx.tolerance<R>();
  auto vals = hermitian_eigen(rho).values;
  ExactMeasures<R> out;
  out.s_vn = from_int<R>(0);
  for (auto& v : vals) {
    if (v < -tol) throw NumericalError("exact_measures: negative eigenvalue " + format_number(v, 8));
    if (v > 0) out.s_vn -= v * log(v);
  }
  R p2 = from_int<R>(0), p2n = from_int<R>(0);
  const std::size_t l = rd.sites.size();
  out.charge_weights.assign(l + 1, from_int<R>(0));
  for (std::size_t a = 0; a < rho.rows(); ++a) {
    out.charge_weights[std::popcount(static_cast<FockIndex>(a))] += rho(a, a).re;
    for (std::size_t b = 0; b < rho.cols(); ++b) {
      R w = norm2(rho(a, b));
      p2 += w;
      if (std::popcount(static_cast<FockIndex>(a)) == std::popcount(static_cast<FockIndex>(b))) p2n += w;
    }
  }
  out.s2 = -log(p2);
  out.s2_symmetrized = -log(p2n);
  out.delta_s2 = out.s2_symmetrized - out.s2;
  return out;
}

/// tr[rho e^{i alpha Q} rho e^{-i alpha Q}]
template <class R>
Complex<R> exact_charged_moment(const ReducedDensityMatrix<R>& rd, const R& alpha) {
  Complex<R> s{};
  const auto& rho = rd.rho;
  for (std::size_t a = 0; a < rho.rows(); ++a)
    for (std::size_t b = 0; b < rho.cols(); ++b) {
      int dq = std::popcount(static_cast<FockIndex>(a)) - std::popcount(static_cast<FockIndex>(b));
      s += expi(R(alpha * dq)) * norm2(rho(a, b));
    }
  return s;
}

}  // namespace nhq
