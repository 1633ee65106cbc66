#pragma once

// Physics outputs from the Nambu projector: density, current, inflow,
// entanglement entropy, charged moments and Renyi-2 asymmetry, plus the
// feature extraction on sampled time series.

#include "nhq/gaussian.hpp"

#include <optional>

namespace nhq {

template <class R>
struct DensityCurrent {
  std::vector<R> n;  // per site
  std::vector<R> I;  // per bond j -> j+1, L-1 entries
  R total;
};

/// n_j = Re C_jj, I_j = iJ (C[j+1][j] - C[j][j+1]) = -2J Im C[j+1][j].
template <class R>
DensityCurrent<R> density_current(const BogoliubovState<R>& st, const R& J) {
  DensityCurrent<R> out;
  out.n = densities(st);
  out.total = from_int<R>(0);
  for (const auto& v : out.n) out.total += v;
  auto hop = hopping_correlations(st);
  out.I.reserve(hop.size());
  for (const auto& z : hop) out.I.push_back(R(-2 * J * z.im));
  return out;
}

template <class R>
DensityCurrent<R> density_current(const NambuCorrelations<R>& g, const R& J, const PrecisionContext& ctx) {
  const std::size_t L = g.C.rows();
  const R tol = ctx.tolerance<R>();
  DensityCurrent<R> out;
  out.total = from_int<R>(0);
  for (std::size_t j = 0; j < L; ++j) {
    using std::abs;
    if (abs(g.C(j, j).im) > tol) throw NumericalError("density_current: complex density");
    out.n.push_back(g.C(j, j).re);
    out.total += g.C(j, j).re;
  }
  for (std::size_t j = 0; j + 1 < L; ++j) {
    Complex<R> v = (g.C(j + 1, j) - g.C(j, j + 1)) * Complex<R>(from_int<R>(0), J);
    using std::abs;
    if (abs(v.im) > tol) throw NumericalError("density_current: complex current");
    out.I.push_back(v.re);
  }
  return out;
}

/// sigma_j = (n_j(t+d) - n_j(t-d)) / 2d + I_j - I_{j-1}, with I_{-1} = I_{L-1} = 0.
template <class R>
std::vector<R> inflow(const std::vector<R>& n_prev, const std::vector<R>& n_next, const std::vector<R>& I,
                      const R& delta) {
  const std::size_t L = n_prev.size();
  if (n_next.size() != L || I.size() + 1 != L) throw std::invalid_argument("inflow: size mismatch");
  if (!(delta > 0)) throw std::invalid_argument("inflow: non-uniform or empty grid");
  std::vector<R> s(L);
  for (std::size_t j = 0; j < L; ++j) {
    R out = j + 1 < L ? I[j] : from_int<R>(0);
    R in = j > 0 ? I[j - 1] : from_int<R>(0);
    s[j] = (n_next[j] - n_prev[j]) / (2 * delta) + out - in;
  }
  return s;
}

// --------------------------------------------------------- entanglement

template <class R>
R sqrt_tolerance(const R& tol) {
  using std::sqrt;
  return sqrt(tol);
}


template <class R>
struct Entropies {
  R s_vn, s2;
};

namespace detail {
template <class R>
R binary_entropy(const R& v) {
  using std::log;
  R out = from_int<R>(0);
  R w = 1 - v;
  if (v > 0) out -= v * log(v);
  if (w > 0) out -= w * log(w);
  return out;
}
}  // namespace detail

/// From the 2l x 2l subsystem Nambu block; its spectrum is {nu, 1-nu}
/// pairs, so each pair is counted once via the factor 1/2.
template <class R>
Entropies<R> ee_from_projector(const CMatrix<R>& ps, const PrecisionContext& ctx) {
  using std::log;
  auto vals = pair_spectrum(ps, ctx);
  const std::size_t n = vals.size();
  const R tol = ctx.tolerance<R>();
  R pair_err = from_int<R>(0);
  for (std::size_t k = 0; k < n; ++k) {
    using std::abs;
    R e = abs(vals[k] + vals[n - 1 - k] - 1);
    if (e > pair_err) pair_err = e;
  }
  if (pair_err > sqrt_tolerance(tol)) throw NumericalError("ee: spectrum does not pair as (nu, 1-nu)");
  Entropies<R> out{from_int<R>(0), from_int<R>(0)};
  for (const auto& v : vals) {
    out.s_vn += detail::binary_entropy(v);
    out.s2 -= log(v * v + (1 - v) * (1 - v));
  }
  out.s_vn /= 2;
  out.s2 /= 2;
  return out;
}

template <class R>
Entropies<R> ee_from_correlations(const NambuCorrelations<R>& g, const std::vector<int>& sites,
                                  const PrecisionContext& ctx) {
  return ee_from_projector(subsystem_projector(g, sites), ctx);
}

// ------------------------------------------------------ charged moments

namespace detail {
/// Majorana covariance Gamma = i(<gamma gamma^T> - I) of a subsystem block,
/// gamma^x = c + c+, gamma^y = i(c+ - c), ordered (x_1..x_l, y_1..y_l).
template <class R>
RMatrix<R> majorana_covariance(const CMatrix<R>& ps, const PrecisionContext& ctx) {
  const std::size_t l = ps.rows() / 2;
  using T = Complex<R>;
  CMatrix<R> omega(2 * l, 2 * l);
  const T one(from_int<R>(1)), iu(from_int<R>(0), from_int<R>(1));
  for (std::size_t j = 0; j < l; ++j) {
    omega(j, j) = one;
    omega(j, l + j) = one;
    omega(l + j, j) = -iu;
    omega(l + j, l + j) = iu;
  }
  CMatrix<R> g = multiply(multiply(conjugate(omega), transpose(ps)), transpose(omega));
  RMatrix<R> out(2 * l, 2 * l);
  const R bound = ctx.tolerance<R>() * from_int<R>(static_cast<long long>(4 * l));
  for (std::size_t a = 0; a < 2 * l; ++a)
    for (std::size_t b = 0; b < 2 * l; ++b) {
      T v = g(a, b);
      if (a == b) v -= one;
      using std::abs;
      if (abs(v.re) > bound) throw NumericalError("majorana_covariance: covariance not real");
      out(a, b) = -v.im;
    }
  return out;
}

/// Covariance after c -> e^{i phi} c: each (x_j, y_j) pair turns by phi.
template <class R>
RMatrix<R> rotate_charge(const RMatrix<R>& g, const R& phi) {
  using std::cos;
  using std::sin;
  const std::size_t l = g.rows() / 2;
  const R c = cos(phi), s = sin(phi);
  // rows: x' = c x - s y, y' = s x + c y
  RMatrix<R> t(2 * l, 2 * l);
  for (std::size_t j = 0; j < l; ++j)
    for (std::size_t b = 0; b < 2 * l; ++b) {
      t(j, b) = c * g(j, b) - s * g(l + j, b);
      t(l + j, b) = s * g(j, b) + c * g(l + j, b);
    }
  RMatrix<R> out(2 * l, 2 * l);
  for (std::size_t a = 0; a < 2 * l; ++a)
    for (std::size_t j = 0; j < l; ++j) {
      out(a, j) = c * t(a, j) - s * t(a, l + j);
      out(a, l + j) = s * t(a, j) + c * t(a, l + j);
    }
  return out;
}
}  // namespace detail

enum class MomentMethod { Determinant, Pfaffian };

/// Z_2(alpha) = tr[rho_A e^{i alpha Q} rho_A e^{-i alpha Q}] from the
/// Majorana covariance, either as sqrt(det((I - Gamma Gamma_alpha)/2)) or as
/// |Pf [[Gamma, I], [-I, -Gamma_alpha]]| / 2^l. The trace is a
/// non-negative real, so both are sign-free.
template <class R>
R charged_moment_from_covariance(const RMatrix<R>& g0, const R& alpha, MomentMethod method,
                                 const PrecisionContext& ctx) {
  using std::abs;
  using std::sqrt;
  RMatrix<R> ga = detail::rotate_charge(g0, alpha);
  const std::size_t n = g0.rows();
  if (method == MomentMethod::Determinant) {
    RMatrix<R> m = RMatrix<R>::identity(n) - multiply(g0, ga);
    m *= ratio<R>(1, 2);
    return sqrt(abs(determinant(m)));
  }
  RMatrix<R> big(2 * n, 2 * n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      big(a, b) = g0(a, b);
      big(n + a, n + b) = -ga(a, b);
    }
    big(a, n + a) = from_int<R>(1);
    big(n + a, a) = from_int<R>(-1);
  }
  R z = abs(pfaffian(big, ctx));
  for (std::size_t k = 0; k < n / 2; ++k) z /= 2;
  return z;
}

template <class R>
Complex<R> charged_moment(const CMatrix<R>& ps, const R& alpha, const PrecisionContext& ctx,
                          MomentMethod method = MomentMethod::Determinant) {
  if (alpha < -pi<R>() || alpha > pi<R>()) throw std::invalid_argument("charged_moment: alpha outside [-pi, pi]");
  return Complex<R>(charged_moment_from_covariance(detail::majorana_covariance(ps, ctx), alpha, method, ctx));
}

template <class R>
struct Asymmetry {
  R delta_s2;
  R purity;              // tr rho_A^2
  R symmetrized_purity;  // tr rho_{A,N}^2
};

/// Renyi-2 entanglement asymmetry by periodic trapezoid over alpha in
/// [-pi, pi) on n_alpha points. Z_2 is even in alpha, so only half the
/// nodes are evaluated.
template <class R>
Asymmetry<R> ea_renyi2(const CMatrix<R>& ps, int n_alpha, const PrecisionContext& ctx,
                       MomentMethod method = MomentMethod::Determinant) {
  using std::log;
  if (n_alpha < 16 || n_alpha % 2 != 0) throw std::invalid_argument("ea_renyi2: n_alpha must be even and >= 16");
  const R p = pi<R>();
  RMatrix<R> g0 = detail::majorana_covariance(ps, ctx);
  R sum = from_int<R>(0);
  R z0 = from_int<R>(0);
  for (int k = 0; k <= n_alpha / 2; ++k) {
    R alpha = p * from_int<R>(2 * k - n_alpha) / from_int<R>(n_alpha);  // -pi .. 0
    R z = charged_moment_from_covariance(g0, alpha, method, ctx);
    bool single = (k == 0 || k == n_alpha / 2);
    sum += single ? z : R(2 * z);
    if (k == n_alpha / 2) z0 = z;
  }
  Asymmetry<R> out;
  out.purity = z0;
  out.symmetrized_purity = sum / from_int<R>(n_alpha);
  out.delta_s2 = -log(out.symmetrized_purity) + log(out.purity);
  return out;
}

// ------------------------------------------------------ feature extraction

struct LineFit {
  double slope = 0, intercept = 0;
  std::size_t points = 0;
};

inline std::optional<LineFit> least_squares(const std::vector<double>& x, const std::vector<double>& y) {
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < n; ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) return std::nullopt;
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.points = n;
  return f;
}

struct FeatureSettings {
  double front_drop = 0.1;     // relative density drop marking the front
  double stable_rate = 1e-3;   // |dn/dt| threshold for the stationary regime
  double stable_window = 2.0;  // time the threshold must hold
  int min_front_points = 4;
};

struct FrontReport {
  bool detected = false;
  double speed = 0;
  double tau1 = 0;
  std::vector<std::pair<double, int>> locus;  // (t, front site, 1-based)
};

/// Front at time t: rightmost site whose density fell below (1-f) n_j(0).
/// A straight-line fit to the locus while the front is inside the chain
/// gives the speed; tau1 is when the fit reaches site L.
inline FrontReport extract_front(const std::vector<double>& times, const std::vector<std::vector<double>>& n,
                                 const FeatureSettings& fs = {}) {
  FrontReport rep;
  if (times.empty()) return rep;
  const std::size_t L = n.front().size();
  const auto& n0 = n.front();
  std::vector<double> xs, ys;
  for (std::size_t k = 1; k < times.size(); ++k) {
    int front = 0;
    for (std::size_t j = L; j-- > 0;)
      if (n[k][j] < (1 - fs.front_drop) * n0[j]) {
        front = static_cast<int>(j) + 1;
        break;
      }
    if (front == 0) continue;
    rep.locus.emplace_back(times[k], front);
    if (front >= static_cast<int>(L)) break;
    xs.push_back(times[k]);
    ys.push_back(front);
  }
  // The locus must move monotonically outward to count as a front.
  bool monotone = true;
  for (std::size_t i = 1; i < ys.size(); ++i)
    if (ys[i] < ys[i - 1]) monotone = false;
  auto fit = least_squares(xs, ys);
  if (!fit || !monotone || static_cast<int>(xs.size()) < fs.min_front_points || fit->slope <= 0) return rep;
  // A front has to cross a sizeable part of the chain.
  if (ys.back() - ys.front() < 0.25 * static_cast<double>(L)) return rep;
  rep.detected = true;
  rep.speed = fit->slope;
  rep.tau1 = (static_cast<double>(L) - fit->intercept) / fit->slope;
  return rep;
}

/// Earliest sample time after which max_j |dn_j/dt| stays below the
/// threshold for the whole window; dn/dt by central differences.
inline std::optional<double> extract_tau2(const std::vector<double>& times,
                                          const std::vector<std::vector<double>>& n, const FeatureSettings& fs = {}) {
  const std::size_t T = times.size();
  if (T < 3) return std::nullopt;
  std::vector<double> rate(T, 0.0);
  for (std::size_t k = 1; k + 1 < T; ++k) {
    double dt = times[k + 1] - times[k - 1];
    double m = 0;
    for (std::size_t j = 0; j < n[k].size(); ++j) m = std::max(m, std::abs(n[k + 1][j] - n[k - 1][j]) / dt);
    rate[k] = m;
  }
  for (std::size_t k = 1; k + 1 < T; ++k) {
    if (times[k] + fs.stable_window > times[T - 2] + 1e-12) break;
    bool ok = true;
    for (std::size_t q = k; q + 1 < T && times[q] <= times[k] + fs.stable_window + 1e-12; ++q)
      if (rate[q] >= fs.stable_rate) {
        ok = false;
        break;
      }
    if (ok) return times[k];
  }
  return std::nullopt;
}

/// Sign changes of a(t) - b(t), located by linear interpolation between
/// bracketing samples.
inline std::vector<double> crossings(const std::vector<double>& times, const std::vector<double>& a,
                                     const std::vector<double>& b) {
  std::vector<double> out;
  const std::size_t T = std::min({times.size(), a.size(), b.size()});
  for (std::size_t k = 0; k + 1 < T; ++k) {
    double d0 = a[k] - b[k], d1 = a[k + 1] - b[k + 1];
    if (d0 == 0 && k > 0) continue;
    if ((d0 > 0 && d1 <= 0) || (d0 < 0 && d1 >= 0)) {
      double f = d0 / (d0 - d1);
      out.push_back(times[k] + f * (times[k + 1] - times[k]));
    }
  }
  return out;
}

struct FeatureReport {
  FrontReport front;
  std::optional<double> tau2;
  struct Crossing {
    std::string pair;
    std::optional<double> time;
  };
  std::vector<Crossing> mpemba;
};

}  // namespace nhq
