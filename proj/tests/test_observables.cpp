#include "test_util.hpp"

#include <cmath>

using namespace nhq;
using namespace nhq::testing;

namespace {

using C = Complex<Mp>;

struct Pair {
  BogoliubovState<Mp> st;
  FockVector<Mp> psi;
};

/// Gaussian and exact states after the same non-Hermitian evolution.
Pair evolved_pair(const char* theta, const char* gamma, int L, const Mp& t, const PrecisionContext& ctx,
                  bool exact = true) {
  Mp th = parse_angle<Mp>(theta);
  LatticeSpec prep{L, Boundary::APBC};
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp(gamma)), LatticeSpec{L, Boundary::OBC});
  Pair p{initial_state(th, Pattern::FM, prep, ctx), {}};
  if (t > 0) p.st = evolve(p.st, make_propagator(h, t, ctx), 1, 1, ctx);
  if (exact) {
    p.psi = build_initial_state(th, Pattern::FM, prep, InitialConstruction::Cat);
    if (t > 0) p.psi = evolve_normalized(p.psi, build_evolution_hamiltonian(h), t, 1, ctx);
  }
  return p;
}

}  // namespace

class Observables : public MpTest {};

TEST_F(Observables, EntropiesMatchExactReducedState) {
  for (const char* g : {"0", "0.6"}) {
    auto p = evolved_pair("pi/6", g, 8, Mp("1.5"), ctx());
    for (std::vector<int> sites : {std::vector<int>{0, 1, 2}, {2, 3, 5}, {0, 1, 3, 4, 6}}) {
      auto ee = ee_from_projector(subsystem_projector(p.st, sites), ctx());
      auto ex = exact_measures(reduced_density_matrix(p.psi, sites), ctx());
      EXPECT_LT(abs(ee.s_vn - ex.s_vn), tol() * 100) << g << " l=" << sites.size();
      EXPECT_LT(abs(ee.s2 - ex.s2), tol() * 100) << g << " l=" << sites.size();
    }
  }
}

TEST_F(Observables, EntropyOfBlockEqualsComplement) {
  auto p = evolved_pair("pi/3", "0.8", 10, Mp(3), ctx(), false);
  auto a = ee_from_projector(subsystem_projector(p.st, {0, 1, 2}), ctx());
  auto b = ee_from_projector(subsystem_projector(p.st, {3, 4, 5, 6, 7, 8, 9}), ctx());
  EXPECT_LT(abs(a.s_vn - b.s_vn), tol() * 100);
  EXPECT_LT(abs(a.s2 - b.s2), tol() * 100);
}

TEST_F(Observables, EntropyOfSimpleProjectors) {
  CMatrix<Mp> mixed(2, 2), pure(2, 2);
  mixed(0, 0) = mixed(1, 1) = C(Mp("0.5"));
  pure(0, 0) = C(Mp(1));
  auto m = ee_from_projector(mixed, ctx());
  EXPECT_LT(abs(m.s_vn - log(Mp(2))), tol());
  EXPECT_LT(abs(m.s2 - log(Mp(2))), tol());
  auto q = ee_from_projector(pure, ctx());
  EXPECT_LT(abs(q.s_vn), tol());
  EXPECT_LT(abs(q.s2), tol());
}

TEST_F(Observables, CorrelationRouteMatchesStateRoute) {
  auto p = evolved_pair("pi/6", "0.4", 8, Mp(2), ctx(), false);
  auto g = correlations(p.st, ctx());
  std::vector<int> sites{1, 4, 6};
  EXPECT_LT(max_abs_diff(subsystem_projector(p.st, sites), subsystem_projector(g, sites)), tol() * 10);
  auto a = density_current(p.st, Mp(1));
  auto b = density_current(g, Mp(1), ctx());
  for (std::size_t j = 0; j < a.n.size(); ++j) EXPECT_LT(abs(a.n[j] - b.n[j]), tol() * 10);
  for (std::size_t j = 0; j < a.I.size(); ++j) EXPECT_LT(abs(a.I[j] - b.I[j]), tol() * 10);
  EXPECT_LT(abs(a.total - b.total), tol() * 10);
}

TEST_F(Observables, CurrentMatchesExactState) {
  // I_j = -2J Im <c+_{j+1} c_j>
  auto p = evolved_pair("pi/4", "0.5", 8, Mp(1), ctx());
  Mp J("1.5");
  auto dc = density_current(p.st, J);
  auto c = ed_normal_correlations(p.psi);
  for (int j = 0; j + 1 < 8; ++j) EXPECT_LT(abs(dc.I[j] + 2 * J * c(j + 1, j).im), tol() * 100);
  Mp n = 0;
  for (int j = 0; j < 8; ++j) n += c(j, j).re;
  EXPECT_LT(abs(dc.total - n), tol() * 100);
}

TEST_F(Observables, ChargedMomentMatchesExactTrace) {
  auto p = evolved_pair("pi/3", "0.6", 8, Mp(2), ctx());
  std::vector<int> sites{0, 1, 2, 3};
  auto rd = reduced_density_matrix(p.psi, sites);
  auto ps = subsystem_projector(p.st, sites);
  for (const char* a : {"0", "pi/7", "pi/3", "-pi/2", "pi"}) {
    Mp alpha = parse_angle<Mp>(a);
    auto ex = exact_charged_moment(rd, alpha);
    EXPECT_LT(abs(ex.im), tol());
    for (auto m : {MomentMethod::Determinant, MomentMethod::Pfaffian}) {
      auto z = charged_moment(ps, alpha, ctx(), m);
      EXPECT_LT(abs(z - ex), tol() * 100) << a;
    }
  }
  EXPECT_THROW(charged_moment(ps, Mp(4), ctx()), std::invalid_argument);
}

TEST_F(Observables, AsymmetryMatchesExactAndIsQuadratureExact) {
  // Z_2 is a trigonometric polynomial of degree l, so the trapezoid rule is
  // exact once n_alpha > 2l.
  auto p = evolved_pair("pi/6", "0.8", 8, Mp("2.5"), ctx());
  std::vector<int> sites{0, 1, 2, 3, 4};
  auto ex = exact_measures(reduced_density_matrix(p.psi, sites), ctx());
  auto ps = subsystem_projector(p.st, sites);
  auto a16 = ea_renyi2(ps, 16, ctx());
  auto a32 = ea_renyi2(ps, 32, ctx(), MomentMethod::Pfaffian);
  EXPECT_LT(abs(a16.delta_s2 - ex.delta_s2), tol() * 100);
  EXPECT_LT(abs(a32.delta_s2 - ex.delta_s2), tol() * 100);
  EXPECT_LT(abs(a16.purity - exp(-ex.s2)), tol() * 100);
  EXPECT_GT(a16.delta_s2, 0);
  EXPECT_THROW(ea_renyi2(ps, 15, ctx()), std::invalid_argument);
  EXPECT_THROW(ea_renyi2(ps, 8, ctx()), std::invalid_argument);
}

TEST_F(Observables, SymmetricStateHasNoAsymmetry) {
  // theta = 0 is a Fock state of definite charge
  auto st = initial_state(Mp(0), Pattern::FM, LatticeSpec{10, Boundary::APBC}, ctx());
  auto a = ea_renyi2(subsystem_projector(st, {0, 1, 2, 3}), 16, ctx());
  EXPECT_LT(abs(a.delta_s2), tol() * 10);
}

TEST_F(Observables, PfaffianAndDeterminantRoutesAgree) {
  Rng rng(81);
  for (int k = 0; k < 20; ++k) {
    auto p = evolved_pair("pi/6", "0.8", 8, Mp(k) / 4, ctx(), false);
    std::vector<int> sites;
    for (int j = 0; j < 8; ++j)
      if (rng.integer(0, 1)) sites.push_back(j);
    if (sites.empty()) sites.push_back(3);
    auto g0 = detail::majorana_covariance(subsystem_projector(p.st, sites), ctx());
    Mp alpha = rng.real() * pi<Mp>();
    auto zd = charged_moment_from_covariance(g0, alpha, MomentMethod::Determinant, ctx());
    auto zp = charged_moment_from_covariance(g0, alpha, MomentMethod::Pfaffian, ctx());
    EXPECT_LT(abs(zd - zp), tol() * 100);
  }
}

TEST_F(Observables, MajoranaCovarianceIsRealAntisymmetric) {
  auto p = evolved_pair("pi/3", "0.4", 6, Mp(1), ctx(), false);
  auto g = detail::majorana_covariance(subsystem_projector(p.st, {0, 2, 3}), ctx());
  EXPECT_LT(max_abs_diff(g, -transpose(g)), tol() * 10);
  // a pure state of the whole chain gives Gamma^2 = -I
  auto full = detail::majorana_covariance(nambu_projector(p.st), ctx());
  EXPECT_LT(max_abs_diff(multiply(full, full), -RMatrix<Mp>::identity(12)), tol() * 100);
}

TEST_F(Observables, InflowByHand) {
  std::vector<Mp> prev{Mp(1), Mp(1), Mp(1)}, next{Mp("1.2"), Mp(1), Mp("0.8")}, I{Mp("0.1"), Mp("-0.1")};
  auto s = inflow(prev, next, I, Mp("0.1"));
  EXPECT_LT(abs(s[0] - Mp("1.1")), tol());
  EXPECT_LT(abs(s[1] - Mp("-0.2")), tol());
  EXPECT_LT(abs(s[2] - Mp("-0.9")), tol());
  EXPECT_THROW(inflow(prev, next, I, Mp(0)), std::invalid_argument);
  EXPECT_THROW(inflow(prev, next, prev, Mp(1)), std::invalid_argument);
}

TEST_F(Observables, InflowVanishesForHermitianEvolution) {
  const int L = 8;
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp(0)), LatticeSpec{L, Boundary::OBC});
  auto st = evolve(initial_state(parse_angle<Mp>("pi/6"), Pattern::FM, LatticeSpec{L, Boundary::APBC}, ctx()),
                   make_propagator(h, Mp(1), ctx()), 1, 1, ctx());
  auto dc = density_current(st, Mp(1));
  Mp prev_err = -1;
  for (const char* d : {"0.002", "0.001"}) {
    Mp delta(d);
    auto fwd = evolve(st, make_propagator(h, delta, ctx()), 1, 1, ctx());
    // backward step: diag(exp(+i h delta), exp(-i h^T delta)) for real h
    auto bwd = st;
    auto u = mat_exp(h, C(Mp(0), delta), ctx());
    CMatrix<Mp> k(2 * L, 2 * L);
    k.set_block(0, 0, u);
    k.set_block(L, L, conjugate(u));
    bwd.W = thin_qr(multiply(k, st.W), ctx());
    auto s = inflow(densities(bwd), densities(fwd), dc.I, delta);
    Mp err = 0;
    for (const auto& v : s) err = std::max(err, Mp(abs(v)));
    if (prev_err > 0) { EXPECT_LT(abs(prev_err / err - 4), Mp("0.1")); }
    prev_err = err;
  }
  EXPECT_LT(prev_err, Mp("1e-5"));
}

// ---------------------------------------------------- feature extraction

TEST(Features, StraightFrontGivesSpeedAndArrival) {
  const int L = 20;
  std::vector<double> times;
  std::vector<std::vector<double>> n;
  for (int k = 0; k <= 28; ++k) {
    double t = 0.25 * k;
    times.push_back(t);
    std::vector<double> row(L, 1.0);
    for (int j = 0; j < L; ++j)
      if (j < 4 * t) row[j] = 0.5;
    n.push_back(row);
  }
  auto f = extract_front(times, n);
  ASSERT_TRUE(f.detected);
  EXPECT_NEAR(f.speed, 4.0, 1e-12);
  EXPECT_NEAR(f.tau1, 5.0, 1e-12);
}

TEST(Features, FlatProfileHasNoFront) {
  std::vector<double> times{0, 1, 2, 3, 4, 5};
  std::vector<std::vector<double>> n(6, std::vector<double>(10, 0.7));
  EXPECT_FALSE(extract_front(times, n).detected);
  EXPECT_FALSE(extract_front({}, {}).detected);
}

TEST(Features, Tau2OfExponentialRelaxation) {
  // |dn/dt| = e^{-t} drops below 1e-3 at t = ln 1000
  std::vector<double> times;
  std::vector<std::vector<double>> n;
  for (int k = 0; k <= 200; ++k) {
    times.push_back(0.1 * k);
    n.push_back({std::exp(-0.1 * k), 0.3});
  }
  auto tau = extract_tau2(times, n);
  ASSERT_TRUE(tau.has_value());
  EXPECT_NEAR(*tau, std::log(1000.0), 0.11);
  std::vector<std::vector<double>> osc;
  for (double t : times) osc.push_back({std::sin(t)});
  EXPECT_FALSE(extract_tau2(times, osc).has_value());
}

TEST(Features, CrossingsByLinearInterpolation) {
  auto c = crossings({0, 0.5, 1.5, 2}, {0, 0.5, 1.5, 2}, {1, 1, 1, 1});
  ASSERT_EQ(c.size(), 1u);
  EXPECT_DOUBLE_EQ(c[0], 1.0);
  auto touch = crossings({0, 1, 2}, {0, 1, 2}, {1, 1, 1});
  ASSERT_EQ(touch.size(), 1u);
  EXPECT_DOUBLE_EQ(touch[0], 1.0);
  auto two = crossings({0, 1, 2, 3}, {0, 2, 0, 2}, {1, 1, 1, 1});
  EXPECT_EQ(two.size(), 3u);
  EXPECT_TRUE(crossings({0, 1}, {1, 2}, {0, 0}).empty());
}

TEST(Features, LeastSquares) {
  auto f = least_squares({0, 1, 2, 3}, {1, 3, 5, 7});
  ASSERT_TRUE(f);
  EXPECT_DOUBLE_EQ(f->slope, 2.0);
  EXPECT_DOUBLE_EQ(f->intercept, 1.0);
  EXPECT_FALSE(least_squares({1, 1}, {0, 1}));
  EXPECT_FALSE(least_squares({1}, {0}));
}
