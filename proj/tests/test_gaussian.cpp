#include "test_util.hpp"

using namespace nhq;
using namespace nhq::testing;

namespace {

using C = Complex<Mp>;

/// Exact d<N>/dt of psi(t) = e^{-iHt} psi / |.|:
/// 2 Re <psi|N|phi> - 2 <N> Re <psi|phi>, phi = -i H psi.
Mp ed_number_rate(const FockVector<Mp>& psi, const ManyBodyOperator<Mp>& op) {
  auto hpsi = nhq::apply(op.mat, psi.amps);
  C np{}, pp{};
  Mp n = 0;
  for (FockIndex s = 0; s < psi.dim(); ++s) {
    C phi = C(Mp(0), Mp(-1)) * hpsi[s];
    Mp occ(std::popcount(s));
    np += conj(psi.amps[s]) * phi * occ;
    pp += conj(psi.amps[s]) * phi;
    n += norm2(psi.amps[s]) * occ;
  }
  return 2 * np.re - 2 * n * pp.re;
}

}  // namespace

class Gaussian : public MpTest {
 protected:
  BogoliubovState<Mp> initial(const char* th, int L, Pattern pat = Pattern::FM) {
    return initial_state(parse_angle<Mp>(th), pat, LatticeSpec{L, Boundary::APBC}, ctx());
  }
  FockVector<Mp> initial_ed(const char* th, int L, Pattern pat = Pattern::FM) {
    return build_initial_state(parse_angle<Mp>(th), pat, LatticeSpec{L, Boundary::APBC}, InitialConstruction::Cat);
  }
};

TEST_F(Gaussian, InitialCorrelationsMatchExactState) {
  for (Pattern pat : {Pattern::FM, Pattern::AFM}) {
    for (const char* th : {"pi/12", "pi/6", "pi/3"}) {
      auto g = correlations(initial(th, 6, pat), ctx());
      auto psi = initial_ed(th, 6, pat);
      EXPECT_LT(max_abs_diff(g.C, ed_normal_correlations(psi)), tol() * 10) << th << to_string(pat);
      EXPECT_LT(max_abs_diff(g.F, ed_anomalous_correlations(psi)), tol() * 10) << th << to_string(pat);
    }
  }
}

TEST_F(Gaussian, EvolvedCorrelationsMatchExactState) {
  const int L = 6;
  Mp gamma("0.7"), dt("0.25");
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), gamma), LatticeSpec{L, Boundary::OBC});
  auto prop = make_propagator(h, dt, ctx());
  auto st = initial("pi/6", L);
  auto psi = initial_ed("pi/6", L);
  auto op = build_evolution_hamiltonian(h);
  EdPropagator<Mp> u(op, dt, ctx());
  Stepper<Mp> stepper(prop, 1, ctx());
  for (int k = 1; k <= 12; ++k) {
    stepper.step(st);
    psi = step_normalized(psi, u, ctx());
    if (k % 4) continue;
    auto g = correlations(st, ctx());
    auto c = ed_normal_correlations(psi);
    EXPECT_LT(max_abs_diff(g.C, c), tol() * 100) << "step " << k;
    EXPECT_LT(max_abs_diff(g.F, ed_anomalous_correlations(psi)), tol() * 100) << "step " << k;
    auto n = densities(st);
    auto hop = hopping_correlations(st);
    for (int j = 0; j < L; ++j) EXPECT_LT(abs(n[j] - c(j, j).re), tol() * 100);
    for (int j = 0; j + 1 < L; ++j) EXPECT_LT(abs(hop[j] - c(j + 1, j)), tol() * 100);
  }
}

TEST_F(Gaussian, StepSizeDoesNotChangeTrajectory) {
  const int L = 8;
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp("0.8")), LatticeSpec{L, Boundary::OBC});
  auto st = initial("pi/6", L);
  auto fine = evolve(st, make_propagator(h, Mp("0.1"), ctx()), 20, 1, ctx());
  auto coarse = evolve(st, make_propagator(h, Mp("0.5"), ctx()), 4, 1, ctx());
  auto lazy = evolve(st, make_propagator(h, Mp("0.1"), ctx()), 20, 7, ctx());
  auto pf = nambu_projector(fine);
  EXPECT_LT(max_abs_diff(pf, nambu_projector(coarse)), tol() * 100);
  EXPECT_LT(max_abs_diff(pf, nambu_projector(lazy)), tol() * 100);
  EXPECT_LT(abs(fine.t - 2), tol());
  EXPECT_EQ(fine.steps, 20);
}

TEST_F(Gaussian, HermitianEvolutionIsUnitaryWithoutRenormalization) {
  const int L = 8;
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp(0)), LatticeSpec{L, Boundary::OBC});
  auto prop = make_propagator(h, Mp("0.5"), ctx());
  auto st = initial("pi/4", L);
  Stepper<Mp> s(prop, 1000, ctx());
  for (int k = 0; k < 40; ++k) s.step(st);
  auto pr = purity(st, true);
  EXPECT_LT(pr.orthonormality, tol() * 100);
  EXPECT_LT(pr.isotropy, tol() * 100);
  EXPECT_LT(pr.projector, tol() * 100);
}

TEST_F(Gaussian, ProjectorIsGaugeInvariant) {
  Rng rng(71);
  const int L = 6;
  auto st = initial("pi/3", L);
  auto rotated = st;
  rotated.W = multiply(st.W, rng.unitary(L, ctx()));
  EXPECT_LT(max_abs_diff(nambu_projector(st), nambu_projector(rotated)), tol() * 10);
  auto g1 = correlations(st, ctx()), g2 = correlations(rotated, ctx());
  EXPECT_LT(max_abs_diff(g1.C, g2.C), tol() * 10);
  EXPECT_LT(max_abs_diff(g1.F, g2.F), tol() * 10);
  // a non-unitary mixing is undone by the QR renormalization
  auto skewed = st;
  skewed.W = thin_qr(multiply(st.W, rng.cmatrix(L, L)), ctx());
  EXPECT_LT(max_abs_diff(nambu_projector(st), nambu_projector(skewed)), tol() * 1000);
}

TEST_F(Gaussian, InitialStateIsPureAndIsotropic) {
  auto st = initial("pi/6", 16);
  auto pr = purity(st, true);
  EXPECT_LT(pr.orthonormality, tol());
  EXPECT_LT(pr.isotropy, tol());
  EXPECT_LT(pr.projector, tol());
  auto g = correlations(st, ctx());
  EXPECT_LT(max_abs_diff(g.F, -transpose(g.F)), tol());
  EXPECT_LT(hermiticity_defect(g.C), tol());
}

TEST_F(Gaussian, ZeroModeIsEmptied) {
  // theta = 0: Delta = 0, mu = 2, xi_k = -2 cos k - 2 vanishes only at k = pi,
  // which the periodic lattice contains and the antiperiodic one does not.
  const int L = 6;
  auto count = [&](Boundary b) {
    auto st = initial_state(Mp(0), Pattern::FM, LatticeSpec{L, b}, ctx());
    Mp n = 0;
    for (const auto& v : densities(st)) n += v;
    return n;
  };
  EXPECT_LT(abs(count(Boundary::APBC) - L), tol() * 10);
  EXPECT_LT(abs(count(Boundary::PBC) - (L - 1)), tol() * 10);
}

TEST_F(Gaussian, NumberRateMatchesExactDerivative) {
  const int L = 6;
  for (const char* g : {"0", "0.4", "0.9"}) {
    auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp(g)), LatticeSpec{L, Boundary::OBC});
    auto op = build_evolution_hamiltonian(h);
    auto st = initial("pi/6", L);
    auto psi = initial_ed("pi/6", L);
    EXPECT_LT(abs(number_rate(st, h) - ed_number_rate(psi, op)), tol() * 10) << g;
    st = evolve(st, make_propagator(h, Mp(1), ctx()), 1, 1, ctx());
    psi = evolve_normalized(psi, op, Mp(1), 1, ctx());
    EXPECT_LT(abs(number_rate(st, h) - ed_number_rate(psi, op)), tol() * 100) << g;
  }
}

TEST_F(Gaussian, NumberRateMatchesCentralDifference) {
  // second-order difference error shrinks fourfold per halving
  const int L = 8;
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp("0.8")), LatticeSpec{L, Boundary::OBC});
  auto st = evolve(initial("pi/6", L), make_propagator(h, Mp(1), ctx()), 1, 1, ctx());
  Mp rate = number_rate(st, h);
  auto total = [&](const Mp& t) {
    Mp n = 0;
    for (const auto& v : densities(evolve(st, make_propagator(h, t, ctx()), 1, 1, ctx()))) n += v;
    return n;
  };
  Mp prev = -1;
  for (const char* d : {"0.02", "0.01", "0.005"}) {
    Mp delta(d);
    // N(1 - delta) from the initial state
    auto back = evolve(initial("pi/6", L), make_propagator(h, Mp(1) - delta, ctx()), 1, 1, ctx());
    Mp nb = 0;
    for (const auto& v : densities(back)) nb += v;
    Mp err = abs((total(delta) - nb) / (2 * delta) - rate);
    if (prev > 0) { EXPECT_LT(err, prev / 3) << d; }
    prev = err;
  }
  EXPECT_LT(prev, Mp("1e-4"));
}

TEST_F(Gaussian, SingleShotProjectorAtShortTimeIsPure) {
  const int L = 8;
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp("0.8")), LatticeSpec{L, Boundary::OBC});
  auto st = initial("pi/6", L);
  EXPECT_LT(single_shot_purity_defect(h, st.W, Mp("0.5"), ctx()), tol() * 1000);
}

TEST_F(Gaussian, InvalidArguments) {
  auto h = hn_matrix(EvolutionParams<Mp>(Mp(1), Mp("0.8")), LatticeSpec{4, Boundary::OBC});
  EXPECT_THROW(make_propagator(h, Mp(0), ctx()), std::invalid_argument);
  auto p = make_propagator(h, Mp("0.1"), ctx());
  EXPECT_THROW(Stepper<Mp>(p, 0, ctx()), std::invalid_argument);
  EXPECT_THROW(ground_state(CMatrix<Mp>(3, 3), ctx()), std::invalid_argument);
  CMatrix<Mp> nh(4, 4);
  nh(0, 1) = C(Mp(1));
  EXPECT_THROW(ground_state(nh, ctx()), std::invalid_argument);
}
