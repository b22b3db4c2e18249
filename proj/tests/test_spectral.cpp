#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

#include "qmc/models.hpp"
#include "qmc/spectral.hpp"
#include "support.hpp"

using namespace qmc;
using qmc::testing::Rng;

namespace {

QMC symmetric_chain() {
  Eigen::MatrixXd p(2, 2);
  p << 0.5, 0.5, 0.5, 0.5;
  return classical_mc_to_qmc(p, {1.0, 0.0});
}

// Determinant of (m - l I) by LU, an oracle independent of the Schur route.
Complex char_poly(const Matrix& m, Complex l) {
  return (m - l * Matrix::Identity(m.rows(), m.cols())).partialPivLu().determinant();
}

std::vector<double> sorted_phases(const SpectralData& sd) {
  std::vector<double> out;
  for (const auto& l : sd.eigenvalues) {
    double ph = phase_of(l);
    if (ph > 1.0 - 1e-9) ph = 0.0;
    out.push_back(ph);
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST(Spectral, PhaseRotationEigenvalues) {
  const QMC g = phase_rotation(1.0 / 3.0);
  const SpectralData sd = decompose(g.transition);
  ASSERT_EQ(sd.eigenvalues.size(), 4u);
  EXPECT_EQ(sd.n_peripheral, 4);
  const Matrix m = g.transition.matrix_rep();
  for (const auto& l : sd.eigenvalues) {
    EXPECT_NEAR(std::abs(l), 1.0, 1e-12);
    EXPECT_LE(std::abs(char_poly(m, l)), 1e-10);
  }
  const auto ph = sorted_phases(sd);
  EXPECT_NEAR(ph[0], 0.0, 1e-12);
  EXPECT_NEAR(ph[1], 0.0, 1e-12);
  EXPECT_NEAR(ph[2], 1.0 / 3.0, 1e-12);
  EXPECT_NEAR(ph[3], 2.0 / 3.0, 1e-12);
}

TEST(Spectral, IdentityChannel) {
  const SpectralData sd = decompose(SuperOperator::identity(2));
  EXPECT_EQ(sd.n_peripheral, 4);
  for (const auto& l : sd.eigenvalues) EXPECT_NEAR(std::abs(l - Complex(1.0)), 0.0, 1e-14);
  EXPECT_EQ(sd.omega, 0.0);
  EXPECT_EQ(sd.d_omega, 1);
}

TEST(Spectral, SymmetricChainHasZeroModes) {
  const SpectralData sd = decompose(symmetric_chain().transition);
  bool has_one = false, has_zero = false;
  for (const auto& l : sd.eigenvalues) {
    has_one |= std::abs(l - Complex(1.0)) < 1e-12;
    has_zero |= std::abs(l) < 1e-12;
  }
  EXPECT_TRUE(has_one);
  EXPECT_TRUE(has_zero);
  EXPECT_NEAR(sd.omega, 0.0, 1e-12);
}

TEST(Spectral, InvariantsOnRandomChannels) {
  Rng rng(21);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + t % 3;
    const auto e = qmc::testing::random_channel(d, 1 + t % 3, rng);
    const SpectralData sd = decompose(e);
    EXPECT_LE(sd.spectral_radius, 1.0 + 1e-9);
    EXPECT_GE(sd.omega, 0.0);
    EXPECT_LT(sd.omega, 1.0);
    EXPECT_GE(sd.d_omega, 1);
    EXPECT_GE(sd.cond_number, 1.0);
    EXPECT_LE(sd.residual, 1e-8);
    EXPECT_EQ(sd.n_peripheral + sd.n_contracting + sd.n_nilpotent, sd.n());
    // The peripheral projector is idempotent and commutes with M_E.
    const Matrix phi = stabilizer(sd);
    const Matrix m = e.matrix_rep();
    EXPECT_LE((phi * phi - phi).norm(), 1e-8 * std::max(1.0, sd.cond_number));
    EXPECT_LE((m * phi - phi * m).norm(), 1e-8 * std::max(1.0, sd.cond_number));
  }
}

TEST(Spectral, IrrationalPhaseContributions) {
  const QMC g = phase_rotation(1.0 / std::sqrt(2.0));
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  EXPECT_EQ(r.contributing_phases.size(), 3u);
  EXPECT_FALSE(r.is_stable());
  EXPECT_FALSE(r.witness.empty());
  const auto mixed = check_stability(sd, DensityMatrix::diagonal({0.5, 0.5}));
  ASSERT_EQ(mixed.contributing_phases.size(), 1u);
  EXPECT_NEAR(mixed.contributing_phases[0].phase, 0.0, 1e-12);
  EXPECT_TRUE(mixed.is_stable());
  EXPECT_EQ(*mixed.period, 1);
}

TEST(Spectral, RationalPhaseHasPeriodThree) {
  const QMC g = phase_rotation(1.0 / 3.0);
  const auto r = check_stability(g);
  ASSERT_TRUE(r.is_stable());
  EXPECT_EQ(*r.period, 3);
  // Direct simulation: E^3 is the identity on this state.
  Matrix rho = g.initial.matrix();
  for (int i = 0; i < 3; ++i) rho = apply_to_operator(g.transition, rho);
  EXPECT_LE((rho - g.initial.matrix()).norm(), 1e-12);
}

TEST(Spectral, SmallWalksAreStablePeriodOne) {
  for (int d : {2, 3, 4}) {
    const QMC g = quantum_walk({d, 1, Coin::R});
    const auto r = check_stability(g);
    ASSERT_TRUE(r.is_stable()) << d;
    EXPECT_EQ(*r.period, 1);
    for (const auto& ph : r.contributing_phases) EXPECT_NEAR(ph.phase, 0.0, 1e-9);
  }
}

TEST(Spectral, StabilizerExamples) {
  const auto id = decompose(SuperOperator::identity(2));
  EXPECT_LE((stabilizer(id) - Matrix::Identity(4, 4)).norm(), 1e-12);

  const auto rot = decompose(phase_rotation(1.0 / 3.0).transition);
  EXPECT_LE((stabilizer(rot) - Matrix::Identity(4, 4)).norm(), 1e-12);

  const QMC g = symmetric_chain();
  const auto sd = decompose(g.transition);
  Rng rng(4);
  for (int t = 0; t < 10; ++t) {
    const auto rho = qmc::testing::random_state(2, rng);
    Vector v = vectorize(rho.matrix());
    for (int n = 0; n < 100; ++n) v = g.transition.matrix_rep() * v;  // power iteration oracle
    EXPECT_LE((apply_stabilizer(sd, vectorize(rho.matrix())) - v).norm(), 1e-10);
  }
}

TEST(Spectral, StableStatesExamples) {
  Rng rng(9);
  const auto rho = qmc::testing::random_state(2, rng);
  const QMC id(SuperOperator::identity(2), rho);
  const auto sid = decompose(id.transition);
  const auto states = stable_states(id, sid, check_stability(sid, rho));
  ASSERT_EQ(states.size(), 1u);
  EXPECT_LE((states[0].matrix() - rho.matrix()).norm(), 1e-12);

  const QMC g = symmetric_chain();
  const auto sd = decompose(g.transition);
  const auto eta = stable_states(g, sd, check_stability(sd, g.initial));
  ASSERT_EQ(eta.size(), 1u);
  EXPECT_LE((eta[0].matrix() - DensityMatrix::diagonal({0.5, 0.5}).matrix()).norm(), 1e-12);
}

TEST(Spectral, WalkLimitState) {
  const QMC g = quantum_walk({4, 1, Coin::R});
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  const auto eta = stable_states(g, sd, r);
  ASSERT_EQ(eta.size(), 1u);
  Matrix rho = g.initial.matrix();
  for (int n = 0; n < 200; ++n) rho = apply_to_operator(g.transition, rho);
  EXPECT_LE((rho - eta[0].matrix()).norm(), 1e-6);
  EXPECT_NEAR(trace_product(walk_operators(4).m_yes, eta[0].matrix()), 1.0, 1e-9);
}

TEST(Spectral, PeriodThreeStableStatesCycle) {
  const QMC g = phase_rotation(1.0 / 3.0);
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  const auto eta = stable_states(g, sd, r);
  ASSERT_EQ(eta.size(), 3u);
  Matrix rho = g.initial.matrix();
  for (int n = 0; n < 9; ++n) {
    EXPECT_LE((rho - eta[static_cast<std::size_t>(n % 3)].matrix()).norm(), 1e-10);
    rho = apply_to_operator(g.transition, rho);
  }
}

TEST(Spectral, Rationalize) {
  auto r = rationalize(1.0 / 3.0, 64, 1e-9);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->p, 1);
  EXPECT_EQ(r->q, 3);
  r = rationalize(0.0, 64, 1e-9);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->q, 1);
  EXPECT_FALSE(rationalize(1.0 / std::sqrt(2.0), 64, 1e-9));
  r = rationalize(5.0 / 64.0, 64, 1e-9);
  ASSERT_TRUE(r);
  EXPECT_EQ(r->q, 64);
  EXPECT_FALSE(rationalize(1.0 / 65.0, 64, 1e-9));
}

TEST(Spectral, TruncationBoundIdentity) {
  const QMC g(SuperOperator::identity(2), DensityMatrix::diagonal({0.3, 0.7}));
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  EXPECT_EQ(truncation_bound(sd, r, 0.5), 1);
  EXPECT_EQ(truncation_bound(sd, r, 1e-6), 1);
}

TEST(Spectral, TruncationBoundSymmetricChain) {
  const QMC g = symmetric_chain();
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  const auto eta = stable_states(g, sd, r);
  const long long k = truncation_bound(sd, r, 0.1);
  Matrix rho = g.initial.matrix();
  for (long long n = 0; n < k; ++n) rho = apply_to_operator(g.transition, rho);
  EXPECT_LT((rho - eta[0].matrix()).norm(), 0.1);
  // One step already lands on diag(0.5, 0.5), so the simulated bound is 1.
  const auto sim = truncation_bound_simulated(g, eta, 0.1, 1000);
  ASSERT_TRUE(sim);
  EXPECT_EQ(*sim, 1);
  EXPECT_GE(k, *sim);
}

TEST(Spectral, UnstableChainRejectsTruncationBound) {
  const QMC g = phase_rotation(1.0 / std::sqrt(2.0));
  const auto sd = decompose(g.transition);
  const auto r = check_stability(sd, g.initial);
  EXPECT_THROW(truncation_bound(sd, r, 0.1), StabilityError);
  EXPECT_THROW(stable_states(g, sd, r), StabilityError);
}

// Decay of the non-peripheral part, bounded on both sides.
TEST(Spectral, DecaySandwichOnRandomChannels) {
  Rng rng(33);
  int checked = 0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + t % 2;
    const auto e = qmc::testing::random_channel(d, 2 + t % 3, rng);
    const SpectralData sd = decompose(e);
    const double c = sd.decay_constant, w = sd.omega;
    const int dw = sd.d_omega;
    const Matrix m = e.matrix_rep();
    const Matrix psi = m * stabilizer(sd);
    Matrix mn = Matrix::Identity(m.rows(), m.cols()), pn = mn;
    const int start = std::max({dw, sd.nilpotency_index, 1});
    for (int n = 1; n <= 30; ++n) {
      mn = mn * m;
      pn = pn * psi;
      if (n < start) continue;
      const double dist = (mn - pn).norm();
      const double shape = std::pow(w, n) * std::pow(static_cast<double>(n), dw - 1);
      EXPECT_LE(dist, c * shape * (1 + 1e-8) + 1e-12) << "instance " << t << " n=" << n;
      EXPECT_GE(dist * (1 + 1e-8) + 1e-300, shape / c) << "instance " << t << " n=" << n;
    }
    ++checked;
  }
  EXPECT_EQ(checked, 200);
}

TEST(Spectral, AnalyticBoundDominatesSimulated) {
  Rng rng(45);
  SpectralOptions exact;
  exact.safety_margin = 1.0;
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + t % 3;
    const QMC g(qmc::testing::random_channel(d, 2 + t % 3, rng), qmc::testing::random_pure(d, rng));
    const auto sd = decompose(g.transition);
    const auto r = check_stability(sd, g.initial);
    ASSERT_TRUE(r.is_stable()) << "instance " << t;
    const auto eta = stable_states(g, sd, r);
    for (double eps : {0.5, 0.1, 0.01}) {
      const long long k = truncation_bound(sd, r, eps);
      const auto sim = truncation_bound_simulated(g, eta, eps, 100 * k + 1000, exact);
      ASSERT_TRUE(sim) << "instance " << t;
      EXPECT_GE(k, *sim) << "instance " << t << " eps " << eps;
    }
  }
}
