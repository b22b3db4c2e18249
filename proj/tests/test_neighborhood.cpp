#include <gtest/gtest.h>

#include <cmath>

#include "qmc/neighborhood.hpp"
#include "support.hpp"

using namespace qmc;
using qmc::testing::Rng;

namespace {

Matrix proj0() {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  return m;
}

// Point on the segment from eta towards sigma at HS distance t * eps (t <= 1).
DensityMatrix toward(const DensityMatrix& eta, const DensityMatrix& sigma, double eps, double t) {
  const double dist = (sigma.matrix() - eta.matrix()).norm();
  const double s = dist > 0 ? std::min(1.0, t * eps / dist) : 0.0;
  return DensityMatrix((1.0 - s) * eta.matrix() + s * sigma.matrix());
}

struct Frozen {
  double eps, lo, hi;
};

}  // namespace

TEST(Neighborhood, IdentityOperatorIsExact) {
  Rng rng(1);
  const auto eta = qmc::testing::random_state(3, rng);
  const MeasurementOperator id(Matrix::Identity(3, 3));
  for (auto mode : {RangeMode::cheap, RangeMode::refined})
    for (double eps : {0.01, 0.5, 3.0}) {
      const auto r = ap_range(eta, id, eps, mode);
      EXPECT_NEAR(r.first, 1.0, 1e-9);
      EXPECT_NEAR(r.second, 1.0, 1e-9);
    }
}

TEST(Neighborhood, CheapBoundExample) {
  const auto r = ap_range(DensityMatrix::diagonal({0.5, 0.5}), MeasurementOperator(proj0()), 0.1);
  EXPECT_NEAR(r.first, 0.4, 1e-12);
  EXPECT_NEAR(r.second, 0.6, 1e-12);
}

TEST(Neighborhood, RefinedContainsGridExtrema) {
  // Bloch grid over qubit states within HS distance 0.1 of I/2.
  const DensityMatrix eta = DensityMatrix::diagonal({0.5, 0.5});
  const double eps = 0.1;
  const auto r = ap_range(eta, MeasurementOperator(proj0()), eps, RangeMode::refined);
  double gmin = 1, gmax = 0;
  const int n = 40;
  for (int i = 0; i <= n; ++i)
    for (int j = 0; j <= n; ++j)
      for (int k = 0; k <= n; ++k) {
        const double x = -1 + 2.0 * i / n, y = -1 + 2.0 * j / n, z = -1 + 2.0 * k / n;
        Matrix rho(2, 2);
        rho << 1 + z, Complex(x, -y), Complex(x, y), 1 - z;
        rho /= 2.0;
        if (x * x + y * y + z * z > 1.0) continue;
        if ((rho - eta.matrix()).norm() > eps) continue;
        const double v = trace_product(proj0(), rho);
        gmin = std::min(gmin, v);
        gmax = std::max(gmax, v);
      }
  EXPECT_LE(r.first, gmin);
  EXPECT_GE(r.second, gmax);
  // The exact extremes are 1/2 -+ eps / sqrt 2.
  EXPECT_NEAR(r.first, 0.5 - eps / std::sqrt(2.0), 1e-6);
  EXPECT_NEAR(r.second, 0.5 + eps / std::sqrt(2.0), 1e-6);
}

TEST(Neighborhood, RefinedMatchesFrozenSdpValues) {
  // Optima of max/min tr(M rho) over the ball, computed offline by an
  // interior-point SDP solver.
  Matrix eta(3, 3), m(3, 3);
  eta << 0.5, Complex(0.1, 0.05), 0.0, Complex(0.1, -0.05), 0.3, Complex(0, 0.05), 0.0, Complex(0, -0.05), 0.2;
  m << 0.7, 0.2, Complex(0, 0.1), 0.2, 0.4, 0.0, Complex(0, -0.1), 0.0, 0.2;
  const Frozen mixed[] = {{0.05, 0.5261952385726729, 0.5738047614284771},
                          {0.15, 0.47858571571809505, 0.6214142842748914},
                          {0.3, 0.40717143147631274, 0.6928285685727692}};
  for (const auto& fz : mixed) {
    const auto r = ap_range(DensityMatrix(eta), MeasurementOperator(m), fz.eps, RangeMode::refined);
    EXPECT_LE(r.first, fz.lo + 1e-6);
    EXPECT_GE(r.second, fz.hi - 1e-6);
    EXPECT_NEAR(r.first, fz.lo, 1e-5);
    EXPECT_NEAR(r.second, fz.hi, 1e-5);
  }
  Matrix pure(2, 2), m1 = Matrix::Zero(2, 2);
  pure << 0.9, 0.3, 0.3, 0.1;
  m1(1, 1) = 1.0;
  const Frozen edge[] = {{0.1, 0.06167979074990782, 0.17071067919478794},
                         {0.4, 0.0012240817632110182, 0.38284272292917093}};
  for (const auto& fz : edge) {
    const auto r = ap_range(DensityMatrix(pure), MeasurementOperator(m1), fz.eps, RangeMode::refined);
    EXPECT_LE(r.first, fz.lo + 1e-6);
    EXPECT_GE(r.second, fz.hi - 1e-6);
    EXPECT_NEAR(r.first, fz.lo, 1e-5);
    EXPECT_NEAR(r.second, fz.hi, 1e-5);
  }
}

TEST(Neighborhood, LargeEpsilonDenotesEverything) {
  Rng rng(2);
  const auto eta = qmc::testing::random_state(2, rng);
  std::vector<AtomicProp> aps{{"a", MeasurementOperator(proj0()), ProbInterval::closed(0.3, 0.6)},
                              {"b", MeasurementOperator(Matrix::Identity(2, 2) - proj0()),
                               ProbInterval::open_closed(0.2, 0.9)}};
  const SymbolSet s = neighborhood(eta, 10.0, aps);
  EXPECT_TRUE(s.base.empty());
  EXPECT_EQ(s.ambiguous, (std::set<std::string>{"a", "b"}));
  for (const auto& l : qmc::testing::all_letters({"a", "b"})) EXPECT_TRUE(s.denotes(l));
}

TEST(Neighborhood, UnitOperatorAlwaysHolds) {
  Rng rng(3);
  const std::vector<AtomicProp> aps{{"one", MeasurementOperator(Matrix::Identity(3, 3)), ProbInterval::closed(1, 1)}};
  for (int t = 0; t < 20; ++t)
    for (auto mode : {RangeMode::cheap, RangeMode::refined}) {
      const SymbolSet s = neighborhood(qmc::testing::random_state(3, rng), 0.05 + t * 0.1, aps, mode);
      EXPECT_EQ(s.base, (Letter{"one"}));
      EXPECT_TRUE(s.ambiguous.empty());
    }
}

TEST(Neighborhood, EndpointTieIsAmbiguous) {
  // Limit probability exactly on an endpoint: no eps can settle it.
  const DensityMatrix eta = DensityMatrix::diagonal({0.5, 0.5});
  const std::vector<AtomicProp> aps{{"a", MeasurementOperator(proj0()), ProbInterval::closed_open(0, 0.5)}};
  for (double eps : {0.1, 1e-3, 1e-6})
    for (auto mode : {RangeMode::cheap, RangeMode::refined})
      EXPECT_EQ(neighborhood(eta, eps, aps, mode).ambiguous.count("a"), 1u);
}

TEST(Neighborhood, SoundnessBySampling) {
  Rng rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int instances = 0;
  for (int t = 0; t < 240; ++t) {
    const Eigen::Index d = 2 + t % 3;
    const DensityMatrix eta = t % 4 == 0 ? qmc::testing::random_pure(d, rng) : qmc::testing::random_state(d, rng);
    std::vector<AtomicProp> aps;
    for (int i = 0; i < 3; ++i)
      aps.push_back({"a" + std::to_string(i), qmc::testing::random_effect(d, rng), qmc::testing::random_interval(rng)});
    const double eps = 0.02 + 0.4 * u(rng);
    const auto mode = t % 2 ? RangeMode::refined : RangeMode::cheap;
    const SymbolSet s = neighborhood(eta, eps, aps, mode);
    for (int k = 0; k < 60; ++k) {
      const auto sigma = k % 3 == 0 ? qmc::testing::random_pure(d, rng) : qmc::testing::random_state(d, rng);
      const auto rho = toward(eta, sigma, eps, k % 5 == 0 ? 1.0 : u(rng));
      ASSERT_LE((rho.matrix() - eta.matrix()).norm(), eps * (1 + 1e-12));
      const Letter l = label(rho, aps);
      EXPECT_TRUE(s.denotes(l)) << "instance " << t << " sample " << k;
      for (std::size_t i = 0; i < aps.size(); ++i) {
        const double v = trace_product(aps[i].op.matrix(), rho.matrix());
        EXPECT_GE(v, s.statuses[i].lo - 1e-9);
        EXPECT_LE(v, s.statuses[i].hi + 1e-9);
      }
    }
    ++instances;
  }
  EXPECT_GE(instances, 200);
}

TEST(Neighborhood, MonotoneInEpsilonAndMode) {
  Rng rng(5);
  for (int t = 0; t < 200; ++t) {
    const Eigen::Index d = 2 + t % 3;
    const auto eta = qmc::testing::random_state(d, rng);
    std::vector<AtomicProp> aps;
    for (int i = 0; i < 3; ++i)
      aps.push_back({"a" + std::to_string(i), qmc::testing::random_effect(d, rng), qmc::testing::random_interval(rng)});
    const double eps = 0.05 + 0.01 * (t % 30);
    for (auto mode : {RangeMode::cheap, RangeMode::refined}) {
      const SymbolSet small = neighborhood(eta, eps / 2, aps, mode);
      const SymbolSet big = neighborhood(eta, eps, aps, mode);
      EXPECT_TRUE(small.subset_of(big)) << t;
    }
    const SymbolSet refined = neighborhood(eta, eps, aps, RangeMode::refined);
    const SymbolSet cheap = neighborhood(eta, eps, aps, RangeMode::cheap);
    EXPECT_TRUE(refined.subset_of(cheap)) << t;
    for (std::size_t i = 0; i < aps.size(); ++i) {
      EXPECT_GE(refined.statuses[i].lo, cheap.statuses[i].lo - 1e-12);
      EXPECT_LE(refined.statuses[i].hi, cheap.statuses[i].hi + 1e-12);
    }
  }
}

TEST(Neighborhood, SymbolSetAlgebra) {
  const std::set<std::string> u{"a", "b", "c"};
  SymbolSet s;
  s.universe = u;
  s.base = {"a"};
  s.ambiguous = {"b"};
  EXPECT_TRUE(s.denotes({"a"}));
  EXPECT_TRUE(s.denotes({"a", "b"}));
  EXPECT_FALSE(s.denotes({"b"}));
  EXPECT_FALSE(s.denotes({"a", "c"}));
  EXPECT_TRUE(SymbolSet::exact({"a"}, u).subset_of(s));
  EXPECT_FALSE(s.subset_of(SymbolSet::exact({"a"}, u)));
  EXPECT_TRUE(s.subset_of(SymbolSet::all(u)));
}

TEST(Neighborhood, DimensionMismatchThrows) {
  EXPECT_THROW(ap_range(DensityMatrix::diagonal({1, 0, 0}), MeasurementOperator(proj0()), 0.1), DimensionError);
}
