#pragma once

// Symbolic epsilon-neighborhoods. For each proposition (M, I) we bound the
// range of tr(M rho') over the Hilbert-Schmidt ball ||rho' - eta|| <= eps
// intersected with the state space, then classify it against I. The letter
// set is the product of the per-proposition classifications, which
// over-approximates the true neighborhood.

#include <algorithm>
#include <cmath>
#include <functional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "qmc/linalg.hpp"
#include "qmc/mltl.hpp"

namespace qmc {

enum class RangeMode { cheap, refined };

inline const char* to_string(RangeMode m) { return m == RangeMode::cheap ? "cheap" : "refined"; }

enum class APStatusKind { must_hold, must_fail, ambiguous };

inline const char* to_string(APStatusKind k) {
  switch (k) {
    case APStatusKind::must_hold: return "must_hold";
    case APStatusKind::must_fail: return "must_fail";
    case APStatusKind::ambiguous: return "ambiguous";
  }
  return "?";
}

struct APStatus {
  std::string ap;
  APStatusKind status = APStatusKind::ambiguous;
  double lo = 0.0, hi = 1.0;
};

/// Denotes { base + s : s subset of ambiguous } within the universe of
/// propositions it was built over; everything else in the universe is false.
struct SymbolSet {
  Letter base;
  std::set<std::string> ambiguous;
  std::set<std::string> universe;
  std::vector<APStatus> statuses;

  bool denotes(const Letter& letter) const {
    for (const auto& a : universe) {
      const bool in = letter.count(a) > 0;
      if (base.count(a) && !in) return false;
      if (!base.count(a) && !ambiguous.count(a) && in) return false;
    }
    return true;
  }

  /// Whether every letter denoted here is denoted by other (same universe).
  bool subset_of(const SymbolSet& other) const {
    for (const auto& a : base)
      if (!other.base.count(a) && !other.ambiguous.count(a)) return false;
    for (const auto& a : ambiguous)
      if (!other.ambiguous.count(a)) return false;
    for (const auto& a : other.base)
      if (!base.count(a)) return false;
    return true;
  }

  static SymbolSet exact(const Letter& letter, std::set<std::string> universe) {
    SymbolSet s;
    s.universe = std::move(universe);
    for (const auto& a : letter)
      if (s.universe.count(a)) s.base.insert(a);
    return s;
  }

  static SymbolSet all(std::set<std::string> universe) {
    SymbolSet s;
    s.universe = std::move(universe);
    s.ambiguous = s.universe;
    return s;
  }
};

struct RangeOptions {
  int iterations = 200;  // golden-section steps of the refined dual search
  double dual_margin = 1e-9;  // slack added to the dual bound for roundoff
  double tol_trace = 1e-9;
};

namespace detail {

/// Largest and smallest eigenvalue of a Hermitian operator.
inline std::pair<double, double> spectral_bounds(const Matrix& m) {
  const Eigen::VectorXd ev = hermitian_eigenvalues(m);
  return {ev(0), ev(ev.size() - 1)};
}

/// Frobenius-nearest density matrix: eigenvalues projected onto the simplex.
inline Matrix density_projection(const Matrix& x) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (x + x.adjoint()));
  // Work relative to the top eigenvalue; the projection ignores shifts by c I.
  const Eigen::VectorXd v = es.eigenvalues().array() - es.eigenvalues().maxCoeff();
  std::vector<double> u(v.data(), v.data() + v.size());
  std::sort(u.begin(), u.end(), std::greater<>());
  double cum = 0.0, theta = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cum += u[j];
    const double t = (cum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) theta = t;
  }
  const Eigen::VectorXd y = (v.array() - theta).cwiseMax(0.0).matrix();
  return es.eigenvectors() * y.asDiagonal() * es.eigenvectors().adjoint();
}

/// Upper bound on max tr(M rho') over states rho' with ||rho' - eta|| <= eps.
/// Weak duality gives, for every lam > 0,
///   max <= g(lam) = max_{rho state} [tr(M rho) - lam ||rho - eta||^2] + lam eps^2,
/// and the inner maximizer is the projection of eta + M / (2 lam) onto the
/// states. g is minimized over log(lam) by golden-section search; each
/// evaluated g is itself a valid bound, so the smallest one is returned.
inline double dual_upper(const Matrix& m, const Matrix& eta, double eps, int iterations) {
  // Centering M and keeping lam within a bounded ratio of its spread keeps
  // eta + M / (2 lam) well scaled, so each projection stays accurate. Every
  // lam is admissible, so the restriction costs tightness only.
  const Eigen::VectorXd ev = hermitian_eigenvalues(m);
  const double center = 0.5 * (ev(0) + ev(ev.size() - 1));
  const double spread = ev(ev.size() - 1) - ev(0);
  if (spread <= 1e-12 * std::max(1.0, std::abs(center))) return center;
  const Matrix mc = m - center * Matrix::Identity(m.rows(), m.cols());
  auto g = [&](double t) {
    const double lam = std::exp(t);
    const Matrix rho = density_projection(eta + mc / (2.0 * lam));
    const double dist2 = (rho - eta).squaredNorm();
    return center + trace_product(mc, rho) - lam * dist2 + lam * eps * eps;
  };
  const double phi = 0.5 * (std::sqrt(5.0) - 1.0);
  double a = std::log(spread * 1e-6), b = std::log(spread * 1e12);
  double x1 = b - phi * (b - a), x2 = a + phi * (b - a);
  double f1 = g(x1), f2 = g(x2);
  double best = std::min(f1, f2);
  for (int k = 0; k < iterations && b - a > 1e-12; ++k) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - phi * (b - a);
      f1 = g(x1);
      best = std::min(best, f1);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + phi * (b - a);
      f2 = g(x2);
      best = std::min(best, f2);
    }
  }
  return best;
}

}  // namespace detail

/// Interval containing every tr(M rho') with rho' a state within eps of eta.
inline std::pair<double, double> ap_range(const DensityMatrix& eta, const MeasurementOperator& op,
                                          double eps, RangeMode mode = RangeMode::cheap,
                                          const RangeOptions& ro = {}) {
  const Matrix& m = op.matrix();
  if (m.rows() != eta.dim()) throw DimensionError("ap_range: operator and state dimensions differ");
  const double c = trace_product(m, eta.matrix());
  const double r = eps * hs_norm(m);
  auto [lmin, lmax] = detail::spectral_bounds(m);
  // Snap numerically exact projector spectra.
  if (std::abs(lmin) <= ro.tol_trace) lmin = 0.0;
  if (std::abs(lmax - 1.0) <= ro.tol_trace) lmax = 1.0;
  double lo = std::max({c - r, lmin, 0.0});
  double hi = std::min({c + r, lmax, 1.0});
  if (mode == RangeMode::refined) {
    hi = std::min(hi, detail::dual_upper(m, eta.matrix(), eps, ro.iterations) + ro.dual_margin);
    lo = std::max(lo, -detail::dual_upper(-m, eta.matrix(), eps, ro.iterations) - ro.dual_margin);
  }
  if (lo > hi) lo = hi = 0.5 * (lo + hi);  // only possible through roundoff
  return {lo, hi};
}

/// Classifies a range against an interval. Ranges are widened by tol before
/// the comparison (ties are ambiguous), but never beyond [lmin, lmax] of the
/// operator, which bounds tr(M rho) for every state.
inline APStatusKind classify(std::pair<double, double> range, const ProbInterval& iv,
                             std::pair<double, double> feasible, double tol) {
  const double lo = std::max(range.first - tol, feasible.first);
  const double hi = std::min(range.second + tol, feasible.second);
  if (iv.contains(lo) && iv.contains(hi)) return APStatusKind::must_hold;
  const bool below = iv.lo_closed ? hi < iv.lo : hi <= iv.lo;
  const bool above = iv.hi_closed ? lo > iv.hi : lo >= iv.hi;
  if (below || above) return APStatusKind::must_fail;
  return APStatusKind::ambiguous;
}

inline SymbolSet neighborhood(const DensityMatrix& eta, double eps, const std::vector<AtomicProp>& aps,
                              RangeMode mode = RangeMode::cheap, const RangeOptions& ro = {}) {
  SymbolSet s;
  for (const auto& a : aps) {
    s.universe.insert(a.name);
    const auto range = ap_range(eta, a.op, eps, mode, ro);
    auto feasible = detail::spectral_bounds(a.op.matrix());
    if (std::abs(feasible.first) <= ro.tol_trace) feasible.first = 0.0;
    if (std::abs(feasible.second - 1.0) <= ro.tol_trace) feasible.second = 1.0;
    feasible.first = std::max(feasible.first, 0.0);
    feasible.second = std::min(feasible.second, 1.0);
    const APStatusKind k = classify(range, a.interval, feasible, ro.tol_trace);
    s.statuses.push_back({a.name, k, range.first, range.second});
    if (k == APStatusKind::must_hold) s.base.insert(a.name);
    if (k == APStatusKind::ambiguous) s.ambiguous.insert(a.name);
  }
  return s;
}

}  // namespace qmc
