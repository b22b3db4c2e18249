#pragma once

// Spectral analysis of a channel's matrix representation.
//
// The matrix M = M_E is brought to complex Schur form and reordered into
// three groups: peripheral eigenvalues (|l| ~ 1), non-negligible contracting
// eigenvalues, and a (numerically) nilpotent remainder. Two Sylvester solves
// block-diagonalize the triangular factor:
//
//   M = Q X diag(T_p, T_r, N) X^-1 Q^H
//
// and T_p, T_r are diagonalized by their triangular eigenvectors V_p, V_r.
// S = Q X diag(V_p, V_r, I) then plays the role of the Jordan basis change:
// only the nilpotent block is left non-diagonal, and it vanishes after a
// finite number of steps.

#include <algorithm>
#include <cmath>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "qmc/lapack.hpp"
#include "qmc/linalg.hpp"

namespace qmc {

struct SpectralOptions {
  double tol_unit = 1e-9;      // peripheral cutoff on 1 - |l|
  double tol_cluster = 1e-7;   // eigenvalues this close form one cluster
  double tol_phase = 1e-9;     // rational phase acceptance
  double tol_coeff = 1e-8;     // a component of rho0 below this is ignored
  double tol_recon = 1e-8;     // relative reconstruction residual
  double tol_zero = 1e-4;      // eigenvalues below this go to the nilpotent group
  double tol_nilpotent = 1e-10;  // ||N^n||_F below this counts as zero
  int q_max = 64;
  double safety_margin = 0.9;
  int confirm_cycles = 3;
};

class DecompositionError : public Error {
 public:
  DecompositionError(const std::string& what, double residual)
      : Error(what), residual_(residual) {}
  double residual() const { return residual_; }

 private:
  double residual_;
};

class StabilityError : public Error {
 public:
  using Error::Error;
};

enum class Group { peripheral, contracting, nilpotent };

struct EigenCluster {
  Complex center;
  int first = 0;  // index of the first member in Schur order
  std::vector<int> members;
  Group group = Group::contracting;

  int size() const { return static_cast<int>(members.size()); }
  double modulus() const { return std::abs(center); }
};

struct SpectralData {
  Eigen::Index dim = 0;  // d; the matrix is d^2 x d^2
  std::vector<Complex> eigenvalues;  // Schur order
  int n_peripheral = 0, n_contracting = 0, n_nilpotent = 0;
  std::vector<EigenCluster> clusters;
  std::vector<int> peripheral_indices;

  Matrix q;       // Schur vectors, reordered
  Matrix t;       // reordered triangular factor
  Matrix y;       // decouples the peripheral block from the rest
  Matrix z;       // decouples contracting from nilpotent
  Matrix vp, vr;  // triangular eigenvectors of the first two diagonal blocks

  double spectral_radius = 0.0;
  double omega = 0.0;
  int d_omega = 1;
  int nilpotency_index = 0;
  double cond_number = 1.0;  // ||S||_F ||S^-1||_F
  double decay_constant = 1.0;  // C in ||M^n - M_psi^n|| <= C w^n n^(d_w - 1)
  double residual = 0.0;  // ||S J S^-1 - M||_F / ||M||_F

  std::vector<int> block_sizes() const {
    std::vector<int> out;
    for (const auto& c : clusters) out.push_back(c.size());
    return out;
  }

  Eigen::Index n() const { return dim * dim; }
};

namespace detail {

inline Group classify(Complex l, const SpectralOptions& o) {
  const double m = std::abs(l);
  if (m > 1.0 - o.tol_unit) return Group::peripheral;
  if (m <= o.tol_zero) return Group::nilpotent;
  return Group::contracting;
}

inline std::vector<EigenCluster> cluster(const std::vector<Complex>& ev, const SpectralOptions& o) {
  const int n = static_cast<int>(ev.size());
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int i) {
    while (parent[static_cast<std::size_t>(i)] != i) {
      parent[static_cast<std::size_t>(i)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(i)])];
      i = parent[static_cast<std::size_t>(i)];
    }
    return i;
  };
  // Sort by real part so the inner loop can stop early.
  std::vector<int> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return ev[static_cast<std::size_t>(a)].real() < ev[static_cast<std::size_t>(b)].real();
  });
  for (int a = 0; a < n; ++a) {
    const Complex la = ev[static_cast<std::size_t>(order[static_cast<std::size_t>(a)])];
    for (int b = a + 1; b < n; ++b) {
      const Complex lb = ev[static_cast<std::size_t>(order[static_cast<std::size_t>(b)])];
      if (lb.real() - la.real() > o.tol_cluster) break;
      if (std::abs(la - lb) <= o.tol_cluster &&
          classify(la, o) == classify(lb, o)) {
        parent[static_cast<std::size_t>(find(order[static_cast<std::size_t>(a)]))] =
            find(order[static_cast<std::size_t>(b)]);
      }
    }
  }
  std::vector<int> slot(static_cast<std::size_t>(n), -1);
  std::vector<EigenCluster> out;
  for (int i = 0; i < n; ++i) {
    const int r = find(i);
    if (slot[static_cast<std::size_t>(r)] < 0) {
      slot[static_cast<std::size_t>(r)] = static_cast<int>(out.size());
      out.push_back({});
      out.back().first = i;
      out.back().group = classify(ev[static_cast<std::size_t>(i)], o);
    }
    out[static_cast<std::size_t>(slot[static_cast<std::size_t>(r)])].members.push_back(i);
  }
  for (auto& c : out) {
    Complex s = 0.0;
    for (int i : c.members) s += ev[static_cast<std::size_t>(i)];
    c.center = s / static_cast<double>(c.members.size());
  }
  return out;
}

inline Matrix upper_inverse(const Matrix& v) {
  return v.triangularView<Eigen::Upper>().solve(Matrix::Identity(v.rows(), v.cols()));
}

inline std::vector<Complex> diagonal(const Matrix& t) {
  std::vector<Complex> d(static_cast<std::size_t>(t.rows()));
  for (Eigen::Index i = 0; i < t.rows(); ++i) d[static_cast<std::size_t>(i)] = t(i, i);
  return d;
}

}  // namespace detail

/// Schur-based decomposition of M_E; see the file comment for the layout.
inline SpectralData decompose(const SuperOperator& e, const SpectralOptions& o = {}) {
  SpectralData sd;
  sd.dim = e.dim();
  const Matrix& m = e.matrix_rep();
  const Eigen::Index n = m.rows();

  lapack::Schur s = lapack::schur(m);
  auto select = [&](auto pred) {
    std::vector<lapack_logical> sel(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) sel[static_cast<std::size_t>(i)] = pred(s.t(i, i)) ? 1 : 0;
    return sel;
  };
  lapack::reorder(s, select([&](Complex l) { return detail::classify(l, o) == Group::peripheral; }));
  lapack::reorder(s, select([&](Complex l) { return detail::classify(l, o) != Group::nilpotent; }));

  sd.eigenvalues = detail::diagonal(s.t);
  int np = 0, nr = 0, nz = 0;
  int stage = 0;  // groups must appear as peripheral, contracting, nilpotent
  for (const Complex& l : sd.eigenvalues) {
    const int g = static_cast<int>(detail::classify(l, o));
    if (g < stage)
      throw DecompositionError("decompose: eigenvalue groups interleave after reordering", 0.0);
    stage = g;
    (g == 0 ? np : g == 1 ? nr : nz)++;
  }
  sd.n_peripheral = np;
  sd.n_contracting = nr;
  sd.n_nilpotent = nz;
  for (int i = 0; i < np; ++i) sd.peripheral_indices.push_back(i);
  for (const Complex& l : sd.eigenvalues) sd.spectral_radius = std::max(sd.spectral_radius, std::abs(l));

  const Matrix& t = s.t;
  const Eigen::Index rest = n - np;
  const Matrix tp = t.topLeftCorner(np, np);
  const Matrix tr = t.block(np, np, nr, nr);
  const Matrix tz = t.bottomRightCorner(nz, nz);
  // T_p Y - Y B = -T_pB with B the trailing (contracting + nilpotent) block.
  sd.y = lapack::sylvester(tp, t.bottomRightCorner(rest, rest), -t.topRightCorner(np, rest));
  sd.z = lapack::sylvester(tr, tz, -t.block(np, np + nr, nr, nz));
  sd.vp = lapack::triangular_eigenvectors(tp);
  sd.vr = lapack::triangular_eigenvectors(tr);
  sd.q = std::move(s.q);
  sd.t = t;

  sd.clusters = detail::cluster(sd.eigenvalues, o);
  std::sort(sd.clusters.begin(), sd.clusters.end(),
            [](const EigenCluster& a, const EigenCluster& b) { return a.first < b.first; });

  // Nilpotent remainder: smallest nu with ||N^nu|| negligible.
  if (nz > 0) {
    Matrix p = tz;
    int nu = 1;
    while (p.norm() > o.tol_nilpotent) {
      if (nu > nz + 1)
        throw DecompositionError("decompose: near-zero eigenvalue block is not nilpotent", p.norm());
      p = (p * tz).eval();
      ++nu;
    }
    sd.nilpotency_index = nu;
  }

  // Decay parameters of the contracting part.
  if (nr > 0) {
    for (int i = np; i < np + nr; ++i) sd.omega = std::max(sd.omega, std::abs(sd.eigenvalues[static_cast<std::size_t>(i)]));
    sd.d_omega = 1;
    for (const auto& c : sd.clusters)
      if (c.group == Group::contracting && std::abs(c.modulus() - sd.omega) <= o.tol_cluster)
        sd.d_omega = std::max(sd.d_omega, c.size());
  } else {
    sd.omega = 0.0;
    sd.d_omega = std::max(1, sd.nilpotency_index);
  }

  // S_loc = X diag(Vp, Vr, I) and its inverse, assembled blockwise.
  const Matrix y1 = sd.y.leftCols(nr), y2 = sd.y.rightCols(nz);
  const Matrix vp_inv = detail::upper_inverse(sd.vp);
  const Matrix vr_inv = detail::upper_inverse(sd.vr);
  Matrix sl = Matrix::Zero(n, n), sl_inv = Matrix::Zero(n, n);
  sl.topLeftCorner(np, np) = sd.vp;
  sl.block(0, np, np, nr) = y1 * sd.vr;
  sl.block(0, np + nr, np, nz) = y1 * sd.z + y2;
  sl.block(np, np, nr, nr) = sd.vr;
  sl.block(np, np + nr, nr, nz) = sd.z;
  sl.bottomRightCorner(nz, nz).setIdentity();
  sl_inv.topLeftCorner(np, np) = vp_inv;
  sl_inv.block(0, np, np, nr) = -vp_inv * y1;
  sl_inv.block(0, np + nr, np, nz) = -vp_inv * y2;
  sl_inv.block(np, np, nr, nr) = vr_inv;
  sl_inv.block(np, np + nr, nr, nz) = -vr_inv * sd.z;
  sl_inv.bottomRightCorner(nz, nz).setIdentity();
  sd.cond_number = sl.norm() * sl_inv.norm();

  // J = diag(eigenvalues of T_p, eigenvalues of T_r, N); compare against T.
  Matrix j = Matrix::Zero(n, n);
  for (int i = 0; i < np + nr; ++i) j(i, i) = sd.eigenvalues[static_cast<std::size_t>(i)];
  j.bottomRightCorner(nz, nz) = tz;
  const double mnorm = std::max(m.norm(), 1e-300);
  sd.residual = (sl * j * sl_inv - t).norm() / mnorm;
  if (!(sd.residual <= o.tol_recon)) {
    std::ostringstream os;
    os << "decompose: reconstruction residual " << sd.residual << " exceeds " << o.tol_recon;
    throw DecompositionError(os.str(), sd.residual);
  }

  // Every Jordan block of modulus mu <= w and size k <= m satisfies
  // ||J^n|| <= sqrt(m) w^n n^(m-1) sum_{j<m} w^-j / j!  for n >= 1.
  if (sd.omega > 0.0) {
    double sum = 0.0, term = 1.0;
    for (int k = 0; k < sd.d_omega; ++k) {
      sum += term;
      term /= (sd.omega * (k + 1));
    }
    sd.decay_constant = sd.cond_number * std::sqrt(static_cast<double>(sd.d_omega)) * sum;
  } else {
    sd.decay_constant = sd.cond_number;
  }
  return sd;
}

// ---------------------------------------------------------------------------
// Peripheral phases and stability
// ---------------------------------------------------------------------------

struct Rational {
  long long p = 0;
  long long q = 1;
};

/// Smallest-denominator convergent p/q of x with q <= q_max and
/// |x - p/q| <= tol, if any.
inline std::optional<Rational> rationalize(double x, int q_max, double tol) {
  long long h0 = 0, h1 = 1, k0 = 1, k1 = 0;  // convergent recurrences
  double r = x;
  for (int it = 0; it < 64; ++it) {
    const double a = std::floor(r);
    const long long ai = static_cast<long long>(a);
    const long long h = ai * h1 + h0, k = ai * k1 + k0;
    if (k > q_max) return std::nullopt;
    if (std::abs(x - static_cast<double>(h) / static_cast<double>(k)) <= tol) return Rational{h, k};
    h0 = h1; h1 = h; k0 = k1; k1 = k;
    const double frac = r - a;
    if (frac <= 0.0) return std::nullopt;
    r = 1.0 / frac;
  }
  return std::nullopt;
}

struct PeripheralPhase {
  int eigen_index = 0;   // first member of the cluster in Schur order
  int multiplicity = 1;
  Complex eigenvalue;
  double phase = 0.0;    // psi in [0, 1) with l = exp(2 pi i psi)
  double weight = 0.0;   // norm of rho0's component in this eigenspace
  std::optional<Rational> rational;
};

enum class Stability { stable, undetermined };

struct StabilityReport {
  Stability stable = Stability::undetermined;
  std::optional<long long> period;
  std::vector<PeripheralPhase> contributing_phases;
  std::string witness;

  bool is_stable() const { return stable == Stability::stable; }
};

inline double phase_of(Complex l) {
  double psi = std::arg(l) / (2.0 * M_PI);
  if (psi < 0.0) psi += 1.0;
  if (psi >= 1.0) psi -= 1.0;
  return psi;
}

/// Coordinates of |rho0> in the decoupled Schur basis, peripheral block only.
inline Vector peripheral_coordinates(const SpectralData& sd, const DensityMatrix& rho0) {
  if (rho0.dim() != sd.dim) throw DimensionError("peripheral_components: state dimension mismatch");
  const Vector w = sd.q.adjoint() * vectorize(rho0.matrix());
  const int np = sd.n_peripheral;
  return w.head(np) - sd.y * w.tail(w.size() - np);
}

inline std::vector<PeripheralPhase> peripheral_components(const SpectralData& sd,
                                                          const DensityMatrix& rho0,
                                                          const SpectralOptions& o = {}) {
  const Vector up = peripheral_coordinates(sd, rho0);
  const Vector a = sd.vp.triangularView<Eigen::Upper>().solve(up);
  std::vector<PeripheralPhase> out;
  for (const auto& c : sd.clusters) {
    if (c.group != Group::peripheral) continue;
    Vector part = Vector::Zero(sd.n_peripheral);
    for (int i : c.members) part += sd.vp.col(i) * a(i);
    const double weight = part.norm();
    if (weight <= o.tol_coeff) continue;
    PeripheralPhase ph;
    ph.eigen_index = c.first;
    ph.multiplicity = c.size();
    ph.eigenvalue = c.center;
    ph.phase = phase_of(c.center);
    ph.weight = weight;
    ph.rational = rationalize(ph.phase, o.q_max, o.tol_phase);
    out.push_back(ph);
  }
  return out;
}

inline StabilityReport check_stability(const SpectralData& sd, const DensityMatrix& rho0,
                                       const SpectralOptions& o = {}) {
  StabilityReport r;
  r.contributing_phases = peripheral_components(sd, rho0, o);
  long long period = 1;
  for (const auto& ph : r.contributing_phases) {
    if (!ph.rational) {
      std::ostringstream os;
      os.precision(12);
      os << "eigenvalue exp(2 pi i * " << ph.phase << ") contributes with weight " << ph.weight
         << " and has no rational phase p/q with q <= " << o.q_max;
      r.witness = os.str();
      r.stable = Stability::undetermined;
      return r;
    }
    period = std::lcm(period, ph.rational->q);
  }
  r.stable = Stability::stable;
  r.period = period;
  return r;
}

inline StabilityReport check_stability(const QMC& g, const SpectralOptions& o = {}) {
  return check_stability(decompose(g.transition, o), g.initial, o);
}

/// Dense matrix of the stabilizer E_phi, the spectral projection onto the
/// peripheral eigenspace.
inline Matrix stabilizer(const SpectralData& sd) {
  const Eigen::Index n = sd.n(), np = sd.n_peripheral;
  Matrix p = Matrix::Zero(np, n);
  p.leftCols(np).setIdentity();
  p.rightCols(n - np) = -sd.y;
  return sd.q.leftCols(np) * p * sd.q.adjoint();
}

inline Vector apply_stabilizer(const SpectralData& sd, const Vector& v) {
  const Vector w = sd.q.adjoint() * v;
  const int np = sd.n_peripheral;
  const Vector up = w.head(np) - sd.y * w.tail(w.size() - np);
  return sd.q.leftCols(np) * up;
}

inline Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

/// eta_k = E_phi(E^k(rho0)) for k < p(G).
inline std::vector<DensityMatrix> stable_states(const QMC& g, const SpectralData& sd,
                                                const StabilityReport& report) {
  if (!report.is_stable() || !report.period)
    throw StabilityError("stable_states: chain is not known to be periodically stable (" +
                         report.witness + ")");
  std::vector<DensityMatrix> out;
  Matrix eta = hermitian_part(devectorize(apply_stabilizer(sd, vectorize(g.initial.matrix()))));
  for (long long k = 0; k < *report.period; ++k) {
    out.emplace_back(eta);
    eta = hermitian_part(apply_to_operator(g.transition, eta));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Truncation bounds
// ---------------------------------------------------------------------------

/// Minimal K with C w^n n^(d_w - 1) < eps for every n >= K, never below the
/// nilpotency index or d_w.
inline long long truncation_bound(const SpectralData& sd, const StabilityReport& report, double eps) {
  if (!report.is_stable())
    throw StabilityError("truncation_bound: chain is not known to be periodically stable");
  if (!(eps > 0.0)) throw Error("truncation_bound: epsilon must be positive");
  if (sd.omega <= 0.0) return sd.d_omega;
  const double lw = std::log(sd.omega);
  const int dw = sd.d_omega;
  long long lo = std::max<long long>({dw, sd.nilpotency_index, 1});
  // The bound is decreasing only past its peak at n = (d_w - 1) / -ln w.
  if (dw > 1) lo = std::max(lo, static_cast<long long>(std::ceil((dw - 1) / -lw)));
  auto ok = [&](long long k) {
    return std::log(sd.decay_constant) + static_cast<double>(k) * lw +
               (dw - 1) * std::log(static_cast<double>(k)) < std::log(eps);
  };
  if (ok(lo)) return lo;
  long long hi = lo;
  while (!ok(hi)) {
    if (hi > (1LL << 50)) throw Error("truncation_bound: bound does not fit in range");
    hi *= 2;
  }
  while (hi - lo > 1) {
    const long long mid = lo + (hi - lo) / 2;
    (ok(mid) ? hi : lo) = mid;
  }
  return hi;
}

/// Smallest n <= n_max such that the trajectory stays within
/// safety_margin * eps of the limit cycle for period * confirm_cycles steps.
inline std::optional<long long> truncation_bound_simulated(const QMC& g,
                                                           const std::vector<DensityMatrix>& states,
                                                           double eps, long long n_max,
                                                           const SpectralOptions& o = {}) {
  if (states.empty()) throw StabilityError("truncation_bound_simulated: no stable states");
  const long long p = static_cast<long long>(states.size());
  const long long window = p * std::max(1, o.confirm_cycles);
  const double limit = eps * o.safety_margin;
  Matrix rho = g.initial.matrix();
  long long run = 0;
  for (long long m = 0; m <= n_max + window; ++m) {
    const double dist = hs_norm(rho - states[static_cast<std::size_t>(m % p)].matrix());
    run = dist < limit ? run + 1 : 0;
    if (run == window) {
      const long long n = m - window + 1;
      return n <= n_max ? std::optional<long long>(n) : std::nullopt;
    }
    rho = apply_to_operator(g.transition, rho);
  }
  return std::nullopt;
}

}  // namespace qmc
