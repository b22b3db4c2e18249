#pragma once

// Built-in chains: classical Markov chains encoded as QMCs, the Hadamard
// walk with absorbing boundaries, its classical counterpart, and a
// two-level phase rotation whose stability depends on the phase.
//
// Walk basis ordering is position-major, coin-minor: index 2k is |s_k>|L>
// and 2k+1 is |s_k>|R>.

#include <cmath>
#include <complex>
#include <sstream>
#include <string>
#include <vector>

#include "qmc/linalg.hpp"
#include "qmc/mltl.hpp"

namespace qmc {

enum class Coin { L = 0, R = 1 };

struct WalkSpec {
  int d = 2;  // positions s_0 ... s_d
  int start = 1;
  Coin direction = Coin::R;

  void check() const {
    if (d < 2) throw Error("walk: d must be at least 2");
    if (start < 0 || start > d) {
      std::ostringstream os;
      os << "walk: start position " << start << " outside [0, " << d << "]";
      throw Error(os.str());
    }
  }
};

/// E_kl = sqrt(p_kl) |s_l><s_k| for every positive entry of P.
inline QMC classical_mc_to_qmc(const Eigen::MatrixXd& p, const std::vector<double>& mu0,
                               double tol = 1e-9) {
  const Eigen::Index n = p.rows();
  if (p.cols() != n || static_cast<Eigen::Index>(mu0.size()) != n)
    throw DimensionError("classical_mc_to_qmc: P must be square and match the distribution");
  for (Eigen::Index k = 0; k < n; ++k) {
    if ((p.row(k).array() < -tol).any() || std::abs(p.row(k).sum() - 1.0) > tol) {
      std::ostringstream os;
      os << "classical_mc_to_qmc: row " << k << " is not a probability distribution";
      throw Error(os.str());
    }
  }
  double total = 0.0;
  for (double x : mu0) {
    if (x < -tol) throw Error("classical_mc_to_qmc: negative initial probability");
    total += x;
  }
  if (std::abs(total - 1.0) > tol) throw Error("classical_mc_to_qmc: initial distribution does not sum to 1");

  std::vector<Matrix> kraus;
  for (Eigen::Index k = 0; k < n; ++k)
    for (Eigen::Index l = 0; l < n; ++l)
      if (p(k, l) > 0.0) {
        Matrix e = Matrix::Zero(n, n);
        e(l, k) = std::sqrt(p(k, l));
        kraus.push_back(std::move(e));
      }
  return QMC(SuperOperator(std::move(kraus)), DensityMatrix::diagonal(mu0));
}

inline Eigen::Index walk_index(int position, Coin c) { return 2 * position + static_cast<int>(c); }

/// |s_k><s_k| (x) I_c on the walk space of size d.
inline Matrix position_projector(int d, int k) {
  Matrix m = Matrix::Zero(2 * (d + 1), 2 * (d + 1));
  m(walk_index(k, Coin::L), walk_index(k, Coin::L)) = 1.0;
  m(walk_index(k, Coin::R), walk_index(k, Coin::R)) = 1.0;
  return m;
}

struct WalkOperators {
  Matrix shift, coin, unitary, m_yes, m_no;
};

inline WalkOperators walk_operators(int d) {
  const Eigen::Index n = 2 * (d + 1);
  WalkOperators w;
  w.shift = Matrix::Zero(n, n);
  for (int k = 0; k <= d; ++k) {
    const int left = (k + d) % (d + 1), right = (k + 1) % (d + 1);
    w.shift(walk_index(left, Coin::L), walk_index(k, Coin::L)) = 1.0;
    w.shift(walk_index(right, Coin::R), walk_index(k, Coin::R)) = 1.0;
  }
  Matrix h(2, 2);
  h << 1.0, 1.0, 1.0, -1.0;
  h /= std::sqrt(2.0);
  w.coin = kron(Matrix::Identity(d + 1, d + 1), h);
  w.unitary = w.shift * w.coin;
  w.m_yes = position_projector(d, 0) + position_projector(d, d);
  w.m_no = Matrix::Identity(n, n) - w.m_yes;
  return w;
}

/// E(rho) = U M_no rho M_no^dag U^dag + M_yes rho M_yes^dag.
inline QMC quantum_walk(const WalkSpec& spec) {
  spec.check();
  const WalkOperators w = walk_operators(spec.d);
  Vector psi = Vector::Zero(2 * (spec.d + 1));
  psi(walk_index(spec.start, spec.direction)) = 1.0;
  return QMC(SuperOperator({w.unitary * w.m_no, w.m_yes}), DensityMatrix::pure(psi));
}

inline Eigen::MatrixXd classical_walk_matrix(int d) {
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(d + 1, d + 1);
  p(0, 0) = 1.0;
  p(d, d) = 1.0;
  for (int k = 1; k < d; ++k) {
    p(k, k - 1) = 0.5;
    p(k, k + 1) = 0.5;
  }
  return p;
}

/// Symmetric absorbing random walk on s_0 ... s_d; the direction is ignored.
inline QMC classical_walk(const WalkSpec& spec) {
  spec.check();
  std::vector<double> mu0(static_cast<std::size_t>(spec.d + 1), 0.0);
  mu0[static_cast<std::size_t>(spec.start)] = 1.0;
  return classical_mc_to_qmc(classical_walk_matrix(spec.d), mu0);
}

/// Unitary channel U = diag(1, exp(2 pi i psi)), started in |+><+| unless
/// another state is given.
inline QMC phase_rotation(double psi) {
  Matrix u = Matrix::Zero(2, 2);
  u(0, 0) = 1.0;
  u(1, 1) = std::polar(1.0, 2.0 * M_PI * psi);
  Vector plus(2);
  plus << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
  return QMC(SuperOperator::unitary(u), DensityMatrix::pure(plus));
}

/// Names an interval family: proposition for position k is prefix + k + suffix.
struct NamedInterval {
  std::string prefix;
  std::string suffix;
  ProbInterval interval;
};

/// (d+1) * |intervals| propositions (M_{s_k}, I) over the walk space, or over
/// the d+1 positions directly when classical is set.
inline std::vector<AtomicProp> walk_ap_set(int d, const std::vector<NamedInterval>& intervals,
                                           bool classical = false) {
  std::vector<AtomicProp> out;
  for (const auto& ni : intervals)
    for (int k = 0; k <= d; ++k) {
      Matrix m;
      if (classical) {
        m = Matrix::Zero(d + 1, d + 1);
        m(k, k) = 1.0;
      } else {
        m = position_projector(d, k);
      }
      out.push_back({ni.prefix + std::to_string(k) + ni.suffix, MeasurementOperator(std::move(m)),
                     ni.interval});
    }
  return out;
}

constexpr double kAbsorbGamma = 0.1;

/// abs{k}: [1/sqrt2 - 0.1, 1/sqrt2 + 0.1], p{k}lt: [0, 0.5), p{k}gt: (0.4, 1].
inline std::vector<NamedInterval> walk_intervals() {
  const double c = 1.0 / std::sqrt(2.0);
  return {{"abs", "", ProbInterval::closed(c - kAbsorbGamma, c + kAbsorbGamma)},
          {"p", "lt", ProbInterval::closed_open(0.0, 0.5)},
          {"p", "gt", ProbInterval::open_closed(0.4, 1.0)}};
}

inline std::vector<AtomicProp> walk_aps(int d, bool classical = false) {
  return walk_ap_set(d, walk_intervals(), classical);
}

}  // namespace qmc
