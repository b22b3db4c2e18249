#pragma once

// Random instance generators shared by the property tests.

#include <random>
#include <set>
#include <string>
#include <vector>

#include "qmc/linalg.hpp"
#include "qmc/mltl.hpp"

namespace qmc::testing {

using Rng = std::mt19937_64;

inline Matrix gaussian(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = Complex(n(rng), n(rng));
  return m;
}

/// Random mixed state of full rank (Ginibre ensemble).
inline DensityMatrix random_state(Eigen::Index d, Rng& rng) {
  const Matrix g = gaussian(d, d, rng);
  Matrix rho = g * g.adjoint();
  rho /= rho.trace().real();
  return DensityMatrix(rho);
}

inline DensityMatrix random_pure(Eigen::Index d, Rng& rng) {
  Vector v = gaussian(d, 1, rng).col(0);
  v.normalize();
  return DensityMatrix::pure(v);
}

/// Random channel with k Kraus operators from a Haar-like isometry.
inline SuperOperator random_channel(Eigen::Index d, int k, Rng& rng) {
  const Matrix g = gaussian(k * d, d, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  const Matrix v = qr.householderQ() * Matrix::Identity(k * d, d);
  std::vector<Matrix> kraus;
  for (int i = 0; i < k; ++i) kraus.push_back(v.block(i * d, 0, d, d));
  return SuperOperator(std::move(kraus));
}

/// Random effect 0 <= M <= I.
inline MeasurementOperator random_effect(Eigen::Index d, Rng& rng) {
  const Matrix g = gaussian(d, d, rng);
  Eigen::SelfAdjointEigenSolver<Matrix> es(g + g.adjoint());
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Eigen::VectorXd w(d);
  for (Eigen::Index i = 0; i < d; ++i) w(i) = u(rng);
  return MeasurementOperator(es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint());
}

inline ProbInterval random_interval(Rng& rng) {
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution b(0.5);
  double a = u(rng), c = u(rng);
  if (a > c) std::swap(a, c);
  return ProbInterval{a, c, b(rng), b(rng)};
}

/// Random formula over the given names with at most `depth` nested operators.
inline FormulaPtr random_formula(const std::vector<std::string>& names, int depth, Rng& rng) {
  std::uniform_int_distribution<int> pick(0, depth <= 0 ? 2 : 11);
  std::uniform_int_distribution<std::size_t> which(0, names.size() - 1);
  switch (pick(rng)) {
    case 0: return f::ap(names[which(rng)]);
    case 1: return f::ap(names[which(rng)]);
    case 2: return std::bernoulli_distribution(0.5)(rng) ? f::tt() : f::ff();
    case 3: return f::neg(random_formula(names, depth - 1, rng));
    case 4: return f::conj(random_formula(names, depth - 1, rng), random_formula(names, depth - 1, rng));
    case 5: return f::disj(random_formula(names, depth - 1, rng), random_formula(names, depth - 1, rng));
    case 6: return f::implies(random_formula(names, depth - 1, rng), random_formula(names, depth - 1, rng));
    case 7: return f::next(random_formula(names, depth - 1, rng));
    case 8: return f::until(random_formula(names, depth - 1, rng), random_formula(names, depth - 1, rng));
    case 9: return f::release(random_formula(names, depth - 1, rng), random_formula(names, depth - 1, rng));
    case 10: return f::eventually(random_formula(names, depth - 1, rng));
    default: return f::always(random_formula(names, depth - 1, rng));
  }
}

inline Letter random_letter(const std::vector<std::string>& names, Rng& rng) {
  Letter l;
  for (const auto& n : names)
    if (std::bernoulli_distribution(0.5)(rng)) l.insert(n);
  return l;
}

inline LassoWord random_word(const std::vector<std::string>& names, int max_stem, int max_loop, Rng& rng) {
  std::uniform_int_distribution<int> s(0, max_stem), l(1, max_loop);
  LassoWord w;
  const int ns = s(rng), nl = l(rng);
  for (int i = 0; i < ns; ++i) w.stem.push_back(random_letter(names, rng));
  for (int i = 0; i < nl; ++i) w.loop.push_back(random_letter(names, rng));
  return w;
}

/// Every subset of names, as letters.
inline std::vector<Letter> all_letters(const std::vector<std::string>& names) {
  std::vector<Letter> out;
  for (unsigned mask = 0; mask < (1u << names.size()); ++mask) {
    Letter l;
    for (std::size_t i = 0; i < names.size(); ++i)
      if (mask & (1u << i)) l.insert(names[i]);
    out.push_back(l);
  }
  return out;
}

}  // namespace qmc::testing
