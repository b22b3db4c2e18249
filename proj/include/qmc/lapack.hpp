#pragma once

// Thin wrappers over the LAPACKE routines used by the spectral module.
// Everything is column-major, matching Eigen's default storage.

#include <sstream>
#include <string>
#include <vector>

#include <complex>

// Use std::complex for LAPACK's complex types so Eigen buffers pass directly.
#ifndef lapack_complex_float
#define lapack_complex_float std::complex<float>
#endif
#ifndef lapack_complex_double
#define lapack_complex_double std::complex<double>
#endif
#include <lapacke.h>

#include "qmc/linalg.hpp"

namespace qmc::lapack {

class LapackError : public Error {
 public:
  LapackError(const char* routine, lapack_int info)
      : Error(message(routine, info)), info_(info) {}
  lapack_int info() const { return info_; }

 private:
  static std::string message(const char* routine, lapack_int info) {
    std::ostringstream os;
    os << routine << " failed with info=" << info;
    return os.str();
  }
  lapack_int info_;
};

inline lapack_int as_int(Eigen::Index n) { return static_cast<lapack_int>(n); }

struct Schur {
  Matrix t;  // upper triangular
  Matrix q;  // unitary, a = q t q^H
};

/// Complex Schur form, unsorted.
inline Schur schur(Matrix a) {
  require_square(a, "schur");
  const lapack_int n = as_int(a.rows());
  Schur s;
  s.q.resize(n, n);
  std::vector<Complex> w(static_cast<std::size_t>(n));
  lapack_int sdim = 0;
  if (n > 0) {
    lapack_int info = LAPACKE_zgees(LAPACK_COL_MAJOR, 'V', 'N', nullptr, n, a.data(), n, &sdim,
                                    w.data(), s.q.data(), n);
    if (info != 0) throw LapackError("zgees", info);
  }
  s.t = std::move(a);
  return s;
}

/// Moves the selected eigenvalues to the leading block, updating q.
/// The relative order of the selected eigenvalues is preserved.
inline void reorder(Schur& s, const std::vector<lapack_logical>& select) {
  const lapack_int n = as_int(s.t.rows());
  if (n == 0) return;
  std::vector<Complex> w(static_cast<std::size_t>(n));
  lapack_int m = 0;
  double sep = 0.0, cond = 0.0;
  lapack_int info = LAPACKE_ztrsen(LAPACK_COL_MAJOR, 'N', 'V', select.data(), n, s.t.data(), n,
                                   s.q.data(), n, w.data(), &m, &cond, &sep);
  if (info != 0) throw LapackError("ztrsen", info);
}

/// Solves a*x - x*b = c for upper triangular a, b. Returns x.
inline Matrix sylvester(const Matrix& a, const Matrix& b, Matrix c) {
  const lapack_int m = as_int(a.rows()), n = as_int(b.rows());
  if (m == 0 || n == 0) return c;
  double scale = 1.0;
  lapack_int info = LAPACKE_ztrsyl(LAPACK_COL_MAJOR, 'N', 'N', -1, m, n, a.data(), m, b.data(), n,
                                   c.data(), m, &scale);
  // info == 1 signals close eigenvalues; the perturbed solution is still returned.
  if (info < 0) throw LapackError("ztrsyl", info);
  if (scale != 1.0) c /= scale;
  return c;
}

/// Right eigenvectors of an upper triangular matrix. Column k has zeros
/// below row k, so the result is upper triangular and invertible.
inline Matrix triangular_eigenvectors(Matrix t) {
  const lapack_int n = as_int(t.rows());
  Matrix vr = Matrix::Zero(n, n);  // LAPACKE nan-checks this buffer
  if (n == 0) return vr;
  lapack_int m = 0;
  lapack_int info = LAPACKE_ztrevc(LAPACK_COL_MAJOR, 'R', 'A', nullptr, n, t.data(), n, nullptr, n,
                                   vr.data(), n, n, &m);
  if (info != 0) throw LapackError("ztrevc", info);
  return vr;
}

}  // namespace qmc::lapack
