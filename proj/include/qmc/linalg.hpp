#pragma once

// Dense complex linear algebra for quantum states and superoperators.
//
// Matrices are Eigen::MatrixXcd. The vectorization convention is fixed to
// |A> = (A (x) I)|Omega> with |Omega> = sum_k |k>|k>, i.e. the entry A(k, j)
// lands at index k*d + j. With that convention the Kraus map
// rho -> sum_i E_i rho E_i^dag acts on |rho> as sum_i E_i (x) conj(E_i).

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace qmc {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

struct Tolerances {
  double herm = 1e-9;
  double trace = 1e-9;
  double psd = 1e-8;
  double kraus = 1e-9;
};

struct Violation {
  std::string invariant;
  double magnitude = 0.0;
  std::string detail;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool ok() const { return violations.empty(); }

  std::string str() const {
    if (ok()) return "ok";
    std::ostringstream os;
    for (std::size_t i = 0; i < violations.size(); ++i) {
      if (i) os << "; ";
      os << violations[i].invariant << " violated by " << violations[i].magnitude;
      if (!violations[i].detail.empty()) os << " (" << violations[i].detail << ")";
    }
    return os.str();
  }
};

class ValidationError : public Error {
 public:
  ValidationError(const std::string& what, ValidationReport report)
      : Error(what + ": " + report.str()), report_(std::move(report)) {}
  const ValidationReport& report() const { return report_; }

 private:
  ValidationReport report_;
};

inline Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i)
    for (Eigen::Index j = 0; j < a.cols(); ++j)
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
  return out;
}

/// Schatten 2-norm (Hilbert-Schmidt / Frobenius).
inline double hs_norm(const Matrix& a) { return a.norm(); }

inline bool all_finite(const Matrix& a) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    const Complex z = a.data()[i];
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

/// Eigenvalues of the Hermitian part (A + A^dag)/2, ascending.
inline Eigen::VectorXd hermitian_eigenvalues(const Matrix& a) {
  const Matrix h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<Matrix> es(h, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

inline void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    std::ostringstream os;
    os << what << ": expected a square matrix, got " << a.rows() << "x" << a.cols();
    throw DimensionError(os.str());
  }
}

inline Vector vectorize(const Matrix& a) {
  require_square(a, "vectorize");
  const Eigen::Index d = a.rows();
  Vector v(d * d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j) v(k * d + j) = a(k, j);
  return v;
}

inline Eigen::Index perfect_sqrt(Eigen::Index n, const char* what) {
  auto d = static_cast<Eigen::Index>(std::llround(std::sqrt(static_cast<double>(n))));
  if (d * d != n) {
    std::ostringstream os;
    os << what << ": size " << n << " is not a perfect square";
    throw DimensionError(os.str());
  }
  return d;
}

inline Matrix devectorize(const Vector& v) {
  const Eigen::Index d = perfect_sqrt(v.size(), "devectorize");
  Matrix a(d, d);
  for (Eigen::Index k = 0; k < d; ++k)
    for (Eigen::Index j = 0; j < d; ++j) a(k, j) = v(k * d + j);
  return a;
}

/// tr_2(M) = sum_k (I (x) <k|) M (I (x) |k>) for M acting on H (x) H.
inline Matrix partial_trace_2(const Matrix& m) {
  require_square(m, "partial_trace_2");
  const Eigen::Index d = perfect_sqrt(m.rows(), "partial_trace_2");
  Matrix out = Matrix::Zero(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j)
      for (Eigen::Index k = 0; k < d; ++k) out(i, j) += m(i * d + k, j * d + k);
  return out;
}

/// Unnormalized maximally entangled vector sum_k |k>|k>.
inline Vector omega_vector(Eigen::Index d) {
  Vector v = Vector::Zero(d * d);
  for (Eigen::Index k = 0; k < d; ++k) v(k * d + k) = 1.0;
  return v;
}

/// Real part of tr(M rho); the imaginary part vanishes for Hermitian inputs.
inline double trace_product(const Matrix& m, const Matrix& rho) {
  // tr(M rho) = sum_ij M_ij rho_ji
  return (m.transpose().cwiseProduct(rho)).sum().real();
}

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

/// A quantum state. The wrapper does not validate on construction; use
/// validate() or require_valid() at trust boundaries.
class DensityMatrix {
 public:
  DensityMatrix() = default;
  explicit DensityMatrix(Matrix m) : m_(std::move(m)) { require_square(m_, "DensityMatrix"); }

  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

  static DensityMatrix pure(const Vector& psi) { return DensityMatrix(psi * psi.adjoint()); }

  static DensityMatrix diagonal(const std::vector<double>& probs) {
    Matrix m = Matrix::Zero(static_cast<Eigen::Index>(probs.size()),
                            static_cast<Eigen::Index>(probs.size()));
    for (std::size_t i = 0; i < probs.size(); ++i)
      m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = probs[i];
    return DensityMatrix(std::move(m));
  }

 private:
  Matrix m_;
};

class MeasurementOperator {
 public:
  MeasurementOperator() = default;
  explicit MeasurementOperator(Matrix m) : m_(std::move(m)) {
    require_square(m_, "MeasurementOperator");
  }
  Eigen::Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }

 private:
  Matrix m_;
};

/// Trace-preserving CP map given by its Kraus operators. The d^2 x d^2
/// matrix representation is computed once and shared between copies.
class SuperOperator {
 public:
  SuperOperator() = default;
  explicit SuperOperator(std::vector<Matrix> kraus) : kraus_(std::move(kraus)) {
    if (kraus_.empty()) throw DimensionError("SuperOperator: empty Kraus list");
    dim_ = kraus_.front().rows();
    for (const auto& k : kraus_) {
      if (k.rows() != dim_ || k.cols() != dim_)
        throw DimensionError("SuperOperator: Kraus operators must all be d x d");
    }
    cache_ = std::make_shared<Cache>();
  }

  Eigen::Index dim() const { return dim_; }
  const std::vector<Matrix>& kraus() const { return kraus_; }

  /// M_E = sum_k E_k (x) conj(E_k)
  const Matrix& matrix_rep() const {
    std::call_once(cache_->once, [this] {
      const Eigen::Index n = dim_ * dim_;
      cache_->rep = Matrix::Zero(n, n);
      for (const auto& k : kraus_) cache_->rep += kron(k, k.conjugate());
    });
    return cache_->rep;
  }

  static SuperOperator identity(Eigen::Index d) { return SuperOperator({Matrix::Identity(d, d)}); }

  static SuperOperator unitary(const Matrix& u) { return SuperOperator({u}); }

 private:
  struct Cache {
    std::once_flag once;
    Matrix rep;
  };
  Eigen::Index dim_ = 0;
  std::vector<Matrix> kraus_;
  std::shared_ptr<Cache> cache_;
};

inline Matrix matrix_rep(const SuperOperator& e) { return e.matrix_rep(); }

/// sum_k E_k rho E_k^dag on a raw operator (not necessarily a state).
inline Matrix apply_to_operator(const SuperOperator& e, const Matrix& a) {
  if (a.rows() != e.dim() || a.cols() != e.dim()) {
    std::ostringstream os;
    os << "apply: operator is " << a.rows() << "x" << a.cols() << " but the superoperator acts on d="
       << e.dim();
    throw DimensionError(os.str());
  }
  Matrix out = Matrix::Zero(a.rows(), a.cols());
  for (const auto& k : e.kraus()) out.noalias() += k * a * k.adjoint();
  return out;
}

inline DensityMatrix apply(const SuperOperator& e, const DensityMatrix& rho) {
  return DensityMatrix(apply_to_operator(e, rho.matrix()));
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

inline ValidationReport validate(const DensityMatrix& rho, const Tolerances& tol = {}) {
  ValidationReport r;
  const Matrix& m = rho.matrix();
  if (!all_finite(m)) {
    r.violations.push_back({"finite", INFINITY, "non-finite entry"});
    return r;
  }
  const double herm = hs_norm(m - m.adjoint());
  if (herm > tol.herm) r.violations.push_back({"hermitian", herm, "||rho - rho^dag||"});
  const double tr_err = std::abs(m.trace() - Complex(1.0, 0.0));
  if (tr_err > tol.trace) {
    std::ostringstream os;
    os << "tr = " << m.trace().real();
    r.violations.push_back({"unit trace", tr_err, os.str()});
  }
  if (m.rows() > 0) {
    const double lmin = hermitian_eigenvalues(m)(0);
    if (lmin < -tol.psd) r.violations.push_back({"positive semi-definite", -lmin, "min eigenvalue"});
  }
  return r;
}

inline ValidationReport validate(const MeasurementOperator& op, const Tolerances& tol = {}) {
  ValidationReport r;
  const Matrix& m = op.matrix();
  if (!all_finite(m)) {
    r.violations.push_back({"finite", INFINITY, "non-finite entry"});
    return r;
  }
  const double herm = hs_norm(m - m.adjoint());
  if (herm > tol.herm) r.violations.push_back({"hermitian", herm, "||M - M^dag||"});
  if (m.rows() > 0) {
    const Eigen::VectorXd ev = hermitian_eigenvalues(m);
    if (ev(0) < -tol.psd) r.violations.push_back({"positive semi-definite", -ev(0), "min eigenvalue"});
    if (ev(ev.size() - 1) > 1.0 + tol.psd)
      r.violations.push_back({"M <= I", ev(ev.size() - 1) - 1.0, "max eigenvalue exceeds 1"});
  }
  return r;
}

inline ValidationReport validate(const SuperOperator& e, const Tolerances& tol = {}) {
  ValidationReport r;
  const Eigen::Index d = e.dim();
  Matrix sum = Matrix::Zero(d, d);
  for (const auto& k : e.kraus()) {
    if (!all_finite(k)) {
      r.violations.push_back({"finite", INFINITY, "non-finite Kraus entry"});
      return r;
    }
    sum += k.adjoint() * k;
  }
  const double err = hs_norm(sum - Matrix::Identity(d, d));
  if (err > tol.kraus) r.violations.push_back({"completeness", err, "||sum E^dag E - I||"});
  if (static_cast<Eigen::Index>(e.kraus().size()) > d * d) {
    std::ostringstream os;
    os << e.kraus().size() << " Kraus operators for d=" << d;
    r.violations.push_back(
        {"Kraus count <= d^2", static_cast<double>(e.kraus().size() - static_cast<std::size_t>(d * d)),
         os.str()});
  }
  return r;
}

template <class T>
void require_valid(const T& x, const char* what, const Tolerances& tol = {}) {
  ValidationReport r = validate(x, tol);
  if (!r.ok()) throw ValidationError(what, std::move(r));
}

// ---------------------------------------------------------------------------
// Quantum Markov chain
// ---------------------------------------------------------------------------

struct QMC {
  SuperOperator transition;
  DensityMatrix initial;

  QMC() = default;
  QMC(SuperOperator e, DensityMatrix rho0) : transition(std::move(e)), initial(std::move(rho0)) {
    if (transition.dim() != initial.dim()) {
      std::ostringstream os;
      os << "QMC: transition acts on d=" << transition.dim() << " but the initial state has d="
         << initial.dim();
      throw DimensionError(os.str());
    }
  }

  Eigen::Index dim() const { return transition.dim(); }
};

inline void require_valid(const QMC& g, const Tolerances& tol = {}) {
  require_valid(g.transition, "transition", tol);
  require_valid(g.initial, "initial state", tol);
}

}  // namespace qmc
