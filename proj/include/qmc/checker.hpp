#pragma once

// Approximate model checking of a periodically stable QMC.
//
// For a given eps the trajectory is abstracted as
//   L(rho_0) ... L(rho_{K-1}) (N(zeta_0) ... N(zeta_{p-1}))^omega,
// zeta_k = eta_{(K + k) mod p}. If that lasso language avoids L(phi) the
// chain violates phi; if it is included in L(phi) the chain satisfies phi;
// otherwise the answer is unknown at this eps.

#include <algorithm>
#include <chrono>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "qmc/automata.hpp"
#include "qmc/linalg.hpp"
#include "qmc/mltl.hpp"
#include "qmc/neighborhood.hpp"
#include "qmc/spectral.hpp"

namespace qmc {

enum class Truth { True, False, Unknown };

inline const char* to_string(Truth t) {
  switch (t) {
    case Truth::True: return "true";
    case Truth::False: return "false";
    case Truth::Unknown: return "unknown";
  }
  return "?";
}

struct CheckOptions {
  RangeMode mode = RangeMode::cheap;
  RangeOptions range;
  SpectralOptions spectral;
  Tolerances tol;
  int max_halvings = 8;
  // Shorten the exact prefix to the last step whose label leaves the
  // neighborhood of its limit state.
  bool trim_prefix = true;
  // Use the simulated truncation bound when it is smaller than the analytic one.
  bool use_simulated_bound = true;
};

struct Attempt {
  double epsilon;
  Truth value;
  long long k_eps;
};

struct Verdict {
  Truth value = Truth::Unknown;
  double epsilon = 0.0;
  long long period = 1;
  long long k_eps = 0;  // prefix length of the lasso actually used
  long long k_eps_analytic = 0;
  std::optional<long long> k_eps_simulated;
  std::string k_source;  // "analytic", "simulated" or "trimmed"
  std::vector<Letter> prefix;
  std::vector<SymbolSet> cycle;
  std::optional<LassoWord> counterexample;  // a word of the lasso violating phi
  std::optional<LassoWord> witness;         // a word of the lasso satisfying phi
  std::size_t nba_states = 0;
  std::vector<Attempt> history;
};

/// Holds everything about one chain that does not depend on the formula or
/// eps: the spectral decomposition, the limit cycle, and a lazily extended
/// record of per-step measurements.
class Checker {
 public:
  Checker(QMC g, std::vector<AtomicProp> aps, CheckOptions opts = {})
      : g_(std::move(g)), aps_(std::move(aps)), opts_(std::move(opts)) {
    require_valid(g_, opts_.tol);
    for (const auto& a : aps_) {
      if (a.op.dim() != g_.dim())
        throw DimensionError("proposition " + a.name + " does not match the state dimension");
      require_valid(a, ("proposition " + a.name).c_str(), opts_.tol);
    }
    sd_ = decompose(g_.transition, opts_.spectral);
    report_ = check_stability(sd_, g_.initial, opts_.spectral);
    if (report_.is_stable()) {
      states_ = qmc::stable_states(g_, sd_, report_);
      rho_ = g_.initial.matrix();
    }
  }

  const QMC& qmc() const { return g_; }
  const std::vector<AtomicProp>& aps() const { return aps_; }
  const SpectralData& spectral() const { return sd_; }
  const StabilityReport& stability() const { return report_; }
  const std::vector<DensityMatrix>& stable_states() const { return states_; }
  const CheckOptions& options() const { return opts_; }
  long long period() const { return report_.period.value_or(0); }

  void require_stable() const {
    if (!report_.is_stable())
      throw StabilityError("chain is not known to be periodically stable: " + report_.witness);
  }

  /// tr(M_a rho_n) for every proposition, in declaration order.
  const std::vector<double>& probabilities(long long n) {
    extend(n);
    return probs_[static_cast<std::size_t>(n)];
  }

  /// ||rho_n - eta_{n mod p}||.
  double distance(long long n) {
    extend(n);
    return dist_[static_cast<std::size_t>(n)];
  }

  Letter label_at(long long n, const std::set<std::string>& universe) {
    const auto& p = probabilities(n);
    Letter l;
    for (std::size_t i = 0; i < aps_.size(); ++i)
      if (universe.count(aps_[i].name) && aps_[i].interval.contains(p[i])) l.insert(aps_[i].name);
    return l;
  }

  /// Smallest n <= n_max after which the distance stays below
  /// safety_margin * eps for confirm_cycles periods.
  std::optional<long long> simulated_bound(double eps, long long n_max) {
    require_stable();
    const long long window = period() * std::max(1, opts_.spectral.confirm_cycles);
    const double limit = eps * opts_.spectral.safety_margin;
    long long run = 0;
    for (long long m = 0; m <= n_max + window; ++m) {
      run = distance(m) < limit ? run + 1 : 0;
      if (run == window) {
        const long long n = m - window + 1;
        return n <= n_max ? std::optional<long long>(n) : std::nullopt;
      }
    }
    return std::nullopt;
  }

  Verdict check(const FormulaPtr& phi, double eps) {
    require_stable();
    if (!(eps > 0.0)) throw Error("check: epsilon must be positive");
    for (const auto& name : aps_of(phi))
      if (!index_of(name)) throw Error("check: formula uses undeclared proposition " + name);

    Verdict v;
    v.epsilon = eps;
    v.period = period();
    const long long p = v.period;

    // Only the propositions that occur in phi matter for its language.
    std::vector<AtomicProp> used;
    const std::set<std::string> universe = aps_of(phi);
    for (const auto& a : aps_)
      if (universe.count(a.name)) used.push_back(a);

    v.k_eps_analytic = truncation_bound(sd_, report_, eps);
    long long k = v.k_eps_analytic;
    v.k_source = "analytic";
    if (opts_.use_simulated_bound) {
      v.k_eps_simulated = simulated_bound(eps, v.k_eps_analytic);
      if (v.k_eps_simulated && *v.k_eps_simulated < k) {
        k = *v.k_eps_simulated;
        v.k_source = "simulated";
      }
    }

    std::vector<SymbolSet> hoods;
    for (const auto& eta : states_) hoods.push_back(neighborhood(eta, eps, used, opts_.mode, opts_.range));

    if (opts_.trim_prefix) {
      long long last_out = -1;
      for (long long n = k - 1; n >= 0; --n)
        if (!hoods[static_cast<std::size_t>(n % p)].denotes(label_at(n, universe))) {
          last_out = n;
          break;
        }
      if (last_out + 1 < k) {
        k = last_out + 1;
        v.k_source = "trimmed";
      }
    }
    v.k_eps = k;

    LassoLanguage lang;
    lang.universe = universe;
    for (long long n = 0; n < k; ++n) lang.prefix.push_back(label_at(n, universe));
    for (long long j = 0; j < p; ++j) lang.cycle.push_back(hoods[static_cast<std::size_t>((k + j) % p)]);
    v.prefix = lang.prefix;
    v.cycle = lang.cycle;

    const NBA ag = lasso_to_nba(lang);
    const NBA pos = ltl_to_nba(phi);
    const NBA neg = ltl_to_nba(f::neg(phi));
    v.nba_states = static_cast<std::size_t>(pos.num_states + neg.num_states);
    EmptinessResult violating = product_empty(ag, neg);
    if (violating.empty) {
      v.value = Truth::True;
    } else {
      v.counterexample = violating.witness;
      EmptinessResult satisfying = product_empty(ag, pos);
      if (satisfying.empty) {
        v.value = Truth::False;
      } else {
        v.value = Truth::Unknown;
        v.witness = satisfying.witness;
      }
    }
    v.history.push_back({eps, v.value, v.k_eps});
    return v;
  }

  /// Halves eps until the answer is definite or max_halvings is used up.
  Verdict check_refined(const FormulaPtr& phi, double eps0, int max_halvings) {
    std::vector<Attempt> history;
    double eps = eps0;
    for (int i = 0;; ++i) {
      Verdict v = check(phi, eps);
      history.push_back(v.history.back());
      if (v.value != Truth::Unknown || i >= max_halvings) {
        v.history = std::move(history);
        return v;
      }
      eps /= 2.0;
    }
  }

  Verdict check_refined(const FormulaPtr& phi, double eps0) {
    return check_refined(phi, eps0, opts_.max_halvings);
  }

 private:
  std::optional<std::size_t> index_of(const std::string& name) const {
    for (std::size_t i = 0; i < aps_.size(); ++i)
      if (aps_[i].name == name) return i;
    return std::nullopt;
  }

  void extend(long long n) {
    require_stable();
    const long long p = period();
    while (static_cast<long long>(probs_.size()) <= n) {
      const long long m = static_cast<long long>(probs_.size());
      std::vector<double> row;
      row.reserve(aps_.size());
      for (const auto& a : aps_) row.push_back(measure(rho_, a.op.matrix(), opts_.tol.trace));
      probs_.push_back(std::move(row));
      dist_.push_back(hs_norm(rho_ - states_[static_cast<std::size_t>(m % p)].matrix()));
      rho_ = apply_to_operator(g_.transition, rho_);
    }
  }

  QMC g_;
  std::vector<AtomicProp> aps_;
  CheckOptions opts_;
  SpectralData sd_;
  StabilityReport report_;
  std::vector<DensityMatrix> states_;
  Matrix rho_;
  std::vector<std::vector<double>> probs_;
  std::vector<double> dist_;
};

inline Verdict model_check(const QMC& g, const std::vector<AtomicProp>& aps, const FormulaPtr& phi,
                           double eps, const CheckOptions& opts = {}) {
  Checker c(g, aps, opts);
  return c.check(phi, eps);
}

inline Verdict model_check_refined(const QMC& g, const std::vector<AtomicProp>& aps,
                                   const FormulaPtr& phi, double eps0, int max_halvings,
                                   const CheckOptions& opts = {}) {
  Checker c(g, aps, opts);
  return c.check_refined(phi, eps0, max_halvings);
}

/// [rho_0, E(rho_0), ..., E^{n-1}(rho_0)].
inline std::vector<DensityMatrix> trajectory(const QMC& g, long long n) {
  std::vector<DensityMatrix> out;
  if (n <= 0) return out;
  out.reserve(static_cast<std::size_t>(n));
  Matrix rho = g.initial.matrix();
  for (long long i = 0; i < n; ++i) {
    out.emplace_back(rho);
    if (i + 1 < n) rho = apply_to_operator(g.transition, rho);
  }
  return out;
}

}  // namespace qmc
