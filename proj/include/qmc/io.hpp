#pragma once

// JSON model files and report serialization.
//
// Model file:
//   {
//     "dimension": d,
//     "kraus": [ M, ... ],
//     "initial_state": M,
//     "atomic_props": { "name": { "operator": M,
//                                 "interval": { "lo": x, "hi": y,
//                                               "lo_closed": b, "hi_closed": b } } }
//   }
// where a matrix M is a list of rows and every entry is [re, im]. Plain
// numbers are accepted as real entries on input.

#include <algorithm>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qmc/checker.hpp"
#include "qmc/linalg.hpp"
#include "qmc/mltl.hpp"
#include "qmc/spectral.hpp"

namespace qmc {

using json = nlohmann::json;

class FormatError : public Error {
 public:
  using Error::Error;
};

struct ModelFile {
  QMC qmc;
  std::vector<AtomicProp> aps;
};

inline json complex_to_json(Complex z) { return json::array({z.real(), z.imag()}); }

inline Complex complex_from_json(const json& j, const std::string& where) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  throw FormatError(where + ": expected [re, im]");
}

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(complex_to_json(m(i, j)));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, Eigen::Index d, const std::string& where) {
  if (!j.is_array() || static_cast<Eigen::Index>(j.size()) != d)
    throw FormatError(where + ": expected " + std::to_string(d) + " rows");
  Matrix m(d, d);
  for (Eigen::Index i = 0; i < d; ++i) {
    const json& row = j[static_cast<std::size_t>(i)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != d)
      throw FormatError(where + ": row " + std::to_string(i) + " must have " + std::to_string(d) +
                        " entries");
    for (Eigen::Index k = 0; k < d; ++k)
      m(i, k) = complex_from_json(row[static_cast<std::size_t>(k)],
                                  where + "[" + std::to_string(i) + "][" + std::to_string(k) + "]");
  }
  if (!all_finite(m)) throw FormatError(where + ": non-finite entry");
  return m;
}

inline json interval_to_json(const ProbInterval& iv) {
  return {{"lo", iv.lo}, {"hi", iv.hi}, {"lo_closed", iv.lo_closed}, {"hi_closed", iv.hi_closed}};
}

inline ProbInterval interval_from_json(const json& j, const std::string& where) {
  try {
    ProbInterval iv{j.at("lo").get<double>(), j.at("hi").get<double>(),
                    j.value("lo_closed", true), j.value("hi_closed", true)};
    if (!iv.valid()) throw FormatError(where + ": malformed interval " + iv.str());
    return iv;
  } catch (const json::exception& e) {
    throw FormatError(where + ": " + e.what());
  }
}

inline json model_to_json(const QMC& g, const std::vector<AtomicProp>& aps) {
  json j;
  j["dimension"] = g.dim();
  j["kraus"] = json::array();
  for (const auto& k : g.transition.kraus()) j["kraus"].push_back(matrix_to_json(k));
  j["initial_state"] = matrix_to_json(g.initial.matrix());
  j["atomic_props"] = json::object();
  for (const auto& a : aps)
    j["atomic_props"][a.name] = {{"operator", matrix_to_json(a.op.matrix())},
                                 {"interval", interval_to_json(a.interval)}};
  return j;
}

/// Parses and validates a model. Proposition order follows the file's key order
/// as sorted by the JSON library (lexicographic).
inline ModelFile model_from_json(const json& j, const Tolerances& tol = {}) {
  ModelFile mf;
  try {
    const auto d = static_cast<Eigen::Index>(j.at("dimension").get<long long>());
    if (d < 1) throw FormatError("dimension must be positive");
    std::vector<Matrix> kraus;
    const json& kj = j.at("kraus");
    if (!kj.is_array() || kj.empty()) throw FormatError("kraus must be a nonempty list");
    for (std::size_t i = 0; i < kj.size(); ++i)
      kraus.push_back(matrix_from_json(kj[i], d, "kraus[" + std::to_string(i) + "]"));
    DensityMatrix rho0(matrix_from_json(j.at("initial_state"), d, "initial_state"));
    mf.qmc = QMC(SuperOperator(std::move(kraus)), std::move(rho0));
    if (j.contains("atomic_props")) {
      for (const auto& [name, aj] : j.at("atomic_props").items()) {
        AtomicProp a;
        a.name = name;
        a.op = MeasurementOperator(matrix_from_json(aj.at("operator"), d, name + ".operator"));
        a.interval = interval_from_json(aj.at("interval"), name + ".interval");
        mf.aps.push_back(std::move(a));
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model file: ") + e.what());
  }
  require_valid(mf.qmc, tol);
  for (const auto& a : mf.aps) require_valid(a, ("proposition " + a.name).c_str(), tol);
  return mf;
}

inline ModelFile load_model(const std::string& path, const Tolerances& tol = {}) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw FormatError(path + ": " + e.what());
  }
  return model_from_json(j, tol);
}

inline void save_model(const std::string& path, const QMC& g, const std::vector<AtomicProp>& aps) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path);
  out << model_to_json(g, aps).dump(1) << "\n";
}

// ---------------------------------------------------------------------------
// Reports
// ---------------------------------------------------------------------------

inline json letter_to_json(const Letter& l) { return json(std::vector<std::string>(l.begin(), l.end())); }

inline json word_to_json(const LassoWord& w) {
  json stem = json::array(), loop = json::array();
  for (const auto& l : w.stem) stem.push_back(letter_to_json(l));
  for (const auto& l : w.loop) loop.push_back(letter_to_json(l));
  return {{"stem", stem}, {"loop", loop}};
}

inline json symbol_set_to_json(const SymbolSet& s) {
  json st = json::array();
  for (const auto& a : s.statuses)
    st.push_back({{"ap", a.ap}, {"status", to_string(a.status)}, {"lo", a.lo}, {"hi", a.hi}});
  return {{"base", letter_to_json(s.base)},
          {"ambiguous", std::vector<std::string>(s.ambiguous.begin(), s.ambiguous.end())},
          {"propositions", st}};
}

inline json verdict_to_json(const Verdict& v) {
  json j;
  j["verdict"] = to_string(v.value);
  j["epsilon"] = v.epsilon;
  j["period"] = v.period;
  j["k_eps"] = v.k_eps;
  j["k_eps_analytic"] = v.k_eps_analytic;
  j["k_eps_simulated"] = v.k_eps_simulated ? json(*v.k_eps_simulated) : json(nullptr);
  j["k_source"] = v.k_source;
  json cyc = json::array();
  for (const auto& s : v.cycle) cyc.push_back(symbol_set_to_json(s));
  j["cycle"] = cyc;
  json hist = json::array();
  for (const auto& a : v.history)
    hist.push_back({{"epsilon", a.epsilon}, {"verdict", to_string(a.value)}, {"k_eps", a.k_eps}});
  j["history"] = hist;
  if (v.value == Truth::False && v.counterexample) j["counterexample"] = word_to_json(*v.counterexample);
  return j;
}

inline json spectral_to_json(const SpectralData& sd, const StabilityReport& r) {
  json j;
  j["dimension"] = sd.dim;
  j["matrix_size"] = sd.n();
  j["spectral_radius"] = sd.spectral_radius;
  j["peripheral_count"] = sd.n_peripheral;
  j["contracting_count"] = sd.n_contracting;
  j["nilpotent_count"] = sd.n_nilpotent;
  j["omega"] = sd.omega;
  j["d_omega"] = sd.d_omega;
  j["nilpotency_index"] = sd.nilpotency_index;
  j["cond_number"] = sd.cond_number;
  j["decay_constant"] = sd.decay_constant;
  j["residual"] = sd.residual;
  json periph = json::array();
  for (const auto& c : sd.clusters) {
    if (c.group != Group::peripheral) continue;
    periph.push_back({{"eigenvalue", complex_to_json(c.center)},
                      {"phase", phase_of(c.center)},
                      {"multiplicity", c.size()}});
  }
  j["peripheral"] = periph;
  json phases = json::array();
  for (const auto& ph : r.contributing_phases) {
    json e = {{"eigenvalue", complex_to_json(ph.eigenvalue)},
              {"phase", ph.phase},
              {"multiplicity", ph.multiplicity},
              {"weight", ph.weight}};
    e["rational"] = ph.rational ? json{{"p", ph.rational->p}, {"q", ph.rational->q}} : json(nullptr);
    phases.push_back(e);
  }
  json st;
  st["stable"] = r.is_stable() ? json(true) : json("undetermined");
  st["period"] = r.period ? json(*r.period) : json(nullptr);
  st["contributing_phases"] = phases;
  if (!r.witness.empty()) st["witness"] = r.witness;
  j["stability"] = st;
  std::vector<double> moduli;
  for (const auto& l : sd.eigenvalues) moduli.push_back(std::abs(l));
  std::sort(moduli.begin(), moduli.end(), std::greater<>());
  j["moduli"] = moduli;
  return j;
}

}  // namespace qmc
