// qmc: command-line front end for the QMC model checker.
//
// Exit codes: 0 true, 1 false, 2 unknown, 3 usage or formula error,
// 4 model load or validation error, 5 stability error, 6 other failure.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "qmc/automata.hpp"
#include "qmc/checker.hpp"
#include "qmc/io.hpp"
#include "qmc/models.hpp"
#include "qmc/spectral.hpp"

namespace {

enum Exit { kTrue = 0, kFalse = 1, kUnknown = 2, kUsage = 3, kLoad = 4, kStability = 5, kOther = 6 };

struct UsageError : qmc::Error {
  using qmc::Error::Error;
};

struct ModelArgs {
  std::string file;
  std::string builtin;
  int d = 20;
  int start = 1;
  std::string dir = "R";
  double psi = 1.0 / 3.0;
};

struct TolArgs {
  std::optional<double> unit, cluster, phase, coeff, recon, zero, trace, herm, psd, kraus;
  std::optional<int> qmax;
};

void add_model_options(CLI::App* app, ModelArgs& m) {
  app->add_option("--model", m.file, "JSON model file");
  app->add_option("--builtin", m.builtin, "builtin model: qwalk, cwalk, phase, swap")
      ->check(CLI::IsMember({"qwalk", "cwalk", "phase", "swap"}));
  app->add_option("--d", m.d, "walk size (positions s_0 ... s_d)");
  app->add_option("--start", m.start, "walk start position");
  app->add_option("--dir", m.dir, "walk start direction")->check(CLI::IsMember({"L", "R"}));
  app->add_option("--psi", m.psi, "phase of the rotation builtin");
}

void add_tol_options(CLI::App* app, TolArgs& t) {
  app->add_option("--qmax", t.qmax, "largest denominator for rational phases");
  app->add_option("--tol-unit", t.unit, "peripheral modulus tolerance");
  app->add_option("--tol-cluster", t.cluster, "eigenvalue clustering tolerance");
  app->add_option("--tol-phase", t.phase, "rational phase tolerance");
  app->add_option("--tol-coeff", t.coeff, "contribution weight threshold");
  app->add_option("--tol-recon", t.recon, "decomposition residual tolerance");
  app->add_option("--tol-zero", t.zero, "nilpotent eigenvalue threshold");
  app->add_option("--tol-trace", t.trace, "trace and probability tolerance");
  app->add_option("--tol-herm", t.herm, "hermiticity tolerance");
  app->add_option("--tol-psd", t.psd, "positivity tolerance");
  app->add_option("--tol-kraus", t.kraus, "Kraus completeness tolerance");
}

qmc::CheckOptions make_options(const TolArgs& t) {
  qmc::CheckOptions o;
  if (t.qmax) o.spectral.q_max = *t.qmax;
  if (t.unit) o.spectral.tol_unit = *t.unit;
  if (t.cluster) o.spectral.tol_cluster = *t.cluster;
  if (t.phase) o.spectral.tol_phase = *t.phase;
  if (t.coeff) o.spectral.tol_coeff = *t.coeff;
  if (t.recon) o.spectral.tol_recon = *t.recon;
  if (t.zero) o.spectral.tol_zero = *t.zero;
  if (t.trace) o.tol.trace = o.range.tol_trace = *t.trace;
  if (t.herm) o.tol.herm = *t.herm;
  if (t.psd) o.tol.psd = *t.psd;
  if (t.kraus) o.tol.kraus = *t.kraus;
  return o;
}

// Propositions of the rotation builtin, measured against |+><+| and |0><0|.
std::vector<qmc::AtomicProp> phase_aps() {
  qmc::Matrix plus = qmc::Matrix::Constant(2, 2, 0.5);
  qmc::Matrix zero = qmc::Matrix::Zero(2, 2);
  zero(0, 0) = 1.0;
  return {{"plus", qmc::MeasurementOperator(plus), qmc::ProbInterval::closed(0.9, 1.0)},
          {"zero", qmc::MeasurementOperator(zero), qmc::ProbInterval::closed(0.4, 0.6)}};
}

// Two-state chain that swaps s0 and s1 every step, started in s0.
qmc::ModelFile swap_model() {
  Eigen::MatrixXd p(2, 2);
  p << 0, 1, 1, 0;
  qmc::ModelFile mf{qmc::classical_mc_to_qmc(p, {1.0, 0.0}), {}};
  for (int k = 0; k < 2; ++k) {
    qmc::Matrix m = qmc::Matrix::Zero(2, 2);
    m(k, k) = 1.0;
    mf.aps.push_back({"s" + std::to_string(k), qmc::MeasurementOperator(m), qmc::ProbInterval::open_closed(0.5, 1.0)});
  }
  return mf;
}

qmc::ModelFile load(const ModelArgs& m, const qmc::Tolerances& tol) {
  if (m.file.empty() == m.builtin.empty()) throw UsageError("give exactly one of --model and --builtin");
  if (!m.file.empty()) return qmc::load_model(m.file, tol);
  if (m.builtin == "phase") return {qmc::phase_rotation(m.psi), phase_aps()};
  if (m.builtin == "swap") return swap_model();
  qmc::WalkSpec spec;
  spec.d = m.d;
  spec.start = m.start;
  spec.direction = m.dir == "L" ? qmc::Coin::L : qmc::Coin::R;
  try {
    spec.check();
  } catch (const qmc::Error& e) {
    throw UsageError(e.what());
  }
  if (m.builtin == "qwalk") return {qmc::quantum_walk(spec), qmc::walk_aps(m.d)};
  return {qmc::classical_walk(spec), qmc::walk_aps(m.d, true)};
}

std::string letter_str(const qmc::Letter& l) {
  std::string s = "{";
  for (const auto& a : l) s += (s.size() > 1 ? "," : "") + a;
  return s + "}";
}

std::string word_str(const std::vector<qmc::Letter>& w) {
  std::string s;
  for (const auto& l : w) s += (s.empty() ? "" : " ") + letter_str(l);
  return s.empty() ? "(empty)" : s;
}

void write_file(const std::filesystem::path& p, const std::string& text) {
  std::ofstream out(p);
  if (!out) throw qmc::Error("cannot write " + p.string());
  out << text;
}

int run_check(const ModelArgs& ma, const TolArgs& ta, const std::string& formula, double eps, int halvings,
              const std::string& mode, bool as_json, const std::string& automata_dir) {
  qmc::CheckOptions opts = make_options(ta);
  opts.mode = mode == "refined" ? qmc::RangeMode::refined : qmc::RangeMode::cheap;
  if (!(eps > 0.0)) throw UsageError("--epsilon must be positive");
  if (halvings < 0) throw UsageError("--max-halvings must be nonnegative");
  qmc::ModelFile mf = load(ma, opts.tol);
  const qmc::FormulaPtr phi = qmc::parse(formula, mf.aps);
  qmc::Checker checker(std::move(mf.qmc), std::move(mf.aps), opts);
  checker.require_stable();
  const qmc::Verdict v = checker.check_refined(phi, eps, halvings);

  if (!automata_dir.empty()) {
    std::filesystem::create_directories(automata_dir);
    const std::filesystem::path dir(automata_dir);
    write_file(dir / "formula.hoa", qmc::to_hoa(qmc::ltl_to_nba(phi), qmc::to_string(phi)));
    write_file(dir / "negation.hoa",
               qmc::to_hoa(qmc::ltl_to_nba(qmc::f::neg(phi)), "!(" + qmc::to_string(phi) + ")"));
    qmc::LassoLanguage lang{v.prefix, v.cycle, qmc::aps_of(phi)};
    write_file(dir / "lasso.hoa", qmc::to_hoa(qmc::lasso_to_nba(lang), "lasso"));
  }

  if (as_json) {
    qmc::json j = qmc::verdict_to_json(v);
    j["formula"] = qmc::to_string(phi);
    j["neighborhood"] = qmc::to_string(opts.mode);
    std::cout << j.dump(2) << "\n";
  } else {
    std::cout << "formula: " << qmc::to_string(phi) << "\n";
    for (const auto& a : v.history)
      std::cout << "  eps=" << a.epsilon << " -> " << qmc::to_string(a.value) << " (K=" << a.k_eps << ")\n";
    std::cout << "verdict: " << qmc::to_string(v.value) << "\n"
              << "epsilon: " << v.epsilon << "\n"
              << "period: " << v.period << "\n"
              << "k_eps: " << v.k_eps << " (" << v.k_source << "; analytic " << v.k_eps_analytic;
    if (v.k_eps_simulated) std::cout << ", simulated " << *v.k_eps_simulated;
    std::cout << ")\n";
    if (v.value == qmc::Truth::False && v.counterexample) {
      std::cout << "counterexample stem: " << word_str(v.counterexample->stem) << "\n"
                << "counterexample loop: " << word_str(v.counterexample->loop) << "\n";
    }
  }
  switch (v.value) {
    case qmc::Truth::True: return kTrue;
    case qmc::Truth::False: return kFalse;
    case qmc::Truth::Unknown: return kUnknown;
  }
  return kOther;
}

int run_spectrum(const ModelArgs& ma, const TolArgs& ta, bool as_json) {
  const qmc::CheckOptions opts = make_options(ta);
  const qmc::ModelFile mf = load(ma, opts.tol);
  const qmc::SpectralData sd = qmc::decompose(mf.qmc.transition, opts.spectral);
  const qmc::StabilityReport r = qmc::check_stability(sd, mf.qmc.initial, opts.spectral);
  const qmc::json j = qmc::spectral_to_json(sd, r);
  if (as_json) {
    std::cout << j.dump(2) << "\n";
    return 0;
  }
  std::cout << std::setprecision(10);
  std::cout << "superoperator size: " << sd.n() << "\n"
            << "spectral radius: " << sd.spectral_radius << "\n"
            << "peripheral / contracting / nilpotent: " << sd.n_peripheral << " / " << sd.n_contracting
            << " / " << sd.n_nilpotent << "\n"
            << "omega: " << sd.omega << "  d_omega: " << sd.d_omega << "  nilpotency index: "
            << sd.nilpotency_index << "\n"
            << "condition number: " << sd.cond_number << "  decay constant: " << sd.decay_constant
            << "  residual: " << sd.residual << "\n";
  std::cout << "moduli:";
  for (const auto& m : j["moduli"]) std::cout << " " << m.get<double>();
  std::cout << "\nperipheral phases:\n";
  for (const auto& c : sd.clusters)
    if (c.group == qmc::Group::peripheral) {
      const double ph = qmc::phase_of(c.center);
      std::cout << "  " << ph << " x" << c.size();
      if (auto q = qmc::rationalize(ph, opts.spectral.q_max, opts.spectral.tol_phase))
        std::cout << "  ~ " << q->p << "/" << q->q;
      std::cout << "\n";
    }
  std::cout << "contributing phases:\n";
  for (const auto& ph : r.contributing_phases) {
    std::cout << "  " << ph.phase << " weight " << ph.weight;
    if (ph.rational) std::cout << "  ~ " << ph.rational->p << "/" << ph.rational->q;
    std::cout << "\n";
  }
  if (r.is_stable())
    std::cout << "stability: stable, period " << *r.period << "\n";
  else
    std::cout << "stability: undetermined (" << r.witness << ")\n";
  return 0;
}

int run_trajectory(const ModelArgs& ma, const TolArgs& ta, long long steps, std::vector<std::string> names,
                   bool as_json) {
  const qmc::CheckOptions opts = make_options(ta);
  if (steps < 0) throw UsageError("--steps must be nonnegative");
  const qmc::ModelFile mf = load(ma, opts.tol);
  std::vector<const qmc::AtomicProp*> sel;
  if (names.empty())
    for (const auto& a : mf.aps) sel.push_back(&a);
  for (const auto& n : names) {
    const qmc::AtomicProp* hit = nullptr;
    for (const auto& a : mf.aps)
      if (a.name == n) hit = &a;
    if (!hit) throw UsageError("unknown proposition " + n);
    sel.push_back(hit);
  }
  qmc::json rows = qmc::json::array();
  if (!as_json) {
    std::cout << "step";
    for (const auto* a : sel) std::cout << "," << a->name;
    std::cout << "\n" << std::setprecision(12);
  }
  qmc::Matrix rho = mf.qmc.initial.matrix();
  for (long long n = 0; n < steps; ++n) {
    std::vector<double> vals;
    for (const auto* a : sel) vals.push_back(qmc::measure(rho, a->op.matrix(), opts.tol.trace));
    if (as_json) {
      qmc::json row = {{"step", n}};
      for (std::size_t i = 0; i < sel.size(); ++i) row[sel[i]->name] = vals[i];
      rows.push_back(row);
    } else {
      std::cout << n;
      for (double x : vals) std::cout << "," << x;
      std::cout << "\n";
    }
    if (n + 1 < steps) rho = qmc::apply_to_operator(mf.qmc.transition, rho);
  }
  if (as_json) std::cout << rows.dump(2) << "\n";
  return 0;
}

int run_export(const ModelArgs& ma, const TolArgs& ta, const std::string& out) {
  const qmc::CheckOptions opts = make_options(ta);
  const qmc::ModelFile mf = load(ma, opts.tol);
  if (out == "-")
    std::cout << qmc::model_to_json(mf.qmc, mf.aps).dump(1) << "\n";
  else
    qmc::save_model(out, mf.qmc, mf.aps);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate LTL model checking of quantum Markov chains"};
  app.require_subcommand(1);

  ModelArgs ma;
  TolArgs ta;
  bool as_json = false;

  auto* check = app.add_subcommand("check", "check a formula against the chain");
  std::string formula, mode = "cheap", automata_dir;
  double eps = 0.5;
  int halvings = 8;
  add_model_options(check, ma);
  add_tol_options(check, ta);
  check->add_option("--formula", formula, "LTL formula over the declared propositions")->required();
  check->add_option("--epsilon", eps, "initial neighborhood radius");
  check->add_option("--max-halvings", halvings, "halve epsilon at most this often while unknown (0: single shot)");
  check->add_option("--neighborhood", mode, "range bound for neighborhoods")
      ->check(CLI::IsMember({"cheap", "refined"}));
  check->add_flag("--json", as_json, "print a JSON report");
  check->add_option("--export-automata", automata_dir, "write formula, negation and lasso automata (HOA)");

  auto* spectrum = app.add_subcommand("spectrum", "spectral summary and periodic stability");
  add_model_options(spectrum, ma);
  add_tol_options(spectrum, ta);
  spectrum->add_flag("--json", as_json, "print a JSON report");

  auto* traj = app.add_subcommand("trajectory", "proposition probabilities along the trajectory");
  long long steps = 100;
  std::vector<std::string> names;
  add_model_options(traj, ma);
  add_tol_options(traj, ta);
  traj->add_option("--steps", steps, "number of rows");
  traj->add_option("--ap", names, "propositions to measure (default: all)");
  traj->add_flag("--json", as_json, "print JSON rows instead of CSV");

  auto* exp = app.add_subcommand("export-model", "write the model as a JSON file");
  std::string out = "-";
  add_model_options(exp, ma);
  add_tol_options(exp, ta);
  exp->add_option("--output,-o", out, "output path, - for stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  try {
    if (*check) return run_check(ma, ta, formula, eps, halvings, mode, as_json, automata_dir);
    if (*spectrum) return run_spectrum(ma, ta, as_json);
    if (*traj) return run_trajectory(ma, ta, steps, names, as_json);
    if (*exp) return run_export(ma, ta, out);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUsage;
  } catch (const qmc::ParseError& e) {
    std::cerr << "formula error: " << e.what() << "\n";
    return kUsage;
  } catch (const qmc::StabilityError& e) {
    std::cerr << "stability error: " << e.what() << "\n";
    return kStability;
  } catch (const qmc::FormatError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kLoad;
  } catch (const qmc::ValidationError& e) {
    std::cerr << "validation error: " << e.what() << "\n";
    return kLoad;
  } catch (const qmc::DimensionError& e) {
    std::cerr << "model error: " << e.what() << "\n";
    return kLoad;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kOther;
  }
  return kOther;
}
