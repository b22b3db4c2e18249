#pragma once

// Measurement-based atomic propositions, the formula AST with its ASCII
// parser, state labelling, and a direct evaluator on ultimately periodic words.
//
// Concrete syntax, loosest binding first:
//   a -> b        (right-associative)
//   a | b
//   a & b
//   a U b         (right-associative)
//   !a  X a  F a  G a
//   true  false  ap(name)  ( ... )

#include <algorithm>
#include <cmath>
#include <cctype>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "qmc/linalg.hpp"

namespace qmc {

struct ProbInterval {
  double lo = 0.0, hi = 1.0;
  bool lo_closed = true, hi_closed = true;

  static ProbInterval closed(double lo, double hi) { return {lo, hi, true, true}; }
  static ProbInterval open(double lo, double hi) { return {lo, hi, false, false}; }
  static ProbInterval closed_open(double lo, double hi) { return {lo, hi, true, false}; }
  static ProbInterval open_closed(double lo, double hi) { return {lo, hi, false, true}; }

  bool valid() const {
    if (!(lo >= 0.0 && hi <= 1.0 && lo <= hi)) return false;
    return lo < hi || (lo_closed && hi_closed);
  }

  bool contains(double x) const {
    const bool above = lo_closed ? x >= lo : x > lo;
    const bool below = hi_closed ? x <= hi : x < hi;
    return above && below;
  }

  std::string str() const {
    std::ostringstream os;
    os.precision(10);
    os << (lo_closed ? '[' : '(') << lo << ", " << hi << (hi_closed ? ']' : ')');
    return os.str();
  }
};

struct AtomicProp {
  std::string name;
  MeasurementOperator op;
  ProbInterval interval;
};

using Letter = std::set<std::string>;

inline ValidationReport validate(const AtomicProp& a, const Tolerances& tol = {}) {
  ValidationReport r = validate(a.op, tol);
  if (!a.interval.valid())
    r.violations.push_back({"interval", 0.0, a.name + " has malformed interval " + a.interval.str()});
  return r;
}

/// tr(M rho), snapped to 0 or 1 when within tol_trace of either.
inline double measure(const Matrix& rho, const Matrix& m, double tol_trace = 1e-9) {
  if (rho.rows() != m.rows() || rho.cols() != m.cols()) {
    std::ostringstream os;
    os << "measure: state is " << rho.rows() << "x" << rho.cols() << " but operator is " << m.rows()
       << "x" << m.cols();
    throw DimensionError(os.str());
  }
  double p = trace_product(m, rho);
  if (std::abs(p) <= tol_trace) p = 0.0;
  if (std::abs(p - 1.0) <= tol_trace) p = 1.0;
  return p;
}

inline bool eval_ap(const DensityMatrix& rho, const AtomicProp& a, double tol_trace = 1e-9) {
  return a.interval.contains(measure(rho.matrix(), a.op.matrix(), tol_trace));
}

inline Letter label(const DensityMatrix& rho, const std::vector<AtomicProp>& aps,
                    double tol_trace = 1e-9) {
  Letter out;
  for (const auto& a : aps)
    if (eval_ap(rho, a, tol_trace)) out.insert(a.name);
  return out;
}

// ---------------------------------------------------------------------------
// Formulas
// ---------------------------------------------------------------------------

enum class Op { True, False, Ap, Not, And, Or, Implies, Next, Until, Release, Eventually, Always };

struct Formula;
using FormulaPtr = std::shared_ptr<const Formula>;

struct Formula {
  Op op;
  std::string ap;  // Op::Ap only
  FormulaPtr lhs, rhs;
};

namespace f {
inline FormulaPtr make(Op op, FormulaPtr a = nullptr, FormulaPtr b = nullptr) {
  return std::make_shared<const Formula>(Formula{op, {}, std::move(a), std::move(b)});
}
inline FormulaPtr tt() { return make(Op::True); }
inline FormulaPtr ff() { return make(Op::False); }
inline FormulaPtr ap(std::string name) {
  return std::make_shared<const Formula>(Formula{Op::Ap, std::move(name), nullptr, nullptr});
}
inline FormulaPtr neg(FormulaPtr a) { return make(Op::Not, std::move(a)); }
inline FormulaPtr conj(FormulaPtr a, FormulaPtr b) { return make(Op::And, std::move(a), std::move(b)); }
inline FormulaPtr disj(FormulaPtr a, FormulaPtr b) { return make(Op::Or, std::move(a), std::move(b)); }
inline FormulaPtr implies(FormulaPtr a, FormulaPtr b) {
  return make(Op::Implies, std::move(a), std::move(b));
}
inline FormulaPtr next(FormulaPtr a) { return make(Op::Next, std::move(a)); }
inline FormulaPtr until(FormulaPtr a, FormulaPtr b) { return make(Op::Until, std::move(a), std::move(b)); }
inline FormulaPtr release(FormulaPtr a, FormulaPtr b) {
  return make(Op::Release, std::move(a), std::move(b));
}
inline FormulaPtr eventually(FormulaPtr a) { return make(Op::Eventually, std::move(a)); }
inline FormulaPtr always(FormulaPtr a) { return make(Op::Always, std::move(a)); }
}  // namespace f

inline std::string to_string(const FormulaPtr& p) {
  switch (p->op) {
    case Op::True: return "true";
    case Op::False: return "false";
    case Op::Ap: return "ap(" + p->ap + ")";
    case Op::Not: return "!" + to_string(p->lhs);
    case Op::Next: return "X " + to_string(p->lhs);
    case Op::Eventually: return "F " + to_string(p->lhs);
    case Op::Always: return "G " + to_string(p->lhs);
    case Op::And: return "(" + to_string(p->lhs) + " & " + to_string(p->rhs) + ")";
    case Op::Or: return "(" + to_string(p->lhs) + " | " + to_string(p->rhs) + ")";
    case Op::Implies: return "(" + to_string(p->lhs) + " -> " + to_string(p->rhs) + ")";
    case Op::Until: return "(" + to_string(p->lhs) + " U " + to_string(p->rhs) + ")";
    case Op::Release: return "(" + to_string(p->lhs) + " R " + to_string(p->rhs) + ")";
  }
  return "?";
}

inline void collect_aps(const FormulaPtr& p, std::set<std::string>& out) {
  if (!p) return;
  if (p->op == Op::Ap) out.insert(p->ap);
  collect_aps(p->lhs, out);
  collect_aps(p->rhs, out);
}

inline std::set<std::string> aps_of(const FormulaPtr& p) {
  std::set<std::string> out;
  collect_aps(p, out);
  return out;
}

/// Rewrites into the core grammar: true, ap, !, |, X, U.
inline FormulaPtr desugar(const FormulaPtr& p) {
  using namespace f;
  switch (p->op) {
    case Op::True:
    case Op::Ap: return p;
    case Op::False: return neg(tt());
    case Op::Not: return neg(desugar(p->lhs));
    case Op::Or: return disj(desugar(p->lhs), desugar(p->rhs));
    case Op::And: return neg(disj(neg(desugar(p->lhs)), neg(desugar(p->rhs))));
    case Op::Implies: return disj(neg(desugar(p->lhs)), desugar(p->rhs));
    case Op::Next: return next(desugar(p->lhs));
    case Op::Until: return until(desugar(p->lhs), desugar(p->rhs));
    case Op::Release: return neg(until(neg(desugar(p->lhs)), neg(desugar(p->rhs))));
    case Op::Eventually: return until(tt(), desugar(p->lhs));
    case Op::Always: return neg(until(tt(), neg(desugar(p->lhs))));
  }
  return p;
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

class ParseError : public Error {
 public:
  ParseError(const std::string& msg, std::size_t pos)
      : Error("parse error at " + std::to_string(pos) + ": " + msg), pos_(pos) {}
  std::size_t position() const { return pos_; }

 private:
  std::size_t pos_;
};

namespace detail {

class Parser {
 public:
  Parser(std::string_view text, const std::set<std::string>* declared)
      : s_(text), declared_(declared) {}

  FormulaPtr run() {
    FormulaPtr out = implication();
    skip();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return out;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, i_); }

  void skip() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }

  static bool ident_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
  }

  // Peeks a word token; keywords are whole identifiers.
  std::string_view word() {
    skip();
    std::size_t j = i_;
    while (j < s_.size() && ident_char(s_[j])) ++j;
    return s_.substr(i_, j - i_);
  }

  bool accept_word(std::string_view w) {
    if (word() == w) {
      i_ += w.size();
      return true;
    }
    return false;
  }

  bool accept(std::string_view sym) {
    skip();
    if (s_.substr(i_, sym.size()) == sym) {
      i_ += sym.size();
      return true;
    }
    return false;
  }

  void expect(std::string_view sym) {
    if (!accept(sym)) fail("expected '" + std::string(sym) + "'");
  }

  FormulaPtr implication() {
    FormulaPtr lhs = disjunction();
    if (accept("->")) return f::implies(lhs, implication());
    return lhs;
  }

  FormulaPtr disjunction() {
    FormulaPtr lhs = conjunction();
    while (accept("|")) lhs = f::disj(lhs, conjunction());
    return lhs;
  }

  FormulaPtr conjunction() {
    FormulaPtr lhs = until();
    while (accept("&")) lhs = f::conj(lhs, until());
    return lhs;
  }

  FormulaPtr until() {
    FormulaPtr lhs = unary();
    if (accept_word("U")) return f::until(lhs, until());
    if (accept_word("R")) return f::release(lhs, until());
    return lhs;
  }

  FormulaPtr unary() {
    if (accept("!")) return f::neg(unary());
    if (accept_word("X")) return f::next(unary());
    if (accept_word("F")) return f::eventually(unary());
    if (accept_word("G")) return f::always(unary());
    return primary();
  }

  FormulaPtr primary() {
    skip();
    if (i_ >= s_.size()) fail("unexpected end of input");
    if (accept("(")) {
      FormulaPtr inner = implication();
      expect(")");
      return inner;
    }
    if (accept_word("true")) return f::tt();
    if (accept_word("false")) return f::ff();
    if (accept_word("ap")) {
      expect("(");
      skip();
      const std::size_t start = i_;
      std::string_view name = word();
      if (name.empty()) fail("expected a proposition name");
      i_ += name.size();
      if (declared_ && !declared_->count(std::string(name))) {
        i_ = start;
        fail("unknown atomic proposition '" + std::string(name) + "'");
      }
      expect(")");
      return f::ap(std::string(name));
    }
    std::string_view w = word();
    if (!w.empty()) fail("unexpected token '" + std::string(w) + "'");
    fail("unexpected '" + std::string(1, s_[i_]) + "'");
  }

  std::string_view s_;
  const std::set<std::string>* declared_;
  std::size_t i_ = 0;
};

}  // namespace detail

inline FormulaPtr parse(std::string_view text, const std::set<std::string>& declared) {
  return detail::Parser(text, &declared).run();
}

inline FormulaPtr parse(std::string_view text, const std::vector<AtomicProp>& declared) {
  std::set<std::string> names;
  for (const auto& a : declared) names.insert(a.name);
  return parse(text, names);
}

/// Parses without checking proposition names.
inline FormulaPtr parse_unchecked(std::string_view text) {
  return detail::Parser(text, nullptr).run();
}

// ---------------------------------------------------------------------------
// Ultimately periodic words
// ---------------------------------------------------------------------------

/// The infinite word stem . loop^omega.
struct LassoWord {
  std::vector<Letter> stem;
  std::vector<Letter> loop;

  const Letter& at(std::size_t i) const {
    if (i < stem.size()) return stem[i];
    return loop[(i - stem.size()) % loop.size()];
  }
};

namespace detail {

inline std::vector<char> sat_positions(const FormulaPtr& p, const LassoWord& w) {
  const std::size_t n = w.stem.size() + w.loop.size();
  auto succ = [&](std::size_t i) { return i + 1 < n ? i + 1 : w.stem.size(); };
  std::vector<char> out(n, 0);
  switch (p->op) {
    case Op::True: std::fill(out.begin(), out.end(), 1); break;
    case Op::False: break;
    case Op::Ap:
      for (std::size_t i = 0; i < n; ++i) out[i] = w.at(i).count(p->ap) ? 1 : 0;
      break;
    case Op::Not: {
      auto a = sat_positions(p->lhs, w);
      for (std::size_t i = 0; i < n; ++i) out[i] = !a[i];
      break;
    }
    case Op::And:
    case Op::Or:
    case Op::Implies: {
      auto a = sat_positions(p->lhs, w), b = sat_positions(p->rhs, w);
      for (std::size_t i = 0; i < n; ++i)
        out[i] = p->op == Op::And ? (a[i] && b[i]) : p->op == Op::Or ? (a[i] || b[i]) : (!a[i] || b[i]);
      break;
    }
    case Op::Next: {
      auto a = sat_positions(p->lhs, w);
      for (std::size_t i = 0; i < n; ++i) out[i] = a[succ(i)];
      break;
    }
    case Op::Eventually:
    case Op::Until: {
      // Least fixpoint of  x = b | (a & X x).
      auto b = sat_positions(p->op == Op::Until ? p->rhs : p->lhs, w);
      std::vector<char> a(n, 1);
      if (p->op == Op::Until) a = sat_positions(p->lhs, w);
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t k = n; k-- > 0;) {
          const char v = b[k] || (a[k] && out[succ(k)]);
          if (v != out[k]) out[k] = v, changed = true;
        }
      }
      break;
    }
    case Op::Always:
    case Op::Release: {
      // Greatest fixpoint of  x = b & (a | X x).
      auto b = sat_positions(p->op == Op::Release ? p->rhs : p->lhs, w);
      std::vector<char> a(n, 0);
      if (p->op == Op::Release) a = sat_positions(p->lhs, w);
      std::fill(out.begin(), out.end(), 1);
      for (bool changed = true; changed;) {
        changed = false;
        for (std::size_t k = n; k-- > 0;) {
          const char v = b[k] && (a[k] || out[succ(k)]);
          if (v != out[k]) out[k] = v, changed = true;
        }
      }
      break;
    }
  }
  return out;
}

}  // namespace detail

/// Whether the word stem . loop^omega satisfies the formula at position 0.
inline bool holds(const FormulaPtr& p, const LassoWord& w) {
  if (w.loop.empty()) throw Error("holds: loop must be nonempty");
  return detail::sat_positions(p, w)[0] != 0;
}

}  // namespace qmc
