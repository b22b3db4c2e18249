#pragma once

// Buchi automata over the alphabet 2^AP with conjunctive guards.
//
// ltl_to_nba is the on-the-fly tableau construction of Gerth, Peled, Vardi
// and Wolper on negation normal form, followed by counter degeneralization.
// product_empty searches the synchronous product for a reachable SCC that
// meets both acceptance sets (Tarjan), and returns a stem/loop witness.

#include <algorithm>
#include <fstream>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "qmc/mltl.hpp"
#include "qmc/neighborhood.hpp"

namespace qmc {

/// Conjunction of literals: proposition name -> required truth value.
using Guard = std::map<std::string, bool>;

inline bool satisfies(const Letter& letter, const Guard& g) {
  for (const auto& [a, v] : g)
    if ((letter.count(a) > 0) != v) return false;
  return true;
}

inline std::optional<Guard> meet(const Guard& a, const Guard& b) {
  Guard out = a;
  for (const auto& [k, v] : b) {
    auto [it, inserted] = out.emplace(k, v);
    if (!inserted && it->second != v) return std::nullopt;
  }
  return out;
}

/// The smallest letter satisfying a guard.
inline Letter witness_letter(const Guard& g) {
  Letter l;
  for (const auto& [a, v] : g)
    if (v) l.insert(a);
  return l;
}

inline std::string guard_string(const Guard& g) {
  if (g.empty()) return "true";
  std::string s;
  for (const auto& [a, v] : g) {
    if (!s.empty()) s += " & ";
    s += (v ? "" : "!") + a;
  }
  return s;
}

struct Transition {
  int to;
  Guard guard;
};

struct NBA {
  int num_states = 0;
  std::vector<int> initial;
  std::vector<std::vector<Transition>> out;
  std::vector<char> accepting;
  std::set<std::string> aps;

  int add_state(bool acc = false) {
    out.emplace_back();
    accepting.push_back(acc ? 1 : 0);
    return num_states++;
  }

  std::size_t num_transitions() const {
    std::size_t n = 0;
    for (const auto& ts : out) n += ts.size();
    return n;
  }
};

// ---------------------------------------------------------------------------
// LTL to NBA
// ---------------------------------------------------------------------------

namespace detail {

enum class NK { True, False, Pos, Neg, And, Or, Next, Until, Release };

struct NNode {
  NK kind;
  std::string ap;
  int l = -1, r = -1;
  auto key() const { return std::tie(kind, ap, l, r); }
  bool operator<(const NNode& o) const { return key() < o.key(); }
};

/// Hash-consed negation normal form.
class NNF {
 public:
  int intern(NNode n) {
    auto it = ids_.find(n);
    if (it != ids_.end()) return it->second;
    const int id = static_cast<int>(nodes_.size());
    nodes_.push_back(n);
    ids_.emplace(std::move(n), id);
    return id;
  }

  const NNode& at(int i) const { return nodes_[static_cast<std::size_t>(i)]; }
  int size() const { return static_cast<int>(nodes_.size()); }

  int build(const FormulaPtr& p, bool negated) {
    auto bin = [&](NK k, int a, int b) { return intern({k, {}, a, b}); };
    switch (p->op) {
      case Op::True: return intern({negated ? NK::False : NK::True, {}, -1, -1});
      case Op::False: return intern({negated ? NK::True : NK::False, {}, -1, -1});
      case Op::Ap: return intern({negated ? NK::Neg : NK::Pos, p->ap, -1, -1});
      case Op::Not: return build(p->lhs, !negated);
      case Op::And:
        return bin(negated ? NK::Or : NK::And, build(p->lhs, negated), build(p->rhs, negated));
      case Op::Or:
        return bin(negated ? NK::And : NK::Or, build(p->lhs, negated), build(p->rhs, negated));
      case Op::Implies:
        return bin(negated ? NK::And : NK::Or, build(p->lhs, !negated), build(p->rhs, negated));
      case Op::Next: return bin(NK::Next, build(p->lhs, negated), -1);
      case Op::Until:
        return bin(negated ? NK::Release : NK::Until, build(p->lhs, negated), build(p->rhs, negated));
      case Op::Release:
        return bin(negated ? NK::Until : NK::Release, build(p->lhs, negated), build(p->rhs, negated));
      case Op::Eventually: {
        const int t = intern({negated ? NK::False : NK::True, {}, -1, -1});
        return bin(negated ? NK::Release : NK::Until, t, build(p->lhs, negated));
      }
      case Op::Always: {
        const int fl = intern({negated ? NK::True : NK::False, {}, -1, -1});
        return bin(negated ? NK::Until : NK::Release, fl, build(p->lhs, negated));
      }
    }
    throw Error("ltl_to_nba: unknown operator");
  }

 private:
  std::vector<NNode> nodes_;
  std::map<NNode, int> ids_;
};

struct TableauNode {
  std::set<int> incoming;  // -1 is the initial pseudo-node
  std::set<int> fresh, old, next;
};

class Tableau {
 public:
  explicit Tableau(const NNF& f) : f_(f) {}

  std::vector<TableauNode> run(int root) {
    TableauNode n;
    n.incoming.insert(-1);
    n.fresh.insert(root);
    expand(std::move(n));
    return std::move(done_);
  }

 private:
  bool contradicts(const std::set<int>& old, int id) const {
    const NNode& n = f_.at(id);
    if (n.kind == NK::False) return true;
    if (n.kind != NK::Pos && n.kind != NK::Neg) return false;
    for (int o : old) {
      const NNode& m = f_.at(o);
      if (m.ap == n.ap && ((m.kind == NK::Pos && n.kind == NK::Neg) ||
                           (m.kind == NK::Neg && n.kind == NK::Pos)))
        return true;
    }
    return false;
  }

  void add_fresh(TableauNode& n, int id) {
    if (!n.old.count(id)) n.fresh.insert(id);
  }

  // Explicit work stack instead of recursion; nodes are processed depth-first.
  void expand(TableauNode start) {
    std::vector<TableauNode> stack;
    stack.push_back(std::move(start));
    while (!stack.empty()) {
      TableauNode n = std::move(stack.back());
      stack.pop_back();
      if (n.fresh.empty()) {
        bool merged = false;
        for (auto& d : done_)
          if (d.old == n.old && d.next == n.next) {
            d.incoming.insert(n.incoming.begin(), n.incoming.end());
            merged = true;
            break;
          }
        if (merged) continue;
        const int id = static_cast<int>(done_.size());
        TableauNode succ;
        succ.incoming.insert(id);
        succ.fresh = n.next;
        done_.push_back(std::move(n));
        stack.push_back(std::move(succ));
        continue;
      }
      const int eta = *n.fresh.begin();
      n.fresh.erase(n.fresh.begin());
      const NNode& e = f_.at(eta);
      switch (e.kind) {
        case NK::True:
        case NK::False:
        case NK::Pos:
        case NK::Neg:
          if (contradicts(n.old, eta)) break;
          n.old.insert(eta);
          stack.push_back(std::move(n));
          break;
        case NK::And:
          add_fresh(n, e.l);
          add_fresh(n, e.r);
          n.old.insert(eta);
          stack.push_back(std::move(n));
          break;
        case NK::Next:
          n.old.insert(eta);
          n.next.insert(e.l);
          stack.push_back(std::move(n));
          break;
        case NK::Or:
        case NK::Until:
        case NK::Release: {
          TableauNode a = n, b = std::move(n);
          a.old.insert(eta);
          b.old.insert(eta);
          if (e.kind == NK::Or) {
            add_fresh(a, e.l);
            add_fresh(b, e.r);
          } else if (e.kind == NK::Until) {
            add_fresh(a, e.l);
            a.next.insert(eta);
            add_fresh(b, e.r);
          } else {
            add_fresh(a, e.r);
            a.next.insert(eta);
            add_fresh(b, e.l);
            add_fresh(b, e.r);
          }
          stack.push_back(std::move(b));
          stack.push_back(std::move(a));
          break;
        }
      }
    }
  }

  const NNF& f_;
  std::vector<TableauNode> done_;
};

}  // namespace detail

inline NBA ltl_to_nba(const FormulaPtr& phi) {
  detail::NNF f;
  const int root = f.build(phi, false);
  const std::vector<detail::TableauNode> nodes = detail::Tableau(f).run(root);

  std::vector<int> untils;
  for (int i = 0; i < f.size(); ++i)
    if (f.at(i).kind == detail::NK::Until) untils.push_back(i);
  const int k = static_cast<int>(untils.size());

  // Generalized acceptance: node is in F_j if it fulfils or does not owe until j.
  auto in_set = [&](std::size_t node, int j) {
    const auto& old = nodes[node].old;
    const int u = untils[static_cast<std::size_t>(j)];
    return old.count(f.at(u).r) > 0 || old.count(u) == 0;
  };
  auto label = [&](std::size_t node) {
    Guard g;
    for (int id : nodes[node].old) {
      const auto& n = f.at(id);
      if (n.kind == detail::NK::Pos) g[n.ap] = true;
      if (n.kind == detail::NK::Neg) g[n.ap] = false;
    }
    return g;
  };

  // Edge q -> n for every q in n.incoming, reading n's label on entry.
  // Degeneralized states are (node, counter); node index -1 is the start.
  NBA a;
  a.aps = aps_of(phi);
  const int layers = std::max(k, 1);
  std::map<std::pair<int, int>, int> ids;
  std::vector<std::pair<int, int>> work;
  auto state = [&](int node, int c) {
    auto [it, inserted] = ids.emplace(std::make_pair(node, c), 0);
    if (inserted) {
      bool acc;
      if (node < 0) acc = false;
      else if (k == 0) acc = true;
      else acc = c == 0 && in_set(static_cast<std::size_t>(node), 0);
      it->second = a.add_state(acc);
      work.emplace_back(node, c);
    }
    return it->second;
  };
  std::vector<std::vector<int>> succ(nodes.size() + 1);  // index node+1
  for (std::size_t n = 0; n < nodes.size(); ++n)
    for (int q : nodes[n].incoming) succ[static_cast<std::size_t>(q + 1)].push_back(static_cast<int>(n));

  a.initial.push_back(state(-1, 0));
  while (!work.empty()) {
    const auto [node, c] = work.back();
    work.pop_back();
    const int from = ids.at({node, c});
    int next_c = c;
    if (node >= 0 && k > 0 && in_set(static_cast<std::size_t>(node), c)) next_c = (c + 1) % layers;
    for (int n : succ[static_cast<std::size_t>(node + 1)]) {
      const int to = state(n, next_c);
      a.out[static_cast<std::size_t>(from)].push_back({to, label(static_cast<std::size_t>(n))});
    }
  }
  return a;
}

// ---------------------------------------------------------------------------
// Lasso languages
// ---------------------------------------------------------------------------

struct LassoLanguage {
  std::vector<Letter> prefix;
  std::vector<SymbolSet> cycle;
  std::set<std::string> universe;
};

inline Guard guard_of(const SymbolSet& s) {
  Guard g;
  for (const auto& a : s.universe) {
    if (s.base.count(a)) g[a] = true;
    else if (!s.ambiguous.count(a)) g[a] = false;
  }
  return g;
}

inline Guard guard_of(const Letter& l, const std::set<std::string>& universe) {
  Guard g;
  for (const auto& a : universe) g[a] = l.count(a) > 0;
  return g;
}

/// One state before each letter; the state where the loop starts is accepting.
inline NBA lasso_to_nba(const LassoLanguage& lang) {
  if (lang.cycle.empty()) throw Error("lasso_to_nba: cycle must be nonempty");
  NBA a;
  a.aps = lang.universe;
  const int k = static_cast<int>(lang.prefix.size());
  const int p = static_cast<int>(lang.cycle.size());
  for (int i = 0; i < k + p; ++i) a.add_state(i == k);
  a.initial.push_back(0);
  for (int i = 0; i < k; ++i)
    a.out[static_cast<std::size_t>(i)].push_back(
        {i + 1, guard_of(lang.prefix[static_cast<std::size_t>(i)], lang.universe)});
  for (int j = 0; j < p; ++j)
    a.out[static_cast<std::size_t>(k + j)].push_back(
        {k + (j + 1) % p, guard_of(lang.cycle[static_cast<std::size_t>(j)])});
  return a;
}

/// Automaton accepting exactly one ultimately periodic word.
inline NBA word_to_nba(const LassoWord& w, const std::set<std::string>& universe) {
  LassoLanguage lang;
  lang.universe = universe;
  lang.prefix = w.stem;
  for (const auto& l : w.loop) lang.cycle.push_back(SymbolSet::exact(l, universe));
  return lasso_to_nba(lang);
}

// ---------------------------------------------------------------------------
// Product and emptiness
// ---------------------------------------------------------------------------

struct EmptinessResult {
  bool empty = true;
  std::optional<LassoWord> witness;
  std::size_t product_states = 0;
};

inline EmptinessResult product_empty(const NBA& a, const NBA& b) {
  // Explore the reachable product and record edges.
  std::map<std::pair<int, int>, int> ids;
  std::vector<std::pair<int, int>> states;
  struct Edge {
    int to;
    Guard guard;
  };
  std::vector<std::vector<Edge>> edges;
  auto state = [&](int x, int y) {
    auto [it, inserted] = ids.emplace(std::make_pair(x, y), static_cast<int>(states.size()));
    if (inserted) {
      states.emplace_back(x, y);
      edges.emplace_back();
    }
    return it->second;
  };
  std::vector<int> roots;
  for (int x : a.initial)
    for (int y : b.initial) roots.push_back(state(x, y));
  for (std::size_t s = 0; s < states.size(); ++s) {
    const auto [x, y] = states[s];
    for (const auto& tx : a.out[static_cast<std::size_t>(x)])
      for (const auto& ty : b.out[static_cast<std::size_t>(y)]) {
        auto g = meet(tx.guard, ty.guard);
        if (!g) continue;
        const int to = state(tx.to, ty.to);
        edges[s].push_back({to, std::move(*g)});
      }
  }
  const int n = static_cast<int>(states.size());
  EmptinessResult res;
  res.product_states = states.size();
  auto acc_a = [&](int s) { return a.accepting[static_cast<std::size_t>(states[static_cast<std::size_t>(s)].first)] != 0; };
  auto acc_b = [&](int s) { return b.accepting[static_cast<std::size_t>(states[static_cast<std::size_t>(s)].second)] != 0; };

  // Iterative Tarjan over everything reachable (all states are reachable).
  std::vector<int> index(static_cast<std::size_t>(n), -1), low(static_cast<std::size_t>(n), 0),
      comp(static_cast<std::size_t>(n), -1);
  std::vector<char> on_stack(static_cast<std::size_t>(n), 0);
  std::vector<int> stack;
  int counter = 0, ncomp = 0;
  std::vector<std::vector<int>> components;
  for (int root = 0; root < n; ++root) {
    if (index[static_cast<std::size_t>(root)] >= 0) continue;
    std::vector<std::pair<int, std::size_t>> call{{root, 0}};
    index[static_cast<std::size_t>(root)] = low[static_cast<std::size_t>(root)] = counter++;
    stack.push_back(root);
    on_stack[static_cast<std::size_t>(root)] = 1;
    while (!call.empty()) {
      auto& [v, i] = call.back();
      const auto& es = edges[static_cast<std::size_t>(v)];
      if (i < es.size()) {
        const int w = es[i++].to;
        if (index[static_cast<std::size_t>(w)] < 0) {
          index[static_cast<std::size_t>(w)] = low[static_cast<std::size_t>(w)] = counter++;
          stack.push_back(w);
          on_stack[static_cast<std::size_t>(w)] = 1;
          call.emplace_back(w, 0);
        } else if (on_stack[static_cast<std::size_t>(w)]) {
          low[static_cast<std::size_t>(v)] = std::min(low[static_cast<std::size_t>(v)], index[static_cast<std::size_t>(w)]);
        }
        continue;
      }
      if (low[static_cast<std::size_t>(v)] == index[static_cast<std::size_t>(v)]) {
        components.emplace_back();
        int w;
        do {
          w = stack.back();
          stack.pop_back();
          on_stack[static_cast<std::size_t>(w)] = 0;
          comp[static_cast<std::size_t>(w)] = ncomp;
          components.back().push_back(w);
        } while (w != v);
        ++ncomp;
      }
      const int finished = v;
      call.pop_back();
      if (!call.empty()) {
        const int parent = call.back().first;
        low[static_cast<std::size_t>(parent)] =
            std::min(low[static_cast<std::size_t>(parent)], low[static_cast<std::size_t>(finished)]);
      }
    }
  }

  // An accepting lasso exists iff some nontrivial SCC meets both sets.
  for (int c = 0; c < ncomp; ++c) {
    const auto& members = components[static_cast<std::size_t>(c)];
    int fa = -1, fb = -1;
    bool internal_edge = false;
    for (int s : members) {
      if (fa < 0 && acc_a(s)) fa = s;
      if (fb < 0 && acc_b(s)) fb = s;
      for (const auto& e : edges[static_cast<std::size_t>(s)])
        if (comp[static_cast<std::size_t>(e.to)] == c) internal_edge = true;
    }
    if (fa < 0 || fb < 0 || !internal_edge) continue;

    // Breadth-first paths; returns the guards along the path.
    auto path = [&](const std::vector<int>& from, auto target, bool within, bool nonempty) {
      std::vector<int> prev(static_cast<std::size_t>(n), -2);
      std::vector<const Guard*> via(static_cast<std::size_t>(n), nullptr);
      std::queue<int> q;
      int found = -1;
      if (!nonempty)
        for (int s : from)
          if (target(s)) return std::vector<Guard>{};
      for (int s : from) {
        if (nonempty) {
          for (const auto& e : edges[static_cast<std::size_t>(s)]) {
            if (within && comp[static_cast<std::size_t>(e.to)] != c) continue;
            if (prev[static_cast<std::size_t>(e.to)] != -2) continue;
            prev[static_cast<std::size_t>(e.to)] = s;
            via[static_cast<std::size_t>(e.to)] = &e.guard;
            q.push(e.to);
          }
        } else {
          prev[static_cast<std::size_t>(s)] = -1;
          q.push(s);
        }
      }
      while (!q.empty() && found < 0) {
        const int s = q.front();
        q.pop();
        if (target(s)) {
          found = s;
          break;
        }
        for (const auto& e : edges[static_cast<std::size_t>(s)]) {
          if (within && comp[static_cast<std::size_t>(e.to)] != c) continue;
          if (prev[static_cast<std::size_t>(e.to)] != -2) continue;
          prev[static_cast<std::size_t>(e.to)] = s;
          via[static_cast<std::size_t>(e.to)] = &e.guard;
          q.push(e.to);
        }
      }
      if (found < 0) throw Error("product_empty: internal path search failed");
      std::vector<Guard> gs;
      // Walk back; for nonempty searches the start may be revisited, so stop
      // once a step with no recorded guard is reached.
      for (int s = found; via[static_cast<std::size_t>(s)] != nullptr;) {
        gs.push_back(*via[static_cast<std::size_t>(s)]);
        const int p = prev[static_cast<std::size_t>(s)];
        via[static_cast<std::size_t>(s)] = nullptr;
        s = p;
        if (s < 0) break;
      }
      std::reverse(gs.begin(), gs.end());
      return gs;
    };

    const auto stem = path(roots, [&](int s) { return s == fa; }, false, false);
    const auto to_b = path({fa}, [&](int s) { return s == fb; }, true, false);
    const auto back = path({fb}, [&](int s) { return s == fa; }, true, true);
    LassoWord w;
    for (const auto& g : stem) w.stem.push_back(witness_letter(g));
    for (const auto& g : to_b) w.loop.push_back(witness_letter(g));
    for (const auto& g : back) w.loop.push_back(witness_letter(g));
    res.empty = false;
    res.witness = std::move(w);
    return res;
  }
  return res;
}

/// Whether the automaton accepts the word stem . loop^omega.
inline bool accepts(const NBA& a, const LassoWord& w) {
  std::set<std::string> universe = a.aps;
  for (const auto& l : w.stem) universe.insert(l.begin(), l.end());
  for (const auto& l : w.loop) universe.insert(l.begin(), l.end());
  return !product_empty(a, word_to_nba(w, universe)).empty;
}

/// L(A_G) is included in L(phi) iff L(A_G) and L(!phi) do not intersect.
inline bool check_inclusion_via_negation(const NBA& ag, const FormulaPtr& phi) {
  return product_empty(ag, ltl_to_nba(f::neg(phi))).empty;
}

// ---------------------------------------------------------------------------
// HOA export
// ---------------------------------------------------------------------------

inline std::string to_hoa(const NBA& a, const std::string& name = "") {
  std::set<std::string> all = a.aps;
  for (const auto& ts : a.out)
    for (const auto& t : ts)
      for (const auto& [p, v] : t.guard) all.insert(p);
  std::vector<std::string> aps(all.begin(), all.end());
  std::map<std::string, int> idx;
  for (std::size_t i = 0; i < aps.size(); ++i) idx[aps[i]] = static_cast<int>(i);
  std::ostringstream os;
  os << "HOA: v1\n";
  if (!name.empty()) os << "name: \"" << name << "\"\n";
  os << "States: " << a.num_states << "\n";
  for (int s : a.initial) os << "Start: " << s << "\n";
  os << "AP: " << aps.size();
  for (const auto& p : aps) os << " \"" << p << "\"";
  os << "\nacc-name: Buchi\nAcceptance: 1 Inf(0)\nproperties: trans-labels explicit-labels state-acc\n";
  os << "--BODY--\n";
  for (int s = 0; s < a.num_states; ++s) {
    os << "State: " << s;
    if (a.accepting[static_cast<std::size_t>(s)]) os << " {0}";
    os << "\n";
    for (const auto& t : a.out[static_cast<std::size_t>(s)]) {
      std::string g;
      for (const auto& [p, v] : t.guard) {
        if (!g.empty()) g += "&";
        g += (v ? "" : "!") + std::to_string(idx.at(p));
      }
      os << "[" << (g.empty() ? "t" : g) << "] " << t.to << "\n";
    }
  }
  os << "--END--\n";
  return os.str();
}

}  // namespace qmc
