#pragma once

// Independent reference implementations used by the tests. None of these
// call into the library code they are compared against.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "agglogic/graph.hpp"
#include "agglogic/rational.hpp"
#include "agglogic/term.hpp"

namespace oracle {

using agglogic::Edge;
using agglogic::ExprPtr;
using agglogic::FOKind;
using agglogic::FOPtr;
using agglogic::FunctionId;
using agglogic::MRFG;
using agglogic::TermKind;

using Env = std::map<std::string, int>;

/// Adjacency matrix of g.
inline std::vector<std::vector<bool>> matrix(const MRFG& g) {
  std::vector<std::vector<bool>> m(g.n(), std::vector<bool>(g.n(), false));
  for (const auto& [a, b] : g.edges()) m[a][b] = m[b][a] = true;
  return m;
}

/// Tarski semantics on an adjacency matrix.
inline bool holds(const FOPtr& f, const std::vector<std::vector<bool>>& adj, Env& env) {
  switch (f->kind) {
    case FOKind::kTrue: return true;
    case FOKind::kFalse: return false;
    case FOKind::kEdge: return adj[env.at(f->a)][env.at(f->b)];
    case FOKind::kEq: return env.at(f->a) == env.at(f->b);
    case FOKind::kNot: return !holds(f->args[0], adj, env);
    case FOKind::kAnd: return holds(f->args[0], adj, env) && holds(f->args[1], adj, env);
    case FOKind::kOr: return holds(f->args[0], adj, env) || holds(f->args[1], adj, env);
    case FOKind::kExists:
    case FOKind::kForall: {
      const bool exists = f->kind == FOKind::kExists;
      const auto saved = env.find(f->a) == env.end() ? std::optional<int>{} : std::optional<int>{env[f->a]};
      bool result = !exists;
      for (int v = 0; v < static_cast<int>(adj.size()); ++v) {
        env[f->a] = v;
        const bool h = holds(f->args[0], adj, env);
        if (exists && h) { result = true; break; }
        if (!exists && !h) { result = false; break; }
      }
      if (saved) env[f->a] = *saved; else env.erase(f->a);
      return result;
    }
  }
  return false;
}

inline bool holds(const FOPtr& f, const MRFG& g) {
  Env env;
  const auto m = matrix(g);
  return holds(f, m, env);
}

/// Random FO formula over variables drawn from `vars`, quantifier depth at most `depth`.
inline FOPtr random_fo(std::mt19937_64& rng, std::vector<std::string> vars, int depth, int size) {
  namespace fo = agglogic::fo;
  std::uniform_int_distribution<int> pick(0, 99);
  auto var = [&] { return vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)]; };
  const int roll = pick(rng);
  if (size <= 0 || (roll < 25 && !vars.empty())) {
    if (vars.empty()) return roll % 2 ? fo::truth() : fo::falsity();
    return roll % 3 == 0 ? fo::eq(var(), var()) : fo::edge(var(), var());
  }
  if (depth > 0 && (roll < 60 || vars.empty())) {
    const std::string v = "x" + std::to_string(vars.size());
    vars.push_back(v);
    auto body = random_fo(rng, vars, depth - 1, size - 1);
    return roll % 2 ? fo::exists(v, body) : fo::forall(v, body);
  }
  if (vars.empty()) return fo::truth();
  if (roll < 72) return fo::negate(random_fo(rng, vars, depth, size - 1));
  auto a = random_fo(rng, vars, depth, size / 2);
  auto b = random_fo(rng, vars, depth, size / 2);
  return roll < 86 ? fo::conj(a, b) : fo::disj(a, b);
}

/// Plain recursive evaluation of a name-based term. Mean, Sup and LMean are
/// evaluated literally, with no guards or short cuts.
inline double apply_fn(FunctionId id, const std::vector<double>& x, const std::vector<double>& p) {
  switch (id) {
    case FunctionId::kNeg: return -x[0];
    case FunctionId::kAdd: return x[0] + x[1];
    case FunctionId::kSub: return x[0] - x[1];
    case FunctionId::kScale: return p[0] * x[0];
    case FunctionId::kShift: return x[0] + p[0];
    case FunctionId::kMin: return std::min(x[0], x[1]);
    case FunctionId::kMax: return std::max(x[0], x[1]);
    case FunctionId::kAbs: return std::fabs(x[0]);
    case FunctionId::kClip: return std::min(std::max(x[0], p[0]), p[1]);
    case FunctionId::kProd2: return x[0] * x[1];
    case FunctionId::kNot: return 1.0 - x[0];
    case FunctionId::kAnd: return std::min(x[0], x[1]);
    case FunctionId::kOr: return std::max(x[0], x[1]);
  }
  return 0.0;
}

inline double naive_eval(const ExprPtr& e, const MRFG& g, Env& env) {
  switch (e->kind) {
    case TermKind::kConst: return e->value;
    case TermKind::kVal: return g.feature(env.at(e->var), static_cast<std::size_t>(e->feature));
    case TermKind::kEdge: return g.adjacent(env.at(e->var), env.at(e->other)) ? 1.0 : 0.0;
    case TermKind::kEq: return env.at(e->var) == env.at(e->other) ? 1.0 : 0.0;
    case TermKind::kApply: {
      std::vector<double> x;
      for (const auto& a : e->args) x.push_back(naive_eval(a, g, env));
      return apply_fn(e->fn, x, e->params);
    }
    case TermKind::kMean:
    case TermKind::kSup:
    case TermKind::kLMean: {
      const auto saved = env.find(e->var) == env.end() ? std::optional<int>{} : std::optional<int>{env[e->var]};
      std::vector<int> domain;
      if (e->kind == TermKind::kLMean) {
        domain = g.neighbors(env.at(e->other));
      } else {
        for (int v = 0; v < static_cast<int>(g.n()); ++v) domain.push_back(v);
      }
      double acc = e->kind == TermKind::kSup ? -std::numeric_limits<double>::infinity() : 0.0;
      for (int v : domain) {
        env[e->var] = v;
        const double x = naive_eval(e->args[0], g, env);
        acc = e->kind == TermKind::kSup ? std::max(acc, x) : acc + x;
      }
      if (saved) env[e->var] = *saved; else env.erase(e->var);
      if (e->kind == TermKind::kSup) return acc;
      return domain.empty() ? 0.0 : acc / static_cast<double>(domain.size());
    }
  }
  return 0.0;
}

/// Free variables bound to the roots of g in order.
inline double naive_eval(const ExprPtr& e, const MRFG& g, const std::vector<std::string>& free_vars) {
  Env env;
  for (std::size_t i = 0; i < free_vars.size(); ++i) env[free_vars[i]] = g.root(i);
  return naive_eval(e, g, env);
}

/// Random term over the variables in scope; features are 1-based up to `dim`.
inline ExprPtr random_term(std::mt19937_64& rng, std::vector<std::string> vars, int depth, int dim,
                           bool allow_global = true) {
  namespace b = agglogic::build;
  std::uniform_int_distribution<int> pick(0, 99);
  auto var = [&] { return vars[std::uniform_int_distribution<std::size_t>(0, vars.size() - 1)(rng)]; };
  const int roll = pick(rng);
  if (depth <= 0 || roll < 20) {
    if (vars.empty() || roll % 5 == 0) return b::constant(std::uniform_real_distribution<double>(-1, 1)(rng));
    if (roll % 5 == 1) return b::edge(var(), var());
    if (roll % 5 == 2) return b::eq(var(), var());
    return b::val(std::uniform_int_distribution<int>(1, std::max(dim, 1))(rng), var());
  }
  const std::string v = "y" + std::to_string(vars.size());
  if (roll < 40 && allow_global) {
    auto inner = vars;
    inner.push_back(v);
    return b::mean(v, random_term(rng, inner, depth - 1, dim, allow_global));
  }
  if (roll < 55 && allow_global) {
    auto inner = vars;
    inner.push_back(v);
    return b::sup(v, random_term(rng, inner, depth - 1, dim, allow_global));
  }
  if (roll < 70 && !vars.empty()) {
    auto inner = vars;
    inner.push_back(v);
    return b::lmean(v, var(), random_term(rng, inner, depth - 1, dim, allow_global));
  }
  static const std::vector<FunctionId> unary{FunctionId::kNeg, FunctionId::kAbs, FunctionId::kNot,
                                            FunctionId::kScale, FunctionId::kShift, FunctionId::kClip};
  static const std::vector<FunctionId> binary{FunctionId::kAdd, FunctionId::kSub, FunctionId::kMin,
                                             FunctionId::kMax, FunctionId::kProd2, FunctionId::kAnd,
                                             FunctionId::kOr};
  if (roll < 85) {
    const FunctionId f = unary[std::uniform_int_distribution<std::size_t>(0, unary.size() - 1)(rng)];
    std::vector<double> params;
    if (f == FunctionId::kScale) params = {std::uniform_real_distribution<double>(-2, 2)(rng)};
    if (f == FunctionId::kShift) params = {std::uniform_real_distribution<double>(-1, 1)(rng)};
    if (f == FunctionId::kClip) params = {-0.5, 0.5};
    return b::apply(f, {random_term(rng, vars, depth - 1, dim, allow_global)}, params);
  }
  const FunctionId f = binary[std::uniform_int_distribution<std::size_t>(0, binary.size() - 1)(rng)];
  return b::apply(f, {random_term(rng, vars, depth - 1, dim, allow_global),
                      random_term(rng, vars, depth - 1, dim, allow_global)});
}

/// G(n, p) with uniform [0,1]^d features and the given roots.
inline MRFG random_graph(std::mt19937_64& rng, std::size_t n, double p, std::size_t d,
                         std::vector<int> roots = {}) {
  std::bernoulli_distribution coin(p);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) edges.emplace_back(static_cast<int>(i), static_cast<int>(j));
  std::vector<double> f(n * d);
  for (auto& x : f) x = u(rng);
  std::vector<agglogic::Interval> box(d, agglogic::Interval{0.0, 1.0});
  return MRFG(n, edges, std::move(roots), d, std::move(f), box);
}

/// All labeled graphs on n vertices (2^(n(n-1)/2) of them), featureless.
inline std::vector<MRFG> all_graphs(std::size_t n) {
  std::vector<Edge> pairs;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) pairs.emplace_back(static_cast<int>(i), static_cast<int>(j));
  std::vector<MRFG> out;
  for (std::size_t mask = 0; mask < (std::size_t{1} << pairs.size()); ++mask) {
    std::vector<Edge> e;
    for (std::size_t b = 0; b < pairs.size(); ++b)
      if (mask >> b & 1) e.push_back(pairs[b]);
    out.push_back(MRFG::plain(n, e));
  }
  return out;
}

/// Floyd-Warshall; unreachable pairs get SIZE_MAX.
inline std::vector<std::vector<std::size_t>> apsp(const MRFG& g) {
  const std::size_t n = g.n();
  constexpr std::size_t inf = std::numeric_limits<std::size_t>::max();
  std::vector<std::vector<std::size_t>> d(n, std::vector<std::size_t>(n, inf));
  for (std::size_t i = 0; i < n; ++i) {
    d[i][i] = 0;
    for (int j : g.neighbors(static_cast<int>(i))) d[i][static_cast<std::size_t>(j)] = 1;
  }
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (d[i][k] != inf && d[k][j] != inf) d[i][j] = std::min(d[i][j], d[i][k] + d[k][j]);
  return d;
}

/// Shortest simple cycle through each vertex (SIZE_MAX when none), by
/// exhaustive path enumeration. Exponential: small graphs only.
inline std::vector<std::size_t> shortest_cycle_through(const MRFG& g) {
  const std::size_t n = g.n();
  std::vector<std::size_t> best(n, std::numeric_limits<std::size_t>::max());
  std::vector<int> path;
  std::vector<bool> on(n, false);
  std::function<void(int, int)> dfs = [&](int start, int v) {
    for (int w : g.neighbors(v)) {
      if (w == start && path.size() >= 3) {
        for (int x : path) best[static_cast<std::size_t>(x)] = std::min(best[static_cast<std::size_t>(x)], path.size());
      } else if (!on[static_cast<std::size_t>(w)] && w > start) {
        on[static_cast<std::size_t>(w)] = true;
        path.push_back(w);
        dfs(start, w);
        path.pop_back();
        on[static_cast<std::size_t>(w)] = false;
      }
    }
  };
  for (int s = 0; s < static_cast<int>(n); ++s) {
    path = {s};
    on[static_cast<std::size_t>(s)] = true;
    dfs(s, s);
    on[static_cast<std::size_t>(s)] = false;
  }
  return best;
}

/// Max coupling mass by the min-cut formula: min over S of a(A \ S) + b(N(S)).
inline agglogic::Rational coupling_mass_mincut(const std::vector<agglogic::Rational>& a,
                                               const std::vector<agglogic::Rational>& b,
                                               const std::vector<std::vector<bool>>& rel) {
  agglogic::Rational best = 1;
  for (std::size_t s = 0; s < (std::size_t{1} << a.size()); ++s) {
    agglogic::Rational v = 0;
    std::vector<bool> nb(b.size(), false);
    for (std::size_t i = 0; i < a.size(); ++i) {
      if (s >> i & 1) {
        for (std::size_t j = 0; j < b.size(); ++j)
          if (rel[i][j]) nb[j] = true;
      } else {
        v += a[i];
      }
    }
    for (std::size_t j = 0; j < b.size(); ++j)
      if (nb[j]) v += b[j];
    best = std::min(best, v);
  }
  return best;
}

/// Similarity straight from the definition, with no memo and no prefilter.
inline bool similar_def(const MRFG& g, std::vector<int> rg, const MRFG& h, std::vector<int> rh, int k, double eps,
                        const agglogic::Rational& one_minus_eta) {
  if (k == 0) {
    for (std::size_t i = 0; i < rg.size(); ++i) {
      for (std::size_t j = 0; j < rg.size(); ++j) {
        if ((rg[i] == rg[j]) != (rh[i] == rh[j])) return false;
        if (g.adjacent(rg[i], rg[j]) != h.adjacent(rh[i], rh[j])) return false;
      }
      for (std::size_t c = 0; c < g.dimension(); ++c)
        if (std::fabs(g.feature(rg[i], c) - h.feature(rh[i], c)) > eps) return false;
    }
    return true;
  }
  auto ext = [](std::vector<int> r, int v) { r.push_back(v); return r; };
  for (int p = 0; p < static_cast<int>(g.n()); ++p) {
    bool found = false;
    for (int q = 0; q < static_cast<int>(h.n()) && !found; ++q)
      found = similar_def(g, ext(rg, p), h, ext(rh, q), k - 1, eps, one_minus_eta);
    if (!found) return false;
  }
  for (int q = 0; q < static_cast<int>(h.n()); ++q) {
    bool found = false;
    for (int p = 0; p < static_cast<int>(g.n()) && !found; ++p)
      found = similar_def(g, ext(rg, p), h, ext(rh, q), k - 1, eps, one_minus_eta);
    if (!found) return false;
  }
  for (std::size_t i = 0; i < rg.size(); ++i) {
    const auto& ng = g.neighbors(rg[i]);
    const auto& nh = h.neighbors(rh[i]);
    if (ng.empty() != nh.empty()) return false;
    if (ng.empty()) continue;
    std::vector<agglogic::Rational> a(ng.size(), agglogic::Rational(1, static_cast<long>(ng.size())));
    std::vector<agglogic::Rational> b(nh.size(), agglogic::Rational(1, static_cast<long>(nh.size())));
    std::vector<std::vector<bool>> rel(ng.size(), std::vector<bool>(nh.size()));
    for (std::size_t x = 0; x < ng.size(); ++x)
      for (std::size_t y = 0; y < nh.size(); ++y)
        rel[x][y] = similar_def(g, ext(rg, ng[x]), h, ext(rh, nh[y]), k - 1, eps, one_minus_eta);
    if (coupling_mass_mincut(a, b, rel) < one_minus_eta) return false;
  }
  return true;
}

}  // namespace oracle
