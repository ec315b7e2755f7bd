#pragma once

// Evaluation machinery shared by the direct interpreter and the sparse
// controllers: term analysis (bounds and edge guards), compensated sums and
// the recursion over a graph view.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "agglogic/eval.hpp"
#include "agglogic/graph.hpp"
#include "agglogic/term.hpp"

namespace agglogic::detail {

/// "Whenever the vertices at slots x and s are not adjacent, the node's
/// value is c." Holds for every graph, so it is valid for eval and for the
/// sparse controllers alike.
struct Guard {
  int x;
  int s;
  double c;
};

struct TermAnalysis {
  TermAnalysis(const Term& t, std::span<const Interval> box);

  const Term& term;
  std::vector<TermMetrics> metrics;
  std::vector<std::vector<Guard>> guards;
  /// For Mean and Sup nodes: a guard of the body tying the bound slot to an
  /// outer slot, if any.
  std::vector<std::optional<Guard>> binder_guard;
};

/// Neumaier summation over the values in ascending order; the result
/// depends only on the multiset of values.
double stable_sum(std::vector<double>& values);

/// Plain MRFG view.
struct PlainView {
  const MRFG& g;
  [[nodiscard]] std::size_t size() const { return g.n(); }
  [[nodiscard]] std::size_t degree(Vertex v) const { return g.degree(v); }
  [[nodiscard]] bool adjacent(Vertex u, Vertex v) const { return g.adjacent(u, v); }
  [[nodiscard]] double feature(Vertex v, std::size_t i) const { return g.feature(v, i); }
  template <class F>
  void for_each_neighbor(Vertex v, F&& f) const {
    for (Vertex w : g.neighbors(v)) {
      if (!f(w)) return;
    }
  }
};

/// Shared recursion. `Derived` supplies mean(node) and sup(node).
template <class Derived, class View>
class Recursion {
 public:
  Recursion(const TermAnalysis& an, View& view, std::vector<Vertex> roots)
      : an_(an), view_(view), roots_(std::move(roots)) {}

  double value(int i) {
    const TermNode& n = an_.term.node(i);
    switch (n.kind) {
      case TermKind::kConst:
        return n.value;
      case TermKind::kVal:
        return view_.feature(slot(n.a), static_cast<std::size_t>(n.feature));
      case TermKind::kEdge:
        return view_.adjacent(slot(n.a), slot(n.b)) ? 1.0 : 0.0;
      case TermKind::kEq:
        return slot(n.a) == slot(n.b) ? 1.0 : 0.0;
      case TermKind::kApply:
        return apply(i, n);
      case TermKind::kMean:
        return self().mean(i);
      case TermKind::kLMean:
        return lmean(i, n);
      case TermKind::kSup:
        return self().sup(i);
    }
    return 0.0;
  }

 protected:
  Derived& self() { return static_cast<Derived&>(*this); }
  Vertex slot(int s) const { return roots_[static_cast<std::size_t>(s)]; }

  const Interval& bound(int node) const { return an_.metrics[static_cast<std::size_t>(node)].bound; }

  double apply(int, const TermNode& n) {
    const int c0 = n.children[0];
    if (n.children.size() == 2) {
      const int c1 = n.children[1];
      switch (n.fn) {
        case FunctionId::kMin:
        case FunctionId::kAnd: {
          const double x = value(c0);
          if (x <= bound(c1).lo) return x;
          return std::min(x, value(c1));
        }
        case FunctionId::kMax:
        case FunctionId::kOr: {
          const double x = value(c0);
          if (x >= bound(c1).hi) return x;
          return std::max(x, value(c1));
        }
        default:
          break;
      }
    }
    std::array<double, 4> args{};
    for (std::size_t k = 0; k < n.children.size(); ++k) args[k] = value(n.children[k]);
    return function_entry(n.fn).apply(std::span<const double>(args.data(), n.children.size()), n.params);
  }

  double lmean(int, const TermNode& n) {
    const Vertex anchor = slot(n.a);
    const std::size_t deg = view_.degree(anchor);
    if (deg == 0) return 0.0;
    std::vector<double> vals;
    vals.reserve(deg);
    const int body = n.children[0];
    view_.for_each_neighbor(anchor, [&](Vertex w) {
      roots_.push_back(w);
      vals.push_back(value(body));
      roots_.pop_back();
      return true;
    });
    return stable_sum(vals) / static_cast<double>(deg);
  }

  /// Max of the body over the vertices of the view, starting from `best`.
  /// Uses the binder guard when present and stops at the body's upper bound.
  double sup_over_view(int i, double best) {
    const TermNode& n = an_.term.node(i);
    const int body = n.children[0];
    const double ub = bound(body).hi;
    if (best >= ub) return best;
    const auto& g = an_.binder_guard[static_cast<std::size_t>(i)];
    auto visit = [&](Vertex v) {
      roots_.push_back(v);
      best = std::max(best, value(body));
      roots_.pop_back();
      return best < ub;
    };
    if (g) {
      // Every non-neighbor of the guard slot (including that slot's own vertex) yields c.
      best = std::max(best, g->c);
      if (best < ub) view_.for_each_neighbor(slot(g->x), visit);
      return best;
    }
    for (std::size_t v = 0; v < view_.size(); ++v) {
      if (!visit(static_cast<Vertex>(v))) break;
    }
    return best;
  }

  /// Sum of the body over the vertices of the view.
  double sum_over_view(int i) {
    const TermNode& n = an_.term.node(i);
    const int body = n.children[0];
    const auto& g = an_.binder_guard[static_cast<std::size_t>(i)];
    std::vector<double> vals;
    if (g) {
      const Vertex x = slot(g->x);
      view_.for_each_neighbor(x, [&](Vertex v) {
        roots_.push_back(v);
        vals.push_back(value(body));
        roots_.pop_back();
        return true;
      });
      const double others = static_cast<double>(view_.size() - view_.degree(x));
      vals.push_back(others * g->c);
      return stable_sum(vals);
    }
    vals.reserve(view_.size());
    for (std::size_t v = 0; v < view_.size(); ++v) {
      roots_.push_back(static_cast<Vertex>(v));
      vals.push_back(value(body));
      roots_.pop_back();
    }
    return stable_sum(vals);
  }

  const TermAnalysis& an_;
  View& view_;
  std::vector<Vertex> roots_;
};

/// Feature box used for bounds: the graph's box, widened by `extra`.
std::vector<Interval> analysis_box(const Term& t, const MRFG& g, std::span<const Interval> extra = {});

}  // namespace agglogic::detail
