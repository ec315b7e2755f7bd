#include "agglogic/eval.hpp"

#include <limits>

#include "eval_core.hpp"

namespace agglogic {

namespace detail {

namespace {

bool same_pair(const Guard& g, int x, int s) { return (g.x == x && g.s == s) || (g.x == s && g.s == x); }

void add_guard(std::vector<Guard>& out, Guard g) {
  for (const auto& h : out) {
    if (same_pair(h, g.x, g.s)) return;
  }
  out.push_back(g);
}

}  // namespace

TermAnalysis::TermAnalysis(const Term& t, std::span<const Interval> box)
    : term(t), metrics(subterm_metrics(t, box)), guards(t.size()), binder_guard(t.size()) {
  for (int i = static_cast<int>(t.size()) - 1; i >= 0; --i) {
    const TermNode& n = t.node(i);
    auto& out = guards[static_cast<std::size_t>(i)];
    switch (n.kind) {
      case TermKind::kEdge:
        out.push_back({n.a, n.b, 0.0});
        break;
      case TermKind::kApply: {
        auto is_const = [&](int c) { return t.node(c).kind == TermKind::kConst; };
        auto lo = [&](int c) { return metrics[static_cast<std::size_t>(c)].bound.lo; };
        auto hi = [&](int c) { return metrics[static_cast<std::size_t>(c)].bound.hi; };
        const bool is_min = n.fn == FunctionId::kMin || n.fn == FunctionId::kAnd;
        const bool is_max = n.fn == FunctionId::kMax || n.fn == FunctionId::kOr;
        if (is_min || is_max) {
          for (std::size_t k = 0; k < n.children.size(); ++k) {
            for (const Guard& g : guards[static_cast<std::size_t>(n.children[k])]) {
              bool dominated = true;
              for (std::size_t j = 0; j < n.children.size(); ++j) {
                if (j == k) continue;
                const int c = n.children[j];
                dominated = dominated && (is_min ? lo(c) >= g.c : hi(c) <= g.c);
              }
              if (dominated) add_guard(out, g);
            }
          }
        }
        // A pair guarding every non-constant argument guards the application.
        int first = -1;
        for (int c : n.children) {
          if (!is_const(c)) {
            first = c;
            break;
          }
        }
        if (first < 0) break;
        for (const Guard& g : guards[static_cast<std::size_t>(first)]) {
          std::array<double, 4> args{};
          bool ok = true;
          for (std::size_t k = 0; k < n.children.size() && ok; ++k) {
            const int c = n.children[k];
            if (is_const(c)) {
              args[k] = t.node(c).value;
              continue;
            }
            ok = false;
            for (const Guard& h : guards[static_cast<std::size_t>(c)]) {
              if (same_pair(h, g.x, g.s)) {
                args[k] = h.c;
                ok = true;
                break;
              }
            }
          }
          if (ok) {
            const double v =
                function_entry(n.fn).apply(std::span<const double>(args.data(), n.children.size()), n.params);
            add_guard(out, {g.x, g.s, v});
          }
        }
        break;
      }
      case TermKind::kMean:
      case TermKind::kLMean:
      case TermKind::kSup: {
        const int bound_slot = n.scope;
        for (const Guard& g : guards[static_cast<std::size_t>(n.children[0])]) {
          if (g.x == bound_slot || g.s == bound_slot) {
            const int other = g.x == bound_slot ? g.s : g.x;
            if (n.kind != TermKind::kLMean && other < bound_slot && !binder_guard[static_cast<std::size_t>(i)]) {
              binder_guard[static_cast<std::size_t>(i)] = Guard{other, bound_slot, g.c};
            }
            continue;
          }
          if (n.kind == TermKind::kLMean && g.c != 0.0) continue;
          add_guard(out, g);
        }
        break;
      }
      default:
        break;
    }
  }
}

double stable_sum(std::vector<double>& values) {
  std::sort(values.begin(), values.end());
  double sum = 0.0;
  double comp = 0.0;
  for (double x : values) {
    const double t = sum + x;
    if (std::fabs(sum) >= std::fabs(x)) {
      comp += (sum - t) + x;
    } else {
      comp += (x - t) + sum;
    }
    sum = t;
  }
  return sum + comp;
}

std::vector<Interval> analysis_box(const Term& t, const MRFG& g, std::span<const Interval> extra) {
  const auto need = static_cast<std::size_t>(t.feature_dimension());
  if (need > g.dimension()) {
    throw EvalError(EvalError::Kind::kDimension, "term reads feature " + std::to_string(need) +
                                                     " but the graph has dimension " +
                                                     std::to_string(g.dimension()));
  }
  std::vector<Interval> box = g.feature_box();
  if (g.empty() && !extra.empty()) box.assign(extra.begin(), extra.end());
  for (std::size_t i = 0; i < std::min(box.size(), extra.size()); ++i) box[i] = hull(box[i], extra[i]);
  return box;
}

}  // namespace detail

namespace {

class Direct : public detail::Recursion<Direct, detail::PlainView> {
 public:
  using Recursion::Recursion;

  double mean(int i) { return sum_over_view(i) / static_cast<double>(view_.size()); }
  double sup(int i) { return sup_over_view(i, -std::numeric_limits<double>::infinity()); }
};

}  // namespace

double eval(const Term& t, const MRFG& g) {
  if (static_cast<std::size_t>(t.arity()) != g.roots().size()) {
    throw EvalError(EvalError::Kind::kArityMismatch, "term has " + std::to_string(t.arity()) +
                                                         " free variable(s) but the graph has " +
                                                         std::to_string(g.roots().size()) + " root(s)");
  }
  if (g.empty() && (t.contains(TermKind::kMean) || t.contains(TermKind::kSup))) {
    throw EvalError(EvalError::Kind::kEmptyDomain, "mean or sup over the empty graph");
  }
  const auto box = detail::analysis_box(t, g);
  const detail::TermAnalysis an(t, box);
  detail::PlainView view{g};
  Direct d(an, view, g.roots());
  return d.value(t.root());
}

std::vector<double> eval_distribution(const Term& t, const ModelSpec& spec, std::size_t n,
                                      const FeatureDistribution& d, std::size_t replicates, const RngStream& rng) {
  if (!t.closed()) throw EvalError(EvalError::Kind::kArityMismatch, "eval_distribution needs a closed term");
  if (replicates == 0) throw std::invalid_argument("replicates must be >= 1");
  std::vector<double> out;
  out.reserve(replicates);
  for (std::size_t i = 0; i < replicates; ++i) {
    RngStream r = rng.split(i);
    out.push_back(eval(t, sample_graph(spec, n, d, r)));
  }
  return out;
}

}  // namespace agglogic
