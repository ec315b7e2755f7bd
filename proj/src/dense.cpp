#include "agglogic/dense.hpp"

#include <algorithm>
#include <cmath>

#include "agglogic/eval.hpp"

namespace agglogic {

GraphType::GraphType(std::vector<int> classes, std::vector<std::vector<bool>> adjacency)
    : classes_(std::move(classes)), adjacency_(std::move(adjacency)) {
  int next = 0;
  for (int c : classes_) {
    if (c < 0 || c > next) throw std::invalid_argument("equality pattern is not in canonical form");
    if (c == next) ++next;
  }
  if (adjacency_.size() != static_cast<std::size_t>(next)) throw std::invalid_argument("adjacency size mismatch");
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    if (adjacency_[i].size() != adjacency_.size()) throw std::invalid_argument("adjacency is not square");
    if (adjacency_[i][i]) throw std::invalid_argument("edge inside an equality class");
    for (std::size_t j = 0; j < i; ++j) {
      if (adjacency_[i][j] != adjacency_[j][i]) throw std::invalid_argument("adjacency is not symmetric");
    }
  }
}

GraphType GraphType::restrict_last() const {
  if (classes_.empty()) throw std::invalid_argument("cannot restrict the empty type");
  std::vector<int> cls(classes_.begin(), classes_.end() - 1);
  auto adj = adjacency_;
  if (last_is_new()) {
    adj.pop_back();
    for (auto& row : adj) row.pop_back();
  }
  return GraphType(std::move(cls), std::move(adj));
}

bool GraphType::last_is_new() const {
  if (classes_.empty()) return false;
  const int c = classes_.back();
  return std::find(classes_.begin(), classes_.end() - 1, c) == classes_.end() - 1;
}

int GraphType::last_edge_count() const {
  if (classes_.empty()) return 0;
  const auto& row = adjacency_[static_cast<std::size_t>(classes_.back())];
  return static_cast<int>(std::count(row.begin(), row.end(), true));
}

std::string GraphType::to_string() const {
  std::string s = "[";
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(classes_[i]);
  }
  s += "]{";
  bool first = true;
  for (std::size_t i = 0; i < adjacency_.size(); ++i) {
    for (std::size_t j = i + 1; j < adjacency_.size(); ++j) {
      if (!adjacency_[i][j]) continue;
      if (!first) s += ',';
      first = false;
      s += std::to_string(i) + "-" + std::to_string(j);
    }
  }
  return s + "}";
}

GraphType type_of(std::span<const int> vertices, const std::function<bool(int, int)>& adjacent) {
  std::vector<int> cls;
  std::vector<int> rep;
  for (int v : vertices) {
    auto it = std::find(rep.begin(), rep.end(), v);
    if (it == rep.end()) {
      cls.push_back(static_cast<int>(rep.size()));
      rep.push_back(v);
    } else {
      cls.push_back(static_cast<int>(it - rep.begin()));
    }
  }
  std::vector<std::vector<bool>> adj(rep.size(), std::vector<bool>(rep.size(), false));
  for (std::size_t i = 0; i < rep.size(); ++i) {
    for (std::size_t j = i + 1; j < rep.size(); ++j) adj[i][j] = adj[j][i] = adjacent(rep[i], rep[j]);
  }
  return GraphType(std::move(cls), std::move(adj));
}

namespace {

void restricted_growth(int k, std::vector<int>& cur, int next, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int c = 0; c <= next; ++c) {
    cur.push_back(c);
    restricted_growth(k, cur, std::max(next, c + 1), out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<GraphType> enumerate_types(int k) {
  if (k < 0 || k > 5) throw std::invalid_argument("enumerate_types supports 0 <= k <= 5");
  std::vector<std::vector<int>> patterns;
  std::vector<int> cur;
  restricted_growth(k, cur, 0, patterns);
  std::vector<GraphType> out;
  for (const auto& pat : patterns) {
    const int m = pat.empty() ? 0 : *std::max_element(pat.begin(), pat.end()) + 1;
    std::vector<std::pair<int, int>> pairs;
    for (int i = 0; i < m; ++i) {
      for (int j = i + 1; j < m; ++j) pairs.emplace_back(i, j);
    }
    for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << pairs.size()); ++mask) {
      std::vector<std::vector<bool>> adj(static_cast<std::size_t>(m), std::vector<bool>(static_cast<std::size_t>(m)));
      for (std::size_t e = 0; e < pairs.size(); ++e) {
        if (mask >> e & 1U) {
          adj[static_cast<std::size_t>(pairs[e].first)][static_cast<std::size_t>(pairs[e].second)] = true;
          adj[static_cast<std::size_t>(pairs[e].second)][static_cast<std::size_t>(pairs[e].first)] = true;
        }
      }
      out.emplace_back(pat, std::move(adj));
    }
  }
  return out;
}

std::vector<GraphType> extensions(const GraphType& t) {
  std::vector<GraphType> out;
  const auto m = static_cast<std::size_t>(t.class_count());
  for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << m); ++mask) {
    auto cls = t.classes();
    cls.push_back(static_cast<int>(m));
    auto adj = t.adjacency();
    for (auto& row : adj) row.push_back(false);
    adj.emplace_back(m + 1, false);
    for (std::size_t j = 0; j < m; ++j) {
      if (mask >> j & 1U) adj[m][j] = adj[j][m] = true;
    }
    out.emplace_back(std::move(cls), std::move(adj));
  }
  for (std::size_t j = 0; j < m; ++j) {
    auto cls = t.classes();
    cls.push_back(static_cast<int>(j));
    out.emplace_back(std::move(cls), t.adjacency());
  }
  return out;
}

std::vector<GraphType> extensions_adj(const GraphType& t, int i) {
  if (i < 0 || i >= t.k()) throw std::invalid_argument("variable index out of range");
  std::vector<GraphType> out;
  for (auto& e : extensions(t)) {
    if (e.last_is_new() && e.adjacent(t.k(), i)) out.push_back(std::move(e));
  }
  return out;
}

namespace {

void check_extension(const GraphType& t, const GraphType& ext) {
  if (ext.k() != t.k() + 1 || ext.restrict_last() != t) {
    throw std::invalid_argument(ext.to_string() + " is not an extension of " + t.to_string());
  }
}

void check_p(double p) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("edge probability must lie in (0, 1)");
}

}  // namespace

double alpha(const GraphType& t, const GraphType& ext, double p) {
  check_p(p);
  check_extension(t, ext);
  if (!ext.last_is_new()) return 0.0;
  const int r = ext.last_edge_count();
  return std::pow(p, r) * std::pow(1.0 - p, t.class_count() - r);
}

double alpha_adj(const GraphType& t, const GraphType& ext, int i, double p) {
  check_p(p);
  check_extension(t, ext);
  if (i < 0 || i >= t.k() || !ext.last_is_new() || !ext.adjacent(t.k(), i)) {
    throw std::invalid_argument(ext.to_string() + " is not an extension adjacent to variable " + std::to_string(i));
  }
  const int r = ext.last_edge_count() - 1;
  return std::pow(p, r) * std::pow(1.0 - p, t.class_count() - 1 - r);
}

// ---------------------------------------------------------------------------

DenseController::DenseController(Term term, double p, FeatureDistribution d, DenseConfig config)
    : term_(std::move(term)), p_(p), d_(std::move(d)), config_(config) {
  check_p(p);
  if (static_cast<std::size_t>(term_.feature_dimension()) > d_.dimension()) {
    throw std::invalid_argument("term reads feature " + std::to_string(term_.feature_dimension()) +
                                " but the distribution has dimension " + std::to_string(d_.dimension()));
  }
  if (config_.mc_samples == 0 || config_.sup_points == 0 || config_.nested_samples == 0) {
    throw std::invalid_argument("sample counts must be positive");
  }
  special_points_ = d_.special_points();
  for (std::size_t i = 0; i < term_.size(); ++i) {
    const TermNode& n = term_.node(static_cast<int>(i));
    reads_bound_.push_back((n.kind == TermKind::kMean || n.kind == TermKind::kLMean || n.kind == TermKind::kSup) &&
                           reads_features_of(term_, n.children[0], n.scope));
  }
}

double DenseController::value(const GraphType& t, std::span<const std::vector<double>> x,
                              const RngStream& rng) const {
  if (t.k() != term_.arity()) {
    throw EvalError(EvalError::Kind::kArityMismatch, "type has " + std::to_string(t.k()) + " variables, term has " +
                                                         std::to_string(term_.arity()));
  }
  if (x.size() != static_cast<std::size_t>(t.k())) {
    throw EvalError(EvalError::Kind::kDimension, "expected " + std::to_string(t.k()) + " feature vectors");
  }
  std::vector<std::vector<double>> xs;
  for (const auto& v : x) {
    if (v.size() != d_.dimension()) {
      throw EvalError(EvalError::Kind::kDimension, "feature vector has dimension " + std::to_string(v.size()) +
                                                       ", expected " + std::to_string(d_.dimension()));
    }
    xs.push_back(v);
  }
  return node_value(term_.root(), t, xs, rng, 1);
}

double DenseController::expectation(int node, int body, const std::vector<GraphType>& exts,
                                    const std::vector<double>& weights, const GraphType&,
                                    std::vector<std::vector<double>>& x, const RngStream& rng,
                                    std::size_t multiplicity) const {
  const RngStream base = rng.split(static_cast<std::uint64_t>(node));
  const std::size_t samples =
      reads_bound_[static_cast<std::size_t>(node)]
          ? std::max(config_.nested_samples, config_.mc_samples / multiplicity)
          : 1;
  std::vector<double> y(d_.dimension());
  double sum = 0.0;
  double comp = 0.0;
  for (std::size_t s = 0; s < samples; ++s) {
    RngStream ys = base.split(2 * s);
    d_.sample(ys, y);
    const RngStream sub = base.split(2 * s + 1);
    x.push_back(y);
    double acc = 0.0;
    for (std::size_t e = 0; e < exts.size(); ++e) {
      if (weights[e] == 0.0) continue;
      acc += weights[e] * node_value(body, exts[e], x, sub, multiplicity * samples);
    }
    x.pop_back();
    // Neumaier summation.
    const double t = sum + acc;
    comp += std::fabs(sum) >= std::fabs(acc) ? (sum - t) + acc : (acc - t) + sum;
    sum = t;
  }
  return (sum + comp) / static_cast<double>(samples);
}

double DenseController::node_value(int node, const GraphType& t, std::vector<std::vector<double>>& x,
                                   const RngStream& rng, std::size_t multiplicity) const {
  const TermNode& n = term_.node(node);
  switch (n.kind) {
    case TermKind::kConst:
      return n.value;
    case TermKind::kVal:
      return x[static_cast<std::size_t>(n.a)][static_cast<std::size_t>(n.feature)];
    case TermKind::kEdge:
      return t.adjacent(n.a, n.b) ? 1.0 : 0.0;
    case TermKind::kEq:
      return t.equal(n.a, n.b) ? 1.0 : 0.0;
    case TermKind::kApply: {
      std::vector<double> args;
      for (int c : n.children) args.push_back(node_value(c, t, x, rng, multiplicity));
      return function_entry(n.fn).apply(args, n.params);
    }
    case TermKind::kMean: {
      std::vector<GraphType> exts;
      std::vector<double> w;
      for (auto& e : extensions(t)) {
        if (!e.last_is_new()) continue;
        w.push_back(alpha(t, e, p_));
        exts.push_back(std::move(e));
      }
      return expectation(node, n.children[0], exts, w, t, x, rng, multiplicity);
    }
    case TermKind::kLMean: {
      auto exts = extensions_adj(t, n.a);
      std::vector<double> w;
      for (const auto& e : exts) w.push_back(alpha_adj(t, e, n.a, p_));
      return expectation(node, n.children[0], exts, w, t, x, rng, multiplicity);
    }
    case TermKind::kSup: {
      const int body = n.children[0];
      const RngStream base = rng.split(static_cast<std::uint64_t>(node));
      const bool reads = reads_bound_[static_cast<std::size_t>(node)];
      const std::size_t draws = reads ? std::max(config_.nested_samples, config_.sup_points / multiplicity) : 0;
      // Candidate feature points for a fresh vertex.
      std::vector<std::vector<double>> points;
      if (reads) {
        points = special_points_;
        std::vector<double> y(d_.dimension());
        for (std::size_t s = 0; s < draws; ++s) {
          RngStream ys = base.split(2 * s);
          d_.sample(ys, y);
          points.push_back(y);
        }
      } else {
        RngStream ys = base.split(0);
        points.push_back(sample_feature(d_, ys));
      }
      const std::size_t mult = multiplicity * points.size();
      double best = -std::numeric_limits<double>::infinity();
      for (const auto& e : extensions(t)) {
        if (e.last_is_new()) {
          for (std::size_t s = 0; s < points.size(); ++s) {
            x.push_back(points[s]);
            best = std::max(best, node_value(body, e, x, base.split(2 * s + 1), mult));
            x.pop_back();
          }
        } else {
          // The new variable coincides with an old one and inherits its features.
          const int cls = e.classes().back();
          const auto it = std::find(t.classes().begin(), t.classes().end(), cls);
          x.push_back(x[static_cast<std::size_t>(it - t.classes().begin())]);
          best = std::max(best, node_value(body, e, x, base.split(1), multiplicity));
          x.pop_back();
        }
      }
      return best;
    }
  }
  return 0.0;
}

DenseController build_controller(const Term& t, double p, const FeatureDistribution& d, DenseConfig config) {
  return DenseController(t, p, d, config);
}

double controller_value(const DenseController& ctrl, const GraphType& t, std::span<const std::vector<double>> x,
                        const RngStream& rng) {
  return ctrl.value(t, x, rng);
}

}  // namespace agglogic
