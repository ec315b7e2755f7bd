#include "agglogic/sparse.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "eval_core.hpp"

namespace agglogic {

namespace {

using detail::Recursion;
using detail::TermAnalysis;

/// A base graph followed by a stack of appended rooted trees. Vertex ids of
/// the i-th appended tree start at its offset.
class OverlayView {
 public:
  explicit OverlayView(const MRFG& base) : base_(base), size_(base.n()) {}

  [[nodiscard]] std::size_t size() const { return size_; }

  /// Appends a tree and returns the id of its root.
  Vertex push(const MRFG& tree) {
    segments_.push_back({&tree, static_cast<Vertex>(size_)});
    size_ += tree.n();
    return segments_.back().offset + tree.root(0);
  }
  void pop() {
    size_ -= segments_.back().graph->n();
    segments_.pop_back();
  }

  [[nodiscard]] std::size_t degree(Vertex v) const {
    const auto [g, local] = locate(v);
    return g->degree(local);
  }
  [[nodiscard]] bool adjacent(Vertex u, Vertex v) const {
    const auto [gu, lu] = locate(u);
    const auto [gv, lv] = locate(v);
    return gu == gv && gu->adjacent(lu, lv);
  }
  [[nodiscard]] double feature(Vertex v, std::size_t i) const {
    const auto [g, local] = locate(v);
    return g->feature(local, i);
  }
  template <class F>
  void for_each_neighbor(Vertex v, F&& f) const {
    const Vertex offset = v < static_cast<Vertex>(base_.n()) ? 0 : segment_of(v).offset;
    const MRFG* g = v < static_cast<Vertex>(base_.n()) ? &base_ : segment_of(v).graph;
    for (Vertex w : g->neighbors(v - offset)) {
      if (!f(w + offset)) return;
    }
  }

 private:
  struct Segment {
    const MRFG* graph;
    Vertex offset;
  };

  [[nodiscard]] const Segment& segment_of(Vertex v) const {
    for (std::size_t i = segments_.size(); i-- > 0;) {
      if (v >= segments_[i].offset) return segments_[i];
    }
    return segments_.front();
  }
  [[nodiscard]] std::pair<const MRFG*, Vertex> locate(Vertex v) const {
    if (v < static_cast<Vertex>(base_.n())) return {&base_, v};
    const Segment& s = segment_of(v);
    return {s.graph, v - s.offset};
  }

  const MRFG& base_;
  std::size_t size_;
  std::vector<Segment> segments_;
};

class SparseEval : public Recursion<SparseEval, OverlayView> {
 public:
  SparseEval(const TermAnalysis& an, OverlayView& view, std::vector<Vertex> roots, const SparseController& ctrl)
      : Recursion(an, view, std::move(roots)), ctrl_(ctrl) {}

  double mean(int i) {
    // The new root sits in a fresh component, so a guard on it decides the body.
    if (const auto& g = an_.binder_guard[static_cast<std::size_t>(i)]) return g->c;
    const int body = an_.term.node(i).children[0];
    const auto& trees = ctrl_.mean_trees(i);
    std::vector<double> vals;
    vals.reserve(trees.size());
    for (const auto& t : trees) vals.push_back(with_tree(t, body));
    return detail::stable_sum(vals) / static_cast<double>(vals.size());
  }

  double sup(int i) {
    const int body = an_.term.node(i).children[0];
    const auto& pool = ctrl_.pool(i);
    double best = sup_over_view(i, -std::numeric_limits<double>::infinity());
    if (an_.binder_guard[static_cast<std::size_t>(i)]) {
      // Any pool tree root is non-adjacent to the guard slot; sup_over_view
      // already counted the guard constant.
      return best;
    }
    const double ub = bound(body).hi;
    for (const auto& t : pool) {
      if (best >= ub) break;
      best = std::max(best, with_tree(t, body));
    }
    return best;
  }

 private:
  double with_tree(const MRFG& t, int body) {
    roots_.push_back(view_.push(t));
    const double v = value(body);
    view_.pop();
    roots_.pop_back();
    return v;
  }

  const SparseController& ctrl_;
};

MRFG snap_features(const MRFG& t, const FeaturePartition& part) {
  if (t.dimension() == 0) return t;
  std::vector<double> f = t.feature_matrix();
  for (std::size_t v = 0; v < t.n(); ++v) {
    const int c = part.cell(t.features(static_cast<Vertex>(v)));
    if (c < 0) continue;
    const auto center = part.cell_center(c);
    std::copy(center.begin(), center.end(), f.begin() + static_cast<std::ptrdiff_t>(v * t.dimension()));
  }
  return t.with_features(std::move(f));
}

MRFG truncate_tree(const MRFG& t, std::size_t h) { return ball(t, t.root(0), h); }

}  // namespace

// ---------------------------------------------------------------------------

std::vector<MRFG> small_rooted_trees(std::size_t max_vertices) {
  // Grow rooted trees by attaching a leaf anywhere; dedupe canonically.
  std::vector<MRFG> out;
  std::set<std::string> seen;
  std::vector<MRFG> layer{MRFG::plain(1, {}, {0})};
  for (std::size_t size = 1; size <= max_vertices && !layer.empty(); ++size) {
    std::vector<MRFG> next;
    for (const auto& t : layer) {
      if (!seen.insert(canonical_form(t)).second) continue;
      out.push_back(t);
      if (size == max_vertices) continue;
      auto edges = t.edges();
      for (std::size_t v = 0; v < t.n(); ++v) {
        auto e = edges;
        e.emplace_back(static_cast<Vertex>(v), static_cast<Vertex>(t.n()));
        next.push_back(MRFG::plain(t.n() + 1, e, {0}));
      }
    }
    layer.swap(next);
  }
  return out;
}

SparseController::SparseController(Term t, SparseConfig cfg, const RngStream& rng)
    : term_(std::move(t)), cfg_(std::move(cfg)) {
  if (cfg_.mc_fbp_samples == 0) throw std::invalid_argument("mc_fbp_samples must be >= 1");
  if (!(cfg_.c > 0.0)) throw std::invalid_argument("branching mean must be positive");
  const auto dim = cfg_.distribution.dimension();
  if (static_cast<std::size_t>(term_.feature_dimension()) > dim) {
    throw EvalError(EvalError::Kind::kDimension, "term reads feature " + std::to_string(term_.feature_dimension()) +
                                                     " but the distribution has dimension " + std::to_string(dim));
  }
  box_ = cfg_.distribution.support_box();
  const auto metrics = subterm_metrics(term_, box_);
  const std::size_t nodes = term_.size();
  heights_.assign(nodes, 0);
  mean_trees_.resize(nodes);
  pools_.resize(nodes);
  pool_keys_.resize(nodes);

  std::optional<FeaturePartition> grid;
  if (dim > 0 && cfg_.pool_mesh > 0.0) grid.emplace(cfg_.distribution, cfg_.pool_mesh);
  auto special = cfg_.distribution.special_points();
  if (special.empty()) special.emplace_back();
  const auto small = cfg_.pool_small_trees ? small_rooted_trees(4) : std::vector<MRFG>{};

  for (std::size_t i = 0; i < nodes; ++i) {
    const TermNode& n = term_.node(static_cast<int>(i));
    if (n.kind != TermKind::kMean && n.kind != TermKind::kSup) continue;
    const auto& bm = metrics[static_cast<std::size_t>(n.children[0])];
    const std::size_t h = core_radius(bm.srank + bm.lmrank);
    heights_[i] = h;
    if (n.kind == TermKind::kMean) {
      const RngStream base = rng.split(1).split(i);
      for (std::size_t s = 0; s < cfg_.mc_fbp_samples; ++s) {
        RngStream r = base.split(s);
        mean_trees_[i].push_back(sample_fbp(cfg_.c, cfg_.distribution, h, r));
      }
      continue;
    }
    const RngStream base = rng.split(2).split(i);
    for (std::size_t s = 0; s < cfg_.pool_fbp_samples; ++s) {
      RngStream r = base.split(s);
      MRFG tree = sample_fbp(cfg_.c, cfg_.distribution, h, r);
      insert_pool_tree(i, grid ? snap_features(tree, *grid) : std::move(tree));
    }
    for (const auto& shape : small) {
      if (tree_height(shape) > h) continue;
      for (const auto& point : special) {
        std::vector<double> f;
        for (std::size_t v = 0; v < shape.n(); ++v) f.insert(f.end(), point.begin(), point.end());
        insert_pool_tree(i, MRFG::from_adjacency(shape.adjacency(), {0}, dim, std::move(f), box_));
      }
    }
    for (const auto& extra : cfg_.extra_pool) insert_pool_tree(i, truncate_tree(extra, h));
  }
}

void SparseController::insert_pool_tree(std::size_t node, MRFG tree) {
  if (tree.roots().size() != 1) throw GraphError("pool trees need exactly one root");
  if (tree.dimension() != cfg_.distribution.dimension()) throw GraphError("pool tree has the wrong feature dimension");
  std::string key = canonical_form(tree);
  auto& keys = pool_keys_[node];
  auto it = std::lower_bound(keys.begin(), keys.end(), key);
  if (it != keys.end() && *it == key) return;
  keys.insert(it, std::move(key));
  pools_[node].push_back(std::move(tree));
}

void SparseController::add_pool_trees(const std::vector<MRFG>& trees) {
  for (std::size_t i = 0; i < term_.size(); ++i) {
    if (term_.node(static_cast<int>(i)).kind != TermKind::kSup) continue;
    for (const auto& t : trees) {
      if (tree_height(t) <= heights_[i]) insert_pool_tree(i, t);
    }
  }
}

void SparseController::add_pool_balls(const MRFG& g) {
  for (std::size_t i = 0; i < term_.size(); ++i) {
    if (term_.node(static_cast<int>(i)).kind != TermKind::kSup) continue;
    for (std::size_t v = 0; v < g.n(); ++v) {
      MRFG b = ball(g, static_cast<Vertex>(v), heights_[i]);
      if (is_forest(b)) insert_pool_tree(i, std::move(b));
    }
  }
}

double SparseController::operator()(const MRFG& g) const {
  if (g.roots().size() != static_cast<std::size_t>(term_.arity())) {
    throw EvalError(EvalError::Kind::kArityMismatch, "term has " + std::to_string(term_.arity()) +
                                                         " free variables but the graph has " +
                                                         std::to_string(g.roots().size()) + " roots");
  }
  const auto box = detail::analysis_box(term_, g, box_);
  const TermAnalysis an(term_, box);
  OverlayView view(g);
  SparseEval e(an, view, g.roots(), *this);
  return e.value(term_.root());
}

double lambda(const Term& t, const MRFG& g, const SparseConfig& cfg, const RngStream& rng) {
  return SparseController(t, cfg, rng)(g);
}

double mc_tolerance(const Term& t, const SparseConfig& cfg) {
  if (!t.contains(TermKind::kMean)) return 1e-9;
  const auto m = metrics(t, cfg.distribution.support_box());
  return 1e-9 + 3.0 * m.bound.width() / std::sqrt(static_cast<double>(cfg.mc_fbp_samples));
}

CoreDeterminacy check_core_determinacy(const Term& t, const MRFG& g, const SparseConfig& cfg, const RngStream& rng) {
  const auto m = metrics(t, cfg.distribution.support_box());
  CoreDeterminacy out;
  out.radius = core_radius(m.srank + m.lmrank);
  const MRFG cg = core(g, out.radius);
  SparseController ctrl(t, cfg, rng);
  ctrl.add_pool_balls(g);
  ctrl.add_pool_balls(cg);
  out.lhs = ctrl(g);
  out.rhs = ctrl(cg);
  out.tolerance = mc_tolerance(t, cfg);
  out.pass = std::fabs(out.lhs - out.rhs) <= out.tolerance;
  return out;
}

// ---------------------------------------------------------------------------

std::string to_string(Axiom a) {
  switch (a) {
    case Axiom::kRichness:
      return "richness";
    case Axiom::kFbpCloseness:
      return "fbp_closeness";
    case Axiom::kHomogeneity:
      return "homogeneity";
  }
  return "unknown";
}

std::string to_json(const AxiomReport& report) {
  nlohmann::ordered_json j;
  j["axiom"] = to_string(report.axiom);
  j["params"] = {{"k", report.k}, {"epsilon", report.epsilon}, {"eta", report.eta}, {"r", report.r}};
  j["verdict"] = report.verdict;
  j["value"] = report.value;
  if (!report.exact.empty()) j["exact"] = report.exact;
  if (report.axiom == Axiom::kRichness) j["witnesses"] = report.witnesses;
  if (report.axiom == Axiom::kFbpCloseness) j["per_radius"] = report.per_radius;
  if (!report.detail.empty()) j["detail"] = report.detail;
  return j.dump(2);
}

AxiomReport check_homogeneity(const MRFG& g, int k, double eta, std::size_t r) {
  if (g.empty()) throw GraphError("homogeneity is undefined on the empty graph");
  AxiomReport rep;
  rep.axiom = Axiom::kHomogeneity;
  rep.k = k;
  rep.eta = eta;
  rep.r = r;
  const std::size_t cycles = short_cycle_vertices(g, 2 * r + 1).size();
  const boost::multiprecision::cpp_int delta = max_degree(g);
  const boost::multiprecision::cpp_int power = boost::multiprecision::pow(delta, static_cast<unsigned>(r));
  const Rational q = Rational(boost::multiprecision::cpp_int(k + static_cast<long long>(cycles)) * power) /
                     Rational(static_cast<long long>(g.n()));
  rep.exact = to_string(q);
  rep.value = to_double(q);
  rep.verdict = q <= rational_from_double(eta);
  rep.detail = "cycle_vertices=" + std::to_string(cycles) + " max_degree=" + std::to_string(max_degree(g));
  return rep;
}

namespace {

/// Picks k vertices from `cand` pairwise farther than `sep` apart.
bool pick_far(const MRFG& g, const std::vector<Vertex>& cand, int k, std::size_t sep, std::vector<Vertex>& chosen) {
  if (k == 0) return true;
  // near[i]: candidate indices within distance sep of cand[i].
  std::map<Vertex, std::size_t> index;
  for (std::size_t i = 0; i < cand.size(); ++i) index[cand[i]] = i;
  std::vector<std::vector<bool>> near(cand.size(), std::vector<bool>(cand.size(), false));
  for (std::size_t i = 0; i < cand.size(); ++i) {
    const std::array<Vertex, 1> src{cand[i]};
    const auto d = bfs_distances(g, src, sep);
    for (std::size_t j = 0; j < cand.size(); ++j) near[i][j] = d[static_cast<std::size_t>(cand[j])] != kInfiniteDistance;
  }
  std::size_t budget = 200000;
  std::vector<std::size_t> pick;
  auto rec = [&](auto&& self, std::size_t from) -> bool {
    if (static_cast<int>(pick.size()) == k) return true;
    if (budget == 0) return false;
    --budget;
    for (std::size_t i = from; i < cand.size(); ++i) {
      if (cand.size() - i < static_cast<std::size_t>(k) - pick.size()) return false;
      bool ok = true;
      for (std::size_t p : pick) ok = ok && !near[p][i];
      if (!ok) continue;
      pick.push_back(i);
      if (self(self, i + 1)) return true;
      pick.pop_back();
    }
    return false;
  };
  if (!rec(rec, 0)) return false;
  for (std::size_t p : pick) chosen.push_back(cand[p]);
  return true;
}

}  // namespace

AxiomReport check_richness(const MRFG& g, const GameParams& params, std::size_t r,
                           const std::vector<MRFG>& witness_trees) {
  AxiomReport rep;
  rep.axiom = Axiom::kRichness;
  rep.k = params.k;
  rep.epsilon = params.epsilon;
  rep.eta = params.eta;
  rep.r = r;
  const std::size_t sep = 2 * r + 1;
  std::vector<Vertex> sources = g.roots();
  for (Vertex v : short_cycle_vertices(g, sep)) sources.push_back(v);
  const auto dist = bfs_distances(g, sources, sep);
  std::vector<Vertex> remote;
  for (std::size_t v = 0; v < g.n(); ++v) {
    if (dist[v] == kInfiniteDistance) remote.push_back(static_cast<Vertex>(v));
  }
  rep.verdict = true;
  std::ostringstream detail;
  for (std::size_t ti = 0; ti < witness_trees.size(); ++ti) {
    const MRFG& tree = witness_trees[ti];
    if (tree.roots().size() != 1 || !is_forest(tree)) throw GraphError("witness trees must be singly rooted trees");
    const std::size_t h = tree_height(tree);
    if (h > r) throw GraphError("witness tree height exceeds r");
    for (std::size_t rp = h; rp <= r; ++rp) {
      std::vector<Vertex> cand;
      for (Vertex v : remote) {
        const MRFG b = ball(g, v, rp);
        if (b.dimension() != tree.dimension()) throw GraphError("witness tree has the wrong feature dimension");
        if (similar(b, tree, params)) cand.push_back(v);
      }
      std::vector<Vertex> chosen;
      const bool ok = pick_far(g, cand, params.k, sep, chosen);
      rep.witnesses.push_back(chosen);
      detail << "tree" << ti << "@r'=" << rp << ":" << cand.size() << " candidates" << (ok ? "" : " (fail)") << ";";
      rep.verdict = rep.verdict && ok;
    }
  }
  rep.value = rep.verdict ? 1.0 : 0.0;
  rep.detail = detail.str();
  return rep;
}

AxiomReport check_fbp_closeness(const MRFG& g, const GameParams& params, std::size_t r,
                                const FeaturePartition& partition, double c, const FeatureDistribution& d,
                                std::size_t mc, const RngStream& rng) {
  if (mc == 0) throw std::invalid_argument("mc must be >= 1");
  AxiomReport rep;
  rep.axiom = Axiom::kFbpCloseness;
  rep.k = params.k;
  rep.epsilon = params.epsilon;
  rep.eta = params.eta;
  rep.r = r;
  rep.verdict = true;
  rep.value = 1.0;
  const Rational target = Rational(1) - rational_from_double(params.eta);
  Rational worst = 1;
  for (std::size_t rp = 0; rp <= r; ++rp) {
    std::vector<MRFG> coll;
    coll.reserve(g.n() + mc);
    for (std::size_t v = 0; v < g.n(); ++v) coll.push_back(ball(g, static_cast<Vertex>(v), rp));
    const RngStream base = rng.split(rp);
    for (std::size_t s = 0; s < mc; ++s) {
      RngStream rs = base.split(s);
      coll.push_back(sample_fbp(c, d, rp, rs));
    }
    const auto labels = lift_partition(coll, partition, params.k, params.eta);
    const int classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
    std::vector<bool> has_tree(static_cast<std::size_t>(classes), false);
    std::vector<long long> count_g(static_cast<std::size_t>(classes), 0);
    std::vector<long long> count_t(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < coll.size(); ++i) {
      const auto l = static_cast<std::size_t>(labels[i]);
      if (i < g.n()) {
        ++count_g[l];
        if (is_forest(coll[i])) has_tree[l] = true;
      } else {
        ++count_t[l];
        has_tree[l] = true;
      }
    }
    std::vector<int> cell(static_cast<std::size_t>(classes), -1);
    int ell = 0;
    for (std::size_t l = 0; l < cell.size(); ++l) {
      if (has_tree[l]) cell[l] = ell++;
    }
    Rational matched = 0;
    if (g.n() > 0) {
      std::vector<Rational> x0;
      std::vector<Rational> x1;
      for (std::size_t l = 0; l < cell.size(); ++l) {
        x0.emplace_back(count_g[l], static_cast<long long>(g.n()));
        x1.emplace_back(count_t[l], static_cast<long long>(mc));
      }
      matched = construct_coupling_unchecked(x0, x1, cell, ell).diagonal_mass;
    }
    rep.per_radius.push_back(to_double(matched));
    worst = std::min(worst, matched);
    rep.verdict = rep.verdict && matched >= target;
  }
  rep.value = to_double(worst);
  rep.exact = to_string(worst);
  return rep;
}

// ---------------------------------------------------------------------------

PreservationResult verify_preservation(const Term& t, const MRFG& g, const MRFG& h, double epsilon,
                                       const SparseConfig& cfg, const RngStream& rng) {
  PreservationResult out;
  std::vector<Interval> box = cfg.distribution.support_box();
  for (const MRFG* x : {&g, &h}) {
    const auto& b = x->feature_box();
    for (std::size_t i = 0; i < std::min(box.size(), b.size()); ++i) {
      if (!x->empty()) box[i] = hull(box[i], b[i]);
    }
  }
  const auto m = metrics(t, box);
  // Over-approximating C only shrinks eta.
  const double C = std::max(1.0, subterm_magnitude(t, box));
  out.params = GameParams{m.srank + m.lmrank, epsilon, epsilon / (4.0 * C)};
  out.similar = similar(g, h, out.params);
  SparseController ctrl(t, cfg, rng);
  out.lambda_g = ctrl(g);
  out.lambda_h = ctrl(h);
  out.diff = std::fabs(out.lambda_g - out.lambda_h);
  out.bound = epsilon * m.slope;
  out.tolerance = mc_tolerance(t, cfg);
  out.pass = out.similar && out.diff <= out.bound + out.tolerance;
  return out;
}

}  // namespace agglogic
