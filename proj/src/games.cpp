#include "agglogic/games.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <map>
#include <set>

namespace agglogic {

namespace {

// Max flow from the left marginal to the right one through `relation`
// (Edmonds-Karp on the bipartite network).
template <class T>
T bipartite_max_flow(const std::vector<T>& left, const std::vector<T>& right,
                     const std::vector<std::vector<bool>>& relation) {
  const std::size_t a = left.size();
  const std::size_t b = right.size();
  // Residual capacities: source->i, i->j (unbounded, tracked as flow), j->sink.
  std::vector<T> src = left;
  std::vector<T> snk = right;
  std::vector<std::vector<T>> flow(a, std::vector<T>(b, T(0)));
  T total(0);
  while (true) {
    // BFS over left/right vertices. Left index i, right index a + j.
    std::vector<int> parent(a + b, -2);
    std::deque<std::size_t> queue;
    for (std::size_t i = 0; i < a; ++i) {
      if (src[i] > 0) {
        parent[i] = -1;
        queue.push_back(i);
      }
    }
    std::size_t end = a + b;
    while (!queue.empty() && end == a + b) {
      const std::size_t x = queue.front();
      queue.pop_front();
      if (x < a) {
        for (std::size_t j = 0; j < b; ++j) {
          if (relation[x][j] && parent[a + j] == -2) {
            parent[a + j] = static_cast<int>(x);
            if (snk[j] > 0) {
              end = a + j;
              break;
            }
            queue.push_back(a + j);
          }
        }
      } else {
        const std::size_t j = x - a;
        for (std::size_t i = 0; i < a; ++i) {
          if (flow[i][j] > 0 && parent[i] == -2) {
            parent[i] = static_cast<int>(x);
            queue.push_back(i);
          }
        }
      }
    }
    if (end == a + b) return total;
    // Bottleneck.
    T bottleneck = snk[end - a];
    std::size_t x = end;
    while (true) {
      const int px = parent[x];
      if (px == -1) {
        bottleneck = std::min(bottleneck, src[x]);
        break;
      }
      if (x >= a) {
        x = static_cast<std::size_t>(px);  // forward edge px -> x, unbounded
      } else {
        bottleneck = std::min(bottleneck, flow[x][static_cast<std::size_t>(px) - a]);
        x = static_cast<std::size_t>(px);
      }
    }
    // Augment.
    snk[end - a] -= bottleneck;
    x = end;
    while (true) {
      const int px = parent[x];
      if (px == -1) {
        src[x] -= bottleneck;
        break;
      }
      if (x >= a) {
        flow[static_cast<std::size_t>(px)][x - a] += bottleneck;
      } else {
        flow[x][static_cast<std::size_t>(px) - a] -= bottleneck;
      }
      x = static_cast<std::size_t>(px);
    }
    total += bottleneck;
  }
}

Rational sum(std::span<const Rational> xs) {
  Rational s = 0;
  for (const auto& x : xs) s += x;
  return s;
}

}  // namespace

Rational max_coupling_mass(std::span<const Rational> a, std::span<const Rational> b,
                           const std::vector<std::vector<bool>>& relation) {
  if (sum(a) != 1 || sum(b) != 1) throw CouplingError("marginals must sum to 1", -2);
  if (relation.size() != a.size()) throw CouplingError("relation has wrong shape", -2);
  for (const auto& row : relation) {
    if (row.size() != b.size()) throw CouplingError("relation has wrong shape", -2);
  }
  return bipartite_max_flow<Rational>(std::vector<Rational>(a.begin(), a.end()),
                                      std::vector<Rational>(b.begin(), b.end()), relation);
}

// ---------------------------------------------------------------------------

SimilarityOracle::SimilarityOracle(const MRFG& g, const MRFG& h, double epsilon, double eta)
    : g_(g), h_(h), epsilon_(epsilon), one_minus_eta_(Rational(1) - rational_from_double(eta)) {
  if (g.dimension() != h.dimension()) throw GraphError("similarity needs equal feature dimensions");
}

bool SimilarityOracle::base(const std::vector<Vertex>& rg, const std::vector<Vertex>& rh) const {
  for (std::size_t i = 0; i < rg.size(); ++i) {
    const auto fg = g_.features(rg[i]);
    const auto fh = h_.features(rh[i]);
    for (std::size_t c = 0; c < fg.size(); ++c) {
      if (std::fabs(fg[c] - fh[c]) > epsilon_) return false;
    }
    for (std::size_t j = i + 1; j < rg.size(); ++j) {
      if ((rg[i] == rg[j]) != (rh[i] == rh[j])) return false;
      if (g_.adjacent(rg[i], rg[j]) != h_.adjacent(rh[i], rh[j])) return false;
    }
  }
  return true;
}

bool SimilarityOracle::extension_ok(const std::vector<Vertex>& rg, Vertex p, const std::vector<Vertex>& rh,
                                    Vertex q) const {
  const auto fg = g_.features(p);
  const auto fh = h_.features(q);
  for (std::size_t c = 0; c < fg.size(); ++c) {
    if (std::fabs(fg[c] - fh[c]) > epsilon_) return false;
  }
  for (std::size_t i = 0; i < rg.size(); ++i) {
    if ((rg[i] == p) != (rh[i] == q)) return false;
    if (g_.adjacent(rg[i], p) != h_.adjacent(rh[i], q)) return false;
  }
  return true;
}

bool SimilarityOracle::similar(const std::vector<Vertex>& roots_g, const std::vector<Vertex>& roots_h, int k) {
  if (roots_g.size() != roots_h.size()) throw GraphError("similarity needs equal root counts");
  auto key = std::make_tuple(roots_g, roots_h, k);
  if (auto it = memo_.find(key); it != memo_.end()) return it->second;
  const bool r = compute(roots_g, roots_h, k);
  memo_.emplace(std::move(key), r);
  return r;
}

bool SimilarityOracle::compute(const std::vector<Vertex>& rg, const std::vector<Vertex>& rh, int k) {
  // For k >= 1 the base condition is implied whenever the graphs are
  // nonempty, so checking it first only prunes.
  if (!base(rg, rh)) return false;
  if (k == 0) return true;

  std::vector<Vertex> eg = rg;
  std::vector<Vertex> eh = rh;
  eg.push_back(0);
  eh.push_back(0);

  // Neighborhood coupling.
  for (std::size_t i = 0; i < rg.size(); ++i) {
    const auto& ng = g_.neighbors(rg[i]);
    const auto& nh = h_.neighbors(rh[i]);
    if (ng.empty() != nh.empty()) return false;
    if (ng.empty()) continue;
    std::vector<std::vector<bool>> rel(ng.size(), std::vector<bool>(nh.size(), false));
    for (std::size_t a = 0; a < ng.size(); ++a) {
      for (std::size_t b = 0; b < nh.size(); ++b) {
        if (!extension_ok(rg, ng[a], rh, nh[b])) continue;
        eg.back() = ng[a];
        eh.back() = nh[b];
        rel[a][b] = similar(eg, eh, k - 1);
      }
    }
    // Uniform marginals scaled by |Ne(g)| * |Ne(h)| give integer capacities.
    const auto dg = static_cast<long long>(ng.size());
    const auto dh = static_cast<long long>(nh.size());
    const long long flow =
        bipartite_max_flow<long long>(std::vector<long long>(ng.size(), dh), std::vector<long long>(nh.size(), dg), rel);
    if (Rational(flow, dg * dh) < one_minus_eta_) return false;
  }

  // Back and forth.
  auto find_partner = [&](Vertex p, bool from_g) {
    const MRFG& other = from_g ? h_ : g_;
    auto try_q = [&](Vertex q) {
      if (from_g) {
        if (!extension_ok(rg, p, rh, q)) return false;
        eg.back() = p;
        eh.back() = q;
      } else {
        if (!extension_ok(rg, q, rh, p)) return false;
        eg.back() = q;
        eh.back() = p;
      }
      return similar(eg, eh, k - 1);
    };
    if (static_cast<std::size_t>(p) < other.n() && try_q(p)) return true;
    for (std::size_t q = 0; q < other.n(); ++q) {
      if (static_cast<Vertex>(q) != p && try_q(static_cast<Vertex>(q))) return true;
    }
    return false;
  };
  for (std::size_t p = 0; p < g_.n(); ++p) {
    if (!find_partner(static_cast<Vertex>(p), true)) return false;
  }
  for (std::size_t q = 0; q < h_.n(); ++q) {
    if (!find_partner(static_cast<Vertex>(q), false)) return false;
  }
  return true;
}

bool similar(const MRFG& g, const MRFG& h, const GameParams& params) {
  if (g.roots().size() != h.roots().size()) {
    throw GraphError("similarity needs equal root counts (" + std::to_string(g.roots().size()) + " vs " +
                     std::to_string(h.roots().size()) + ")");
  }
  SimilarityOracle oracle(g, h, params.epsilon, params.eta);
  return oracle.similar(g.roots(), h.roots(), params.k);
}

// ---------------------------------------------------------------------------

std::vector<Rational> CouplingTable::row_sums() const {
  std::vector<Rational> out;
  for (const auto& row : weights) {
    Rational s = 0;
    for (const auto& w : row) s += w;
    out.push_back(s);
  }
  return out;
}

std::vector<Rational> CouplingTable::column_sums() const {
  std::vector<Rational> out(weights.empty() ? 0 : weights.front().size(), Rational(0));
  for (const auto& row : weights) {
    for (std::size_t j = 0; j < row.size(); ++j) out[j] += row[j];
  }
  return out;
}

Rational CouplingTable::same_cell_mass(std::span<const int> cell) const {
  Rational s = 0;
  for (std::size_t a = 0; a < weights.size(); ++a) {
    for (std::size_t b = 0; b < weights[a].size(); ++b) {
      if (cell[a] >= 0 && cell[a] == cell[b]) s += weights[a][b];
    }
  }
  return s;
}

namespace {

struct CellMasses {
  std::vector<Rational> p0;  // index ell is T
  std::vector<Rational> p1;
};

CellMasses cell_masses(std::span<const Rational> x0, std::span<const Rational> x1, std::span<const int> cell, int ell) {
  if (x0.size() != cell.size() || x1.size() != cell.size()) throw CouplingError("size mismatch", -2);
  if (ell < 0) throw CouplingError("negative partition size", -2);
  for (const auto& w : x0) {
    if (w < 0) throw CouplingError("negative weight", -2);
  }
  for (const auto& w : x1) {
    if (w < 0) throw CouplingError("negative weight", -2);
  }
  if (sum(x0) != 1 || sum(x1) != 1) throw CouplingError("distributions must sum to 1", -2);
  CellMasses m{std::vector<Rational>(static_cast<std::size_t>(ell) + 1, Rational(0)),
               std::vector<Rational>(static_cast<std::size_t>(ell) + 1, Rational(0))};
  for (std::size_t e = 0; e < cell.size(); ++e) {
    if (cell[e] < -1 || cell[e] >= ell) throw CouplingError("cell index out of range", cell[e]);
    const auto c = static_cast<std::size_t>(cell[e] < 0 ? ell : cell[e]);
    m.p0[c] += x0[e];
    m.p1[c] += x1[e];
  }
  return m;
}

}  // namespace

CouplingTable construct_coupling_unchecked(std::span<const Rational> x0, std::span<const Rational> x1,
                                           std::span<const int> cell, int ell) {
  const CellMasses m = cell_masses(x0, x1, cell, ell);
  const auto L = static_cast<std::size_t>(ell);
  CouplingTable t;
  t.q.assign(L, Rational(0));
  std::vector<Rational> p0(L + 1);
  std::vector<Rational> p1(L + 1);
  t.diagonal_mass = 0;
  for (std::size_t i = 0; i < L; ++i) {
    t.q[i] = std::min(m.p0[i], m.p1[i]);
    p0[i] = std::max(Rational(0), Rational(m.p0[i] - m.p1[i]));
    p1[i] = std::max(Rational(0), Rational(m.p1[i] - m.p0[i]));
    t.diagonal_mass += t.q[i];
  }
  p0[L] = m.p0[L];
  p1[L] = m.p1[L];
  t.p = Rational(1) - t.diagonal_mass;

  const std::size_t M = cell.size();
  auto idx = [&](std::size_t e) { return static_cast<std::size_t>(cell[e] < 0 ? ell : cell[e]); };
  t.weights.assign(M, std::vector<Rational>(M, Rational(0)));
  for (std::size_t a = 0; a < M; ++a) {
    if (x0[a] == 0) continue;
    const std::size_t ca = idx(a);
    const Rational cond0 = x0[a] / m.p0[ca];
    for (std::size_t b = 0; b < M; ++b) {
      if (x1[b] == 0) continue;
      const std::size_t cb = idx(b);
      const Rational cond1 = x1[b] / m.p1[cb];
      Rational w = 0;
      if (ca == cb && ca < L && t.q[ca] != 0) w += t.q[ca] * cond0 * cond1;
      if (t.p != 0 && p0[ca] != 0 && p1[cb] != 0) w += p0[ca] * p1[cb] / t.p * cond0 * cond1;
      t.weights[a][b] = w;
    }
  }
  return t;
}

CouplingTable construct_coupling(std::span<const Rational> x0, std::span<const Rational> x1, std::span<const int> cell,
                                 int ell, const Rational& nu, const Rational& nu_prime) {
  const CellMasses m = cell_masses(x0, x1, cell, ell);
  for (int i = 0; i < ell; ++i) {
    const auto diff = abs(m.p0[static_cast<std::size_t>(i)] - m.p1[static_cast<std::size_t>(i)]);
    if (diff * ell > nu) {
      throw CouplingError("cell " + std::to_string(i) + " masses differ by " + to_string(Rational(diff)) +
                              ", more than nu/ell",
                          i);
    }
  }
  const auto L = static_cast<std::size_t>(ell);
  if (m.p0[L] + m.p1[L] > nu_prime) {
    throw CouplingError("mass on T is " + to_string(Rational(m.p0[L] + m.p1[L])) + ", more than nu'", -1);
  }
  return construct_coupling_unchecked(x0, x1, cell, ell);
}

// ---------------------------------------------------------------------------

FeaturePartition::FeaturePartition(const FeatureDistribution& d, double epsilon)
    : box_(d.support_box()), epsilon_(epsilon) {
  if (!(epsilon > 0.0)) throw std::invalid_argument("partition mesh must be positive");
  std::size_t total = 1;
  for (const auto& iv : box_) {
    const double cells = std::max(1.0, std::ceil(iv.width() / epsilon));
    if (cells > 1e6) throw std::invalid_argument("feature partition too fine");
    per_dim_.push_back(static_cast<int>(cells));
    total *= static_cast<std::size_t>(cells);
    if (total > 10'000'000) throw std::invalid_argument("feature partition too fine");
  }
  valid_.assign(total, d.kind != FeatureDistribution::Kind::kDiscrete);
  auto mark_points = [&](const std::vector<std::vector<double>>& points) {
    for (const auto& p : points) {
      int c = 0;
      for (std::size_t i = 0; i < box_.size(); ++i) {
        int k = static_cast<int>(std::floor((p[i] - box_[i].lo) / epsilon_));
        k = std::clamp(k, 0, per_dim_[i] - 1);
        c = c * per_dim_[i] + k;
      }
      valid_[static_cast<std::size_t>(c)] = true;
    }
  };
  if (d.kind == FeatureDistribution::Kind::kDiscrete) {
    mark_points(d.special_points());
  } else if (d.kind == FeatureDistribution::Kind::kProduct) {
    // A cell has mass iff each coordinate's interval has mass.
    std::vector<std::vector<bool>> ok1(box_.size());
    for (std::size_t i = 0; i < box_.size(); ++i) {
      const auto& c = d.coordinates[i];
      ok1[i].assign(static_cast<std::size_t>(per_dim_[i]), c.kind != FeatureDistribution::Kind::kDiscrete);
      if (c.kind == FeatureDistribution::Kind::kDiscrete) {
        for (const auto& a : c.atoms) {
          int k = static_cast<int>(std::floor((a.point[0] - box_[i].lo) / epsilon_));
          ok1[i][static_cast<std::size_t>(std::clamp(k, 0, per_dim_[i] - 1))] = true;
        }
      } else if (c.kind == FeatureDistribution::Kind::kUniformBox) {
        // Cells outside this coordinate's own interval carry no mass.
        const auto iv = c.box.front();
        for (int k = 0; k < per_dim_[i]; ++k) {
          const double lo = box_[i].lo + k * epsilon_;
          const double hi = lo + epsilon_;
          ok1[i][static_cast<std::size_t>(k)] = iv.width() == 0.0 ? (iv.lo >= lo && iv.lo < hi) || per_dim_[i] == 1
                                                                  : (hi > iv.lo && lo < iv.hi);
        }
      }
    }
    for (std::size_t c = 0; c < total; ++c) {
      std::size_t rest = c;
      bool ok = true;
      for (std::size_t i = box_.size(); i-- > 0;) {
        const auto k = rest % static_cast<std::size_t>(per_dim_[i]);
        rest /= static_cast<std::size_t>(per_dim_[i]);
        ok = ok && ok1[i][k];
      }
      valid_[c] = ok;
    }
  }
}

FeaturePartition FeaturePartition::trivial(const FeatureDistribution& d) {
  FeaturePartition p;
  p.box_ = d.support_box();
  p.epsilon_ = std::numeric_limits<double>::infinity();
  for (const auto& iv : p.box_) {
    (void)iv;
    p.per_dim_.push_back(1);
  }
  p.valid_.assign(1, true);
  p.trivial_ = true;
  return p;
}

int FeaturePartition::grid_cell(std::span<const double> x) const {
  if (trivial_) return 0;
  int c = 0;
  for (std::size_t i = 0; i < box_.size(); ++i) {
    int k = static_cast<int>(std::floor((x[i] - box_[i].lo) / epsilon_));
    k = std::clamp(k, 0, per_dim_[i] - 1);
    c = c * per_dim_[i] + k;
  }
  return c;
}

int FeaturePartition::cell(std::span<const double> x) const {
  const int c = grid_cell(x);
  return valid_[static_cast<std::size_t>(c)] ? c : -1;
}

std::vector<double> FeaturePartition::cell_corner(int c) const {
  std::vector<double> out(box_.size());
  auto rest = static_cast<std::size_t>(c);
  for (std::size_t i = box_.size(); i-- > 0;) {
    const auto k = rest % static_cast<std::size_t>(per_dim_[i]);
    rest /= static_cast<std::size_t>(per_dim_[i]);
    out[i] = trivial_ ? box_[i].lo : box_[i].lo + static_cast<double>(k) * epsilon_;
  }
  return out;
}

std::vector<double> FeaturePartition::cell_center(int c) const {
  std::vector<double> out = cell_corner(c);
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double half = trivial_ ? box_[i].width() / 2 : epsilon_ / 2;
    out[i] = std::clamp(out[i] + half, box_[i].lo, box_[i].hi);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct LiftItem {
  int graph;
  std::vector<Vertex> roots;
};

std::vector<int> intern(const std::vector<std::vector<long long>>& keys) {
  std::map<std::vector<long long>, int> ids;
  std::vector<int> out;
  out.reserve(keys.size());
  for (const auto& k : keys) {
    auto [it, fresh] = ids.emplace(k, static_cast<int>(ids.size()));
    out.push_back(it->second);
  }
  return out;
}

std::vector<int> lift_level(std::span<const MRFG> coll, const std::vector<LiftItem>& items,
                            const FeaturePartition& part, int k, const Rational& eta) {
  std::vector<std::vector<long long>> keys(items.size());
  if (k == 0) {
    for (std::size_t it = 0; it < items.size(); ++it) {
      const MRFG& g = coll[static_cast<std::size_t>(items[it].graph)];
      const auto& r = items[it].roots;
      auto& key = keys[it];
      key.push_back(static_cast<long long>(r.size()));
      for (std::size_t i = 0; i < r.size(); ++i) {
        key.push_back(part.grid_cell(g.features(r[i])));
        for (std::size_t j = i + 1; j < r.size(); ++j) {
          key.push_back(r[i] == r[j] ? 2 : (g.adjacent(r[i], r[j]) ? 1 : 0));
        }
      }
    }
    return intern(keys);
  }

  std::vector<LiftItem> children;
  std::vector<std::size_t> offset(items.size() + 1, 0);
  for (std::size_t it = 0; it < items.size(); ++it) {
    const MRFG& g = coll[static_cast<std::size_t>(items[it].graph)];
    offset[it] = children.size();
    for (std::size_t p = 0; p < g.n(); ++p) {
      LiftItem c{items[it].graph, items[it].roots};
      c.roots.push_back(static_cast<Vertex>(p));
      children.push_back(std::move(c));
    }
  }
  offset[items.size()] = children.size();
  const std::vector<int> child = lift_level(coll, children, part, k - 1, eta);
  const long long ell = child.empty() ? 1 : *std::max_element(child.begin(), child.end()) + 1;

  for (std::size_t it = 0; it < items.size(); ++it) {
    const MRFG& g = coll[static_cast<std::size_t>(items[it].graph)];
    auto& key = keys[it];
    // (I) the set of child classes.
    std::set<int> present(child.begin() + static_cast<std::ptrdiff_t>(offset[it]),
                          child.begin() + static_cast<std::ptrdiff_t>(offset[it + 1]));
    key.push_back(static_cast<long long>(present.size()));
    key.insert(key.end(), present.begin(), present.end());
    // (II) per root: isolation and discretized neighbor class proportions.
    for (Vertex root : items[it].roots) {
      const auto& nb = g.neighbors(root);
      key.push_back(-1);
      if (nb.empty()) continue;
      std::map<int, long long> count;
      for (Vertex w : nb) ++count[child[offset[it] + static_cast<std::size_t>(w)]];
      const auto deg = static_cast<long long>(nb.size());
      for (auto [label, c] : count) {
        // Interval index floor((c / deg) / (eta / ell)).
        const Rational x = Rational(c * ell, deg) / eta;
        const boost::multiprecision::cpp_int q = numerator(x) / denominator(x);
        const long long index = q.convert_to<long long>();
        if (index > 0) {
          key.push_back(label);
          key.push_back(index);
        }
      }
    }
  }
  return intern(keys);
}

}  // namespace

std::vector<int> lift_partition(std::span<const MRFG> collection, const FeaturePartition& partition, int k,
                                double eta) {
  if (collection.empty()) return {};
  const std::size_t m = collection.front().roots().size();
  const std::size_t dim = collection.front().dimension();
  for (const auto& g : collection) {
    if (g.roots().size() != m) throw GraphError("lift_partition needs a common root count");
    if (g.dimension() != dim) throw GraphError("lift_partition needs a common feature dimension");
  }
  if (!(eta > 0.0)) throw std::invalid_argument("eta must be positive");
  std::vector<LiftItem> items;
  for (std::size_t i = 0; i < collection.size(); ++i) items.push_back({static_cast<int>(i), collection[i].roots()});
  return lift_level(collection, items, partition, k, rational_from_double(eta));
}

}  // namespace agglogic
