#include "agglogic/graph.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <deque>
#include <functional>
#include <map>
#include <nlohmann/json.hpp>
#include <numeric>
#include <set>

namespace agglogic {

namespace {

std::vector<Interval> hull_box(std::size_t n, std::size_t d, const std::vector<double>& features) {
  std::vector<Interval> box(d);
  for (std::size_t i = 0; i < d; ++i) {
    if (n == 0) continue;
    box[i] = {features[i], features[i]};
    for (std::size_t v = 1; v < n; ++v) box[i] = hull(box[i], features[v * d + i]);
  }
  return box;
}

void check_vertex(const MRFG& g, Vertex v) {
  if (v < 0 || static_cast<std::size_t>(v) >= g.n()) {
    throw GraphError("invalid vertex id " + std::to_string(v) + " for graph with " + std::to_string(g.n()) +
                     " vertices");
  }
}

}  // namespace

MRFG::MRFG(std::size_t n, std::span<const Edge> edges, std::vector<Vertex> roots, std::size_t d,
           std::vector<double> features, std::vector<Interval> feature_box)
    : adj_(n), roots_(std::move(roots)), d_(d), features_(std::move(features)), box_(std::move(feature_box)) {
  for (auto [a, b] : edges) {
    if (a < 0 || b < 0 || static_cast<std::size_t>(a) >= n || static_cast<std::size_t>(b) >= n) {
      throw GraphError("edge endpoint out of range");
    }
    if (a == b) throw GraphError("self-loop at vertex " + std::to_string(a));
    adj_[static_cast<std::size_t>(a)].push_back(b);
    adj_[static_cast<std::size_t>(b)].push_back(a);
  }
  for (auto& nb : adj_) {
    std::sort(nb.begin(), nb.end());
    nb.erase(std::unique(nb.begin(), nb.end()), nb.end());
  }
  for (Vertex r : roots_) {
    if (r < 0 || static_cast<std::size_t>(r) >= n) throw GraphError("root id out of range");
  }
  if (features_.size() != n * d) throw GraphError("feature matrix has wrong size");
  if (box_.empty()) {
    box_ = hull_box(n, d, features_);
  } else {
    if (box_.size() != d) throw GraphError("feature box has wrong dimension");
    for (std::size_t v = 0; v < n; ++v) {
      for (std::size_t i = 0; i < d; ++i) {
        if (!box_[i].contains(features_[v * d + i])) throw GraphError("feature outside the feature box");
      }
    }
  }
}

MRFG MRFG::from_adjacency(std::vector<std::vector<Vertex>> adjacency, std::vector<Vertex> roots, std::size_t d,
                          std::vector<double> features, std::vector<Interval> feature_box) {
  MRFG g;
  g.adj_ = std::move(adjacency);
  g.roots_ = std::move(roots);
  g.d_ = d;
  g.features_ = std::move(features);
  g.box_ = feature_box.size() == d ? std::move(feature_box) : hull_box(g.adj_.size(), d, g.features_);
  return g;
}

MRFG MRFG::plain(std::size_t n, std::span<const Edge> edges, std::vector<Vertex> roots) {
  return MRFG(n, edges, std::move(roots), 0, {});
}

bool MRFG::adjacent(Vertex u, Vertex v) const {
  const auto& a = adj_[static_cast<std::size_t>(u)];
  const auto& b = adj_[static_cast<std::size_t>(v)];
  return a.size() <= b.size() ? std::binary_search(a.begin(), a.end(), v) : std::binary_search(b.begin(), b.end(), u);
}

std::size_t MRFG::edge_count() const {
  std::size_t s = 0;
  for (const auto& nb : adj_) s += nb.size();
  return s / 2;
}

std::vector<Edge> MRFG::edges() const {
  std::vector<Edge> out;
  for (std::size_t u = 0; u < adj_.size(); ++u) {
    for (Vertex v : adj_[u]) {
      if (static_cast<Vertex>(u) < v) out.emplace_back(static_cast<Vertex>(u), v);
    }
  }
  return out;
}

MRFG MRFG::with_roots(std::vector<Vertex> roots) const {
  for (Vertex r : roots) check_vertex(*this, r);
  MRFG g = *this;
  g.roots_ = std::move(roots);
  return g;
}

MRFG MRFG::with_features(std::vector<double> features) const {
  if (features.size() != features_.size()) throw GraphError("feature matrix has wrong size");
  MRFG g = *this;
  g.features_ = std::move(features);
  for (std::size_t v = 0; v < n(); ++v) {
    for (std::size_t i = 0; i < d_; ++i) g.box_[i] = hull(g.box_[i], g.features_[v * d_ + i]);
  }
  return g;
}

MRFG induced_subgraph(const MRFG& g, std::span<const Vertex> vertices, std::span<const Vertex> roots) {
  std::vector<Vertex> keep(vertices.begin(), vertices.end());
  std::sort(keep.begin(), keep.end());
  keep.erase(std::unique(keep.begin(), keep.end()), keep.end());
  std::vector<Vertex> index(g.n(), -1);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    check_vertex(g, keep[i]);
    index[static_cast<std::size_t>(keep[i])] = static_cast<Vertex>(i);
  }
  std::vector<std::vector<Vertex>> adj(keep.size());
  const std::size_t d = g.dimension();
  std::vector<double> features(keep.size() * d);
  for (std::size_t i = 0; i < keep.size(); ++i) {
    for (Vertex w : g.neighbors(keep[i])) {
      if (index[static_cast<std::size_t>(w)] >= 0) adj[i].push_back(index[static_cast<std::size_t>(w)]);
    }
    auto f = g.features(keep[i]);
    std::copy(f.begin(), f.end(), features.begin() + static_cast<std::ptrdiff_t>(i * d));
  }
  std::vector<Vertex> new_roots;
  for (Vertex r : roots) {
    check_vertex(g, r);
    if (index[static_cast<std::size_t>(r)] < 0) throw GraphError("root outside the induced vertex set");
    new_roots.push_back(index[static_cast<std::size_t>(r)]);
  }
  return MRFG::from_adjacency(std::move(adj), std::move(new_roots), d, std::move(features), g.feature_box());
}

std::vector<std::size_t> bfs_distances(const MRFG& g, std::span<const Vertex> sources, std::size_t max_depth) {
  std::vector<std::size_t> dist(g.n(), kInfiniteDistance);
  std::vector<Vertex> frontier;
  for (Vertex s : sources) {
    check_vertex(g, s);
    if (dist[static_cast<std::size_t>(s)] != 0) {
      dist[static_cast<std::size_t>(s)] = 0;
      frontier.push_back(s);
    }
  }
  std::vector<Vertex> next;
  for (std::size_t depth = 0; depth < max_depth && !frontier.empty(); ++depth) {
    next.clear();
    for (Vertex u : frontier) {
      for (Vertex w : g.neighbors(u)) {
        if (dist[static_cast<std::size_t>(w)] == kInfiniteDistance) {
          dist[static_cast<std::size_t>(w)] = depth + 1;
          next.push_back(w);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

std::size_t distance(const MRFG& g, Vertex u, Vertex v) {
  check_vertex(g, u);
  check_vertex(g, v);
  const std::array<Vertex, 1> src{u};
  return bfs_distances(g, src)[static_cast<std::size_t>(v)];
}

std::size_t max_degree(const MRFG& g) {
  std::size_t m = 0;
  for (std::size_t v = 0; v < g.n(); ++v) m = std::max(m, g.degree(static_cast<Vertex>(v)));
  return m;
}

MRFG append_root(const MRFG& g, Vertex v) {
  check_vertex(g, v);
  std::vector<Vertex> roots = g.roots();
  roots.push_back(v);
  return g.with_roots(std::move(roots));
}

std::vector<Vertex> ball_vertices(const MRFG& g, Vertex v, std::size_t r) {
  check_vertex(g, v);
  const std::array<Vertex, 1> src{v};
  const auto dist = bfs_distances(g, src, r);
  std::vector<Vertex> out;
  for (std::size_t u = 0; u < g.n(); ++u) {
    if (dist[u] <= r) out.push_back(static_cast<Vertex>(u));
  }
  return out;
}

MRFG ball(const MRFG& g, Vertex v, std::size_t r) {
  const auto vs = ball_vertices(g, v, r);
  const std::array<Vertex, 1> root{v};
  return induced_subgraph(g, vs, root);
}

std::vector<Vertex> short_cycle_vertices(const MRFG& g, std::size_t L) {
  std::vector<Vertex> out;
  if (L < 3) return out;
  const std::size_t depth_limit = L / 2;
  const std::size_t n = g.n();
  std::vector<std::size_t> dist(n, kInfiniteDistance);
  std::vector<Vertex> branch(n, -1);
  std::vector<Vertex> order;
  for (std::size_t s = 0; s < n; ++s) {
    // A vertex of degree < 2 lies on no cycle.
    if (g.degree(static_cast<Vertex>(s)) < 2) continue;
    order.clear();
    dist[s] = 0;
    order.push_back(static_cast<Vertex>(s));
    bool found = false;
    for (std::size_t head = 0; head < order.size() && !found; ++head) {
      const Vertex u = order[head];
      const std::size_t du = dist[static_cast<std::size_t>(u)];
      for (Vertex w : g.neighbors(u)) {
        const auto wi = static_cast<std::size_t>(w);
        if (dist[wi] == kInfiniteDistance) {
          if (du + 1 > depth_limit) continue;
          dist[wi] = du + 1;
          branch[wi] = du == 0 ? w : branch[static_cast<std::size_t>(u)];
          order.push_back(w);
        } else if (du > 0 && dist[wi] > 0 && branch[wi] != branch[static_cast<std::size_t>(u)] &&
                   du + dist[wi] + 1 <= L) {
          found = true;
          break;
        }
      }
    }
    for (Vertex v : order) {
      dist[static_cast<std::size_t>(v)] = kInfiniteDistance;
      branch[static_cast<std::size_t>(v)] = -1;
    }
    if (found) out.push_back(static_cast<Vertex>(s));
  }
  return out;
}

std::vector<Vertex> core_vertices(const MRFG& g, std::size_t r) {
  std::vector<Vertex> sources = short_cycle_vertices(g, 2 * r + 1);
  sources.insert(sources.end(), g.roots().begin(), g.roots().end());
  const auto dist = bfs_distances(g, sources, r);
  std::vector<Vertex> out;
  for (std::size_t v = 0; v < g.n(); ++v) {
    if (dist[v] <= r) out.push_back(static_cast<Vertex>(v));
  }
  return out;
}

MRFG core(const MRFG& g, std::size_t r) { return induced_subgraph(g, core_vertices(g, r), g.roots()); }

MRFG disjoint_union(const MRFG& g, const MRFG& h) {
  if (g.dimension() != h.dimension()) {
    throw GraphError("feature dimension mismatch in disjoint union: " + std::to_string(g.dimension()) + " vs " +
                     std::to_string(h.dimension()));
  }
  const auto offset = static_cast<Vertex>(g.n());
  std::vector<std::vector<Vertex>> adj = g.adjacency();
  adj.reserve(g.n() + h.n());
  for (const auto& nb : h.adjacency()) {
    std::vector<Vertex> shifted(nb.size());
    std::transform(nb.begin(), nb.end(), shifted.begin(), [&](Vertex v) { return v + offset; });
    adj.push_back(std::move(shifted));
  }
  std::vector<Vertex> roots = g.roots();
  for (Vertex r : h.roots()) roots.push_back(r + offset);
  std::vector<double> features = g.feature_matrix();
  features.insert(features.end(), h.feature_matrix().begin(), h.feature_matrix().end());
  std::vector<Interval> box = g.feature_box();
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (g.empty()) {
      box[i] = h.feature_box()[i];
    } else if (!h.empty()) {
      box[i] = hull(box[i], h.feature_box()[i]);
    }
  }
  return MRFG::from_adjacency(std::move(adj), std::move(roots), g.dimension(), std::move(features), std::move(box));
}

std::size_t count_triangles(const MRFG& g) {
  std::size_t count = 0;
  for (std::size_t u = 0; u < g.n(); ++u) {
    const auto& nu = g.neighbors(static_cast<Vertex>(u));
    for (Vertex v : nu) {
      if (v <= static_cast<Vertex>(u)) continue;
      const auto& nv = g.neighbors(v);
      // common neighbors w > v
      auto a = std::upper_bound(nu.begin(), nu.end(), v);
      auto b = std::upper_bound(nv.begin(), nv.end(), v);
      while (a != nu.end() && b != nv.end()) {
        if (*a < *b) {
          ++a;
        } else if (*b < *a) {
          ++b;
        } else {
          ++count;
          ++a;
          ++b;
        }
      }
    }
  }
  return count;
}

std::size_t count_cycles(const MRFG& g, std::size_t L) {
  if (L < 3) return 0;
  // Each cycle is counted once from its smallest vertex, in one direction.
  std::size_t count = 0;
  std::vector<char> on_path(g.n(), 0);
  std::vector<Vertex> path;
  std::function<void(Vertex)> dfs = [&](Vertex u) {
    const Vertex start = path.front();
    if (path.size() == L) {
      if (g.adjacent(u, start) && path[1] < u) ++count;
      return;
    }
    for (Vertex w : g.neighbors(u)) {
      if (w <= start || on_path[static_cast<std::size_t>(w)]) continue;
      on_path[static_cast<std::size_t>(w)] = 1;
      path.push_back(w);
      dfs(w);
      path.pop_back();
      on_path[static_cast<std::size_t>(w)] = 0;
    }
  };
  for (std::size_t s = 0; s < g.n(); ++s) {
    path.assign(1, static_cast<Vertex>(s));
    on_path[s] = 1;
    dfs(static_cast<Vertex>(s));
    on_path[s] = 0;
  }
  return count;
}

bool is_forest(const MRFG& g) {
  std::vector<Vertex> parent(g.n());
  std::iota(parent.begin(), parent.end(), 0);
  std::function<Vertex(Vertex)> find = [&](Vertex x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] = parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (auto [a, b] : g.edges()) {
    const Vertex ra = find(a);
    const Vertex rb = find(b);
    if (ra == rb) return false;
    parent[static_cast<std::size_t>(ra)] = rb;
  }
  return true;
}

std::size_t tree_height(const MRFG& g) {
  if (g.roots().empty()) throw GraphError("tree_height needs a root");
  const std::array<Vertex, 1> src{g.root(0)};
  std::size_t h = 0;
  for (std::size_t d : bfs_distances(g, src)) {
    if (d != kInfiniteDistance) h = std::max(h, d);
  }
  return h;
}

// ---------------------------------------------------------------------------
// Canonical forms

namespace {

std::string format_double(double x) {
  std::array<char, 40> buf{};
  auto [p, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x, std::chars_format::hex);
  return {buf.data(), p};
}

class Canonizer {
 public:
  Canonizer(const MRFG& g, bool features, std::size_t budget) : g_(g), budget_(budget) {
    labels_.resize(g.n());
    std::vector<std::vector<std::size_t>> positions(g.n());
    for (std::size_t i = 0; i < g.roots().size(); ++i) positions[static_cast<std::size_t>(g.root(i))].push_back(i);
    for (std::size_t v = 0; v < g.n(); ++v) {
      std::string s;
      for (std::size_t p : positions[v]) s += "r" + std::to_string(p);
      if (features) {
        for (double x : g.features(static_cast<Vertex>(v))) s += "f" + format_double(x);
      }
      labels_[v] = std::move(s);
    }
  }

  std::string run() {
    std::vector<char> seen(g_.n(), 0);
    std::vector<std::string> parts;
    for (std::size_t s = 0; s < g_.n(); ++s) {
      if (seen[s]) continue;
      std::vector<Vertex> comp{static_cast<Vertex>(s)};
      seen[s] = 1;
      for (std::size_t h = 0; h < comp.size(); ++h) {
        for (Vertex w : g_.neighbors(comp[h])) {
          if (!seen[static_cast<std::size_t>(w)]) {
            seen[static_cast<std::size_t>(w)] = 1;
            comp.push_back(w);
          }
        }
      }
      parts.push_back(component(comp));
    }
    std::sort(parts.begin(), parts.end());
    std::string out = "n" + std::to_string(g_.n()) + ":";
    for (const auto& p : parts) out += p + "|";
    return out;
  }

 private:
  std::string component(const std::vector<Vertex>& comp) {
    std::size_t deg_sum = 0;
    for (Vertex v : comp) deg_sum += g_.degree(v);
    const std::size_t m = deg_sum / 2;
    if (m + 1 == comp.size()) return "T" + tree_form(comp);
    if (m == comp.size()) return "U" + unicyclic_form(comp);
    return "G" + general_form(comp);
  }

  // AHU encoding of the subtree at v, not entering `blocked` vertices.
  std::string rooted(Vertex v, Vertex parent, const std::vector<char>& blocked) {
    std::vector<std::string> kids;
    for (Vertex w : g_.neighbors(v)) {
      if (w == parent || blocked[static_cast<std::size_t>(w)]) continue;
      kids.push_back(rooted(w, v, blocked));
    }
    std::sort(kids.begin(), kids.end());
    std::string s = "(" + labels_[static_cast<std::size_t>(v)];
    for (const auto& k : kids) s += k;
    return s + ")";
  }

  std::string tree_form(const std::vector<Vertex>& comp) {
    // Centers via repeated leaf stripping.
    std::map<Vertex, std::size_t> deg;
    for (Vertex v : comp) deg[v] = g_.degree(v);
    std::vector<Vertex> layer;
    for (Vertex v : comp) {
      if (deg[v] <= 1) layer.push_back(v);
    }
    std::size_t remaining = comp.size();
    while (remaining > 2) {
      remaining -= layer.size();
      std::vector<Vertex> next;
      for (Vertex v : layer) {
        deg[v] = 0;
        for (Vertex w : g_.neighbors(v)) {
          if (deg[w] > 0 && --deg[w] == 1) next.push_back(w);
        }
      }
      layer.swap(next);
    }
    std::vector<char> blocked(g_.n(), 0);
    std::string best;
    for (Vertex c : layer) {
      std::string s = rooted(c, -1, blocked);
      if (best.empty() || s < best) best = std::move(s);
    }
    return best;
  }

  std::string unicyclic_form(const std::vector<Vertex>& comp) {
    std::map<Vertex, std::size_t> deg;
    for (Vertex v : comp) deg[v] = g_.degree(v);
    std::vector<Vertex> stack;
    for (Vertex v : comp) {
      if (deg[v] == 1) stack.push_back(v);
    }
    std::vector<char> off_cycle(g_.n(), 0);
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      off_cycle[static_cast<std::size_t>(v)] = 1;
      for (Vertex w : g_.neighbors(v)) {
        if (!off_cycle[static_cast<std::size_t>(w)] && --deg[w] == 1) stack.push_back(w);
      }
    }
    std::vector<char> on_cycle(g_.n(), 0);
    Vertex start = -1;
    for (Vertex v : comp) {
      if (!off_cycle[static_cast<std::size_t>(v)]) {
        on_cycle[static_cast<std::size_t>(v)] = 1;
        if (start < 0) start = v;
      }
    }
    std::vector<Vertex> cycle{start};
    Vertex prev = -1;
    Vertex cur = start;
    while (true) {
      Vertex nxt = -1;
      for (Vertex w : g_.neighbors(cur)) {
        if (on_cycle[static_cast<std::size_t>(w)] && w != prev) {
          nxt = w;
          break;
        }
      }
      if (nxt == start || nxt < 0) break;
      cycle.push_back(nxt);
      prev = cur;
      cur = nxt;
    }
    std::vector<std::string> enc;
    for (Vertex v : cycle) enc.push_back(rooted(v, -1, on_cycle));
    const std::size_t L = enc.size();
    std::string best;
    for (int dir = 0; dir < 2; ++dir) {
      for (std::size_t shift = 0; shift < L; ++shift) {
        std::string s;
        for (std::size_t i = 0; i < L; ++i) {
          const std::size_t j = dir == 0 ? (shift + i) % L : (shift + L - i) % L;
          s += enc[j];
        }
        if (best.empty() || s < best) best = std::move(s);
      }
    }
    return std::to_string(L) + ":" + best;
  }

  // Pendant trees are folded into the labels of the 2-core, which is then
  // canonized by individualization-refinement.
  std::string general_form(const std::vector<Vertex>& all) {
    std::map<Vertex, std::size_t> deg;
    for (Vertex v : all) deg[v] = g_.degree(v);
    std::vector<Vertex> stack;
    for (Vertex v : all) {
      if (deg[v] == 1) stack.push_back(v);
    }
    std::vector<char> off(g_.n(), 0);
    while (!stack.empty()) {
      const Vertex v = stack.back();
      stack.pop_back();
      off[static_cast<std::size_t>(v)] = 1;
      for (Vertex w : g_.neighbors(v)) {
        if (!off[static_cast<std::size_t>(w)] && --deg[w] == 1) stack.push_back(w);
      }
    }
    std::vector<Vertex> comp;
    std::vector<char> in_core(g_.n(), 0);
    for (Vertex v : all) {
      if (!off[static_cast<std::size_t>(v)]) {
        comp.push_back(v);
        in_core[static_cast<std::size_t>(v)] = 1;
      }
    }
    const std::size_t m = comp.size();
    std::map<Vertex, std::size_t> local;
    for (std::size_t i = 0; i < m; ++i) local[comp[i]] = i;
    adj_.assign(m, {});
    for (std::size_t i = 0; i < m; ++i) {
      for (Vertex w : g_.neighbors(comp[i])) {
        if (in_core[static_cast<std::size_t>(w)]) adj_[i].push_back(local[w]);
      }
    }
    std::vector<std::string> labs(m);
    for (std::size_t i = 0; i < m; ++i) labs[i] = rooted(comp[i], -1, in_core);
    std::vector<std::string> sorted = labs;
    std::sort(sorted.begin(), sorted.end());
    sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
    std::vector<std::size_t> colors(m);
    for (std::size_t i = 0; i < m; ++i) {
      colors[i] = static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), labs[i]) - sorted.begin());
    }
    comp_labels_ = std::move(labs);
    leaves_ = 0;
    best_.clear();
    search(refine(colors));
    return best_;
  }

  std::vector<std::size_t> refine(std::vector<std::size_t> colors) const {
    const std::size_t m = colors.size();
    std::size_t classes = std::set<std::size_t>(colors.begin(), colors.end()).size();
    while (true) {
      std::vector<std::pair<std::pair<std::size_t, std::vector<std::size_t>>, std::size_t>> sig(m);
      for (std::size_t i = 0; i < m; ++i) {
        std::vector<std::size_t> nc;
        for (std::size_t w : adj_[i]) nc.push_back(colors[w]);
        std::sort(nc.begin(), nc.end());
        sig[i] = {{colors[i], std::move(nc)}, i};
      }
      std::vector<std::pair<std::size_t, std::vector<std::size_t>>> keys;
      for (const auto& s : sig) keys.push_back(s.first);
      std::sort(keys.begin(), keys.end());
      keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
      std::vector<std::size_t> next(m);
      for (std::size_t i = 0; i < m; ++i) {
        next[i] = static_cast<std::size_t>(std::lower_bound(keys.begin(), keys.end(), sig[i].first) - keys.begin());
      }
      colors.swap(next);
      if (keys.size() == classes) return colors;
      classes = keys.size();
    }
  }

  void search(const std::vector<std::size_t>& colors) {
    const std::size_t m = colors.size();
    std::vector<std::size_t> count(m, 0);
    for (std::size_t c : colors) ++count[c];
    std::size_t target = m;
    for (std::size_t c = 0; c < m; ++c) {
      if (count[c] > 1) {
        target = c;
        break;
      }
    }
    if (target == m) {
      if (++leaves_ > budget_) throw GraphError("canonical form search budget exceeded");
      std::vector<std::size_t> pos(m);
      for (std::size_t i = 0; i < m; ++i) pos[colors[i]] = i;
      std::string s;
      for (std::size_t c = 0; c < m; ++c) s += "[" + comp_labels_[pos[c]] + "]";
      std::vector<std::pair<std::size_t, std::size_t>> es;
      for (std::size_t i = 0; i < m; ++i) {
        for (std::size_t w : adj_[i]) {
          if (colors[i] < colors[w]) es.emplace_back(colors[i], colors[w]);
        }
      }
      std::sort(es.begin(), es.end());
      for (auto [a, b] : es) s += std::to_string(a) + "-" + std::to_string(b) + ",";
      if (best_.empty() || s < best_) best_ = std::move(s);
      return;
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (colors[i] != target) continue;
      // Individualize i: it keeps `target`, the rest of its cell moves up.
      std::vector<std::size_t> c2(m);
      for (std::size_t j = 0; j < m; ++j) c2[j] = 2 * colors[j] + ((colors[j] == target && j != i) ? 1 : 0);
      search(refine(std::move(c2)));
    }
  }

  const MRFG& g_;
  std::size_t budget_;
  std::vector<std::string> labels_;
  std::vector<std::vector<std::size_t>> adj_;
  std::vector<std::string> comp_labels_;
  std::size_t leaves_ = 0;
  std::string best_;
};

}  // namespace

std::string canonical_form(const MRFG& g, bool include_features, std::size_t search_budget) {
  return Canonizer(g, include_features, search_budget).run();
}

bool isomorphic(const MRFG& g, const MRFG& h, bool include_features) {
  if (g.n() != h.n() || g.edge_count() != h.edge_count() || g.roots().size() != h.roots().size()) return false;
  return canonical_form(g, include_features) == canonical_form(h, include_features);
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const MRFG& g) {
  nlohmann::ordered_json j;
  j["n"] = g.n();
  nlohmann::ordered_json edges = nlohmann::ordered_json::array();
  for (auto [a, b] : g.edges()) edges.push_back({a, b});
  j["edges"] = std::move(edges);
  j["roots"] = g.roots();
  nlohmann::ordered_json feats = nlohmann::ordered_json::array();
  for (std::size_t v = 0; v < g.n(); ++v) {
    auto f = g.features(static_cast<Vertex>(v));
    feats.push_back(std::vector<double>(f.begin(), f.end()));
  }
  j["features"] = std::move(feats);
  return j.dump();
}

MRFG graph_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw GraphError(std::string("malformed graph JSON: ") + e.what());
  }
  try {
    const auto n = j.at("n").get<std::size_t>();
    std::vector<Edge> edges;
    for (const auto& e : j.value("edges", nlohmann::json::array())) {
      edges.emplace_back(e.at(0).get<Vertex>(), e.at(1).get<Vertex>());
    }
    auto roots = j.value("roots", std::vector<Vertex>{});
    std::vector<double> features;
    std::size_t d = 0;
    if (j.contains("features")) {
      const auto& f = j.at("features");
      if (f.size() != n) throw GraphError("features must have one row per vertex");
      d = n > 0 ? f.at(0).size() : 0;
      for (const auto& row : f) {
        if (row.size() != d) throw GraphError("ragged feature matrix");
        for (const auto& x : row) features.push_back(x.get<double>());
      }
    }
    return MRFG(n, edges, std::move(roots), d, std::move(features));
  } catch (const nlohmann::json::exception& e) {
    throw GraphError(std::string("invalid graph JSON: ") + e.what());
  }
}

}  // namespace agglogic
