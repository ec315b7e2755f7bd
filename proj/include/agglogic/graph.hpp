#pragma once

// Multi-rooted featured graphs (MRFGs) and their structural operations.

#include <cstddef>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "agglogic/interval.hpp"

namespace agglogic {

using Vertex = int;
using Edge = std::pair<Vertex, Vertex>;

inline constexpr std::size_t kInfiniteDistance = std::numeric_limits<std::size_t>::max();

class GraphError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Finite simple undirected graph with an ordered (possibly repeating) root
/// list and a real feature vector of dimension d per vertex.
class MRFG {
 public:
  MRFG() = default;

  /// Validates everything: no loops, ids in range, roots in range, features
  /// inside `feature_box`. Duplicate edges are merged. When `feature_box` is
  /// empty it is set to the coordinatewise hull of the features.
  MRFG(std::size_t n, std::span<const Edge> edges, std::vector<Vertex> roots, std::size_t d,
       std::vector<double> features, std::vector<Interval> feature_box = {});

  /// Trusted constructor for internal use: adjacency lists must already be
  /// sorted, symmetric and loop-free.
  static MRFG from_adjacency(std::vector<std::vector<Vertex>> adjacency, std::vector<Vertex> roots, std::size_t d,
                             std::vector<double> features, std::vector<Interval> feature_box);

  /// Featureless graph (d = 0).
  static MRFG plain(std::size_t n, std::span<const Edge> edges, std::vector<Vertex> roots = {});

  [[nodiscard]] std::size_t n() const { return adj_.size(); }
  [[nodiscard]] bool empty() const { return adj_.empty(); }
  [[nodiscard]] std::size_t dimension() const { return d_; }
  [[nodiscard]] const std::vector<Vertex>& roots() const { return roots_; }
  [[nodiscard]] Vertex root(std::size_t i) const { return roots_[i]; }
  [[nodiscard]] const std::vector<Vertex>& neighbors(Vertex v) const { return adj_[static_cast<std::size_t>(v)]; }
  [[nodiscard]] std::size_t degree(Vertex v) const { return neighbors(v).size(); }
  [[nodiscard]] bool adjacent(Vertex u, Vertex v) const;
  [[nodiscard]] std::size_t edge_count() const;
  /// Sorted edge list with i < j.
  [[nodiscard]] std::vector<Edge> edges() const;

  [[nodiscard]] std::span<const double> features(Vertex v) const {
    return {features_.data() + static_cast<std::size_t>(v) * d_, d_};
  }
  [[nodiscard]] double feature(Vertex v, std::size_t i) const { return features_[static_cast<std::size_t>(v) * d_ + i]; }
  [[nodiscard]] const std::vector<double>& feature_matrix() const { return features_; }
  [[nodiscard]] const std::vector<Interval>& feature_box() const { return box_; }
  [[nodiscard]] const std::vector<std::vector<Vertex>>& adjacency() const { return adj_; }

  /// Copy with a different root list.
  [[nodiscard]] MRFG with_roots(std::vector<Vertex> roots) const;
  /// Copy with a different feature matrix (same dimension; box widened if needed).
  [[nodiscard]] MRFG with_features(std::vector<double> features) const;

  /// Exact structural equality (no relabeling).
  friend bool operator==(const MRFG& a, const MRFG& b) {
    return a.adj_ == b.adj_ && a.roots_ == b.roots_ && a.d_ == b.d_ && a.features_ == b.features_;
  }

 private:
  std::vector<std::vector<Vertex>> adj_;
  std::vector<Vertex> roots_;
  std::size_t d_ = 0;
  std::vector<double> features_;
  std::vector<Interval> box_;
};

/// Induced sub-MRFG on `vertices` (kept in ascending id order). Roots are
/// given as original vertex ids and must be in the set.
MRFG induced_subgraph(const MRFG& g, std::span<const Vertex> vertices, std::span<const Vertex> roots);

/// BFS distances from all `sources`, truncated at `max_depth`; unreached
/// vertices get kInfiniteDistance.
std::vector<std::size_t> bfs_distances(const MRFG& g, std::span<const Vertex> sources,
                                       std::size_t max_depth = kInfiniteDistance);

std::size_t distance(const MRFG& g, Vertex u, Vertex v);
std::size_t max_degree(const MRFG& g);

MRFG append_root(const MRFG& g, Vertex v);

/// Induced ball of radius r around v, rooted at v only.
MRFG ball(const MRFG& g, Vertex v, std::size_t r);
std::vector<Vertex> ball_vertices(const MRFG& g, Vertex v, std::size_t r);

/// Vertices lying on some simple cycle of length <= L, ascending.
std::vector<Vertex> short_cycle_vertices(const MRFG& g, std::size_t L);

/// Vertices within distance r of a root or of a cycle of length <= 2r+1.
std::vector<Vertex> core_vertices(const MRFG& g, std::size_t r);
MRFG core(const MRFG& g, std::size_t r);

/// Root list of g followed by the root list of h.
MRFG disjoint_union(const MRFG& g, const MRFG& h);

std::size_t count_triangles(const MRFG& g);
/// Number of simple cycles of length exactly L (small L only).
std::size_t count_cycles(const MRFG& g, std::size_t L);

bool is_forest(const MRFG& g);
/// Height of a rooted tree from its first root.
std::size_t tree_height(const MRFG& g);

/// Canonical string: two MRFGs get equal strings iff they are isomorphic by
/// a bijection preserving root positions (and features when requested).
/// Trees and unicyclic components are encoded in linear-ish time; other
/// components use individualization-refinement and throw GraphError when
/// the search exceeds `search_budget` leaves.
std::string canonical_form(const MRFG& g, bool include_features = true, std::size_t search_budget = 200000);
bool isomorphic(const MRFG& g, const MRFG& h, bool include_features = true);

std::string to_json(const MRFG& g);
MRFG graph_from_json(const std::string& text);

}  // namespace agglogic
