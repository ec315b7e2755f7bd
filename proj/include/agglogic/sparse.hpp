#pragma once

// Sparse-case controllers, core determinacy, preservation under games and
// the richness / FBP / homogeneity axiom checkers.

#include <optional>
#include <string>
#include <vector>

#include "agglogic/games.hpp"
#include "agglogic/graph.hpp"
#include "agglogic/random.hpp"
#include "agglogic/term.hpp"

namespace agglogic {

struct SparseConfig {
  /// Offspring mean of the branching process.
  double c = 1.0;
  FeatureDistribution distribution = FeatureDistribution::none();
  /// FBP draws per Mean node.
  std::size_t mc_fbp_samples = 64;
  /// FBP draws per Sup node for the tree pool (features snapped to a grid).
  std::size_t pool_fbp_samples = 200;
  /// Mesh of the grid the pool features are snapped to.
  double pool_mesh = 0.1;
  /// Add every rooted tree with at most 4 vertices, once per special feature point.
  bool pool_small_trees = true;
  /// Extra candidate trees offered to every Sup node (truncated to the node's height).
  std::vector<MRFG> extra_pool;
};

/// Controller of a term with its Monte Carlo trees and tree pools drawn once
/// at construction, so repeated evaluations share random numbers.
class SparseController {
 public:
  SparseController(Term t, SparseConfig cfg, const RngStream& rng);

  /// lambda_t(g). Throws EvalError on an arity mismatch.
  [[nodiscard]] double operator()(const MRFG& g) const;

  [[nodiscard]] const Term& term() const { return term_; }
  [[nodiscard]] const SparseConfig& config() const { return cfg_; }
  /// Truncation height used below Mean/Sup node i: r_{srank + lmrank} of its body.
  [[nodiscard]] std::size_t height(int node) const { return heights_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] const std::vector<MRFG>& mean_trees(int node) const { return mean_trees_[static_cast<std::size_t>(node)]; }
  [[nodiscard]] const std::vector<MRFG>& pool(int node) const { return pools_[static_cast<std::size_t>(node)]; }

  /// Adds rooted trees to the pool of every Sup node whose height is at least
  /// the tree's; duplicates (up to featured isomorphism) are dropped.
  void add_pool_trees(const std::vector<MRFG>& trees);
  /// Adds B_h(v) for every vertex v of g whose ball is a tree, for each Sup
  /// node's height h.
  void add_pool_balls(const MRFG& g);

 private:
  void insert_pool_tree(std::size_t node, MRFG tree);

  Term term_;
  SparseConfig cfg_;
  std::vector<std::size_t> heights_;
  std::vector<std::vector<MRFG>> mean_trees_;
  std::vector<std::vector<MRFG>> pools_;
  std::vector<std::vector<std::string>> pool_keys_;
  std::vector<Interval> box_;
};

double lambda(const Term& t, const MRFG& g, const SparseConfig& cfg, const RngStream& rng);

/// Rooted trees with at most `max_vertices` vertices, up to isomorphism,
/// featureless (dimension 0), root 0.
std::vector<MRFG> small_rooted_trees(std::size_t max_vertices);

/// Tolerance for comparing two evaluations of a controller that share random
/// numbers: 1e-9 for Mean-free terms, otherwise a 3-sigma Hoeffding-style
/// allowance from the bound width and the Mean sample count.
double mc_tolerance(const Term& t, const SparseConfig& cfg);

struct CoreDeterminacy {
  double lhs = 0.0;
  double rhs = 0.0;
  double tolerance = 0.0;
  std::size_t radius = 0;
  bool pass = false;
};

/// lambda on g against lambda on core(g, r_k), k = srank + lmrank, with a
/// common controller whose pools include the tree balls of both graphs.
CoreDeterminacy check_core_determinacy(const Term& t, const MRFG& g, const SparseConfig& cfg, const RngStream& rng);

// ---------------------------------------------------------------------------
// Axioms

enum class Axiom { kRichness, kFbpCloseness, kHomogeneity };
std::string to_string(Axiom a);

struct AxiomReport {
  Axiom axiom = Axiom::kHomogeneity;
  int k = 0;
  double epsilon = 0.0;
  double eta = 0.0;
  std::size_t r = 0;
  bool verdict = false;
  /// Homogeneity: the quotient. FBP closeness: the smallest matched mass.
  double value = 0.0;
  /// Exact rational form of `value` where available.
  std::string exact;
  /// Richness: the vertex set found per (tree, r'), empty when none exists.
  std::vector<std::vector<Vertex>> witnesses;
  /// FBP closeness: matched mass per r' = 0..r.
  std::vector<double> per_radius;
  std::string detail;
};

std::string to_json(const AxiomReport& report);

/// (k + Cycle_r(G)) * maxdeg^r / |V| <= eta, computed exactly (0^0 = 1).
/// Throws GraphError on the empty graph.
AxiomReport check_homogeneity(const MRFG& g, int k, double eta, std::size_t r);

/// For each witness tree T and each r' with height(T) <= r' <= r, looks for
/// k vertices whose r'-balls are similar to T, pairwise more than 2r+1
/// apart and more than 2r+1 away from the roots and from cycles of length at
/// most 2r+1.
AxiomReport check_richness(const MRFG& g, const GameParams& params, std::size_t r,
                           const std::vector<MRFG>& witness_trees);

/// Couples the ball classes of g with `mc` FBP samples through the lifted
/// partition of level k; classes without a tree go to T. Passes when the
/// matched mass is at least 1 - eta for every r' <= r.
AxiomReport check_fbp_closeness(const MRFG& g, const GameParams& params, std::size_t r,
                                const FeaturePartition& partition, double c, const FeatureDistribution& d,
                                std::size_t mc, const RngStream& rng);

// ---------------------------------------------------------------------------
// Preservation

struct PreservationResult {
  double lambda_g = 0.0;
  double lambda_h = 0.0;
  double diff = 0.0;
  double bound = 0.0;
  double tolerance = 0.0;
  GameParams params;
  bool similar = false;
  bool pass = false;
};

/// Checks g ~_{k,eps,eta} h with k = srank + lmrank and eta = eps / (4C),
/// then compares the controllers using common random numbers. `pass`
/// requires both the similarity and |diff| <= eps * slope + tolerance.
PreservationResult verify_preservation(const Term& t, const MRFG& g, const MRFG& h, double epsilon,
                                       const SparseConfig& cfg, const RngStream& rng);

}  // namespace agglogic
