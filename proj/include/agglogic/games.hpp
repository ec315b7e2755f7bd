#pragma once

// Similarity relations ~_{k,eps,eta}, optimal coupling mass, the explicit
// coupling construction and partition lifting.

#include <cstdint>
#include <map>
#include <span>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

#include "agglogic/graph.hpp"
#include "agglogic/rational.hpp"
#include "agglogic/random.hpp"

namespace agglogic {

struct GameParams {
  int k = 0;
  double epsilon = 0.1;
  double eta = 0.1;
};

/// Maximum of Pr(Pi in R) over couplings Pi of the marginals `a` and `b`,
/// computed exactly as a max-flow. `relation[i][j]` says whether (a_i, b_j)
/// is in R. Both marginals must sum to 1.
Rational max_coupling_mass(std::span<const Rational> a, std::span<const Rational> b,
                           const std::vector<std::vector<bool>>& relation);

/// Decides ~_{k,eps,eta} between subtuples of roots of one fixed pair of
/// graphs. Results are memoized on (roots of g, roots of h, k).
class SimilarityOracle {
 public:
  SimilarityOracle(const MRFG& g, const MRFG& h, double epsilon, double eta);

  bool similar(const std::vector<Vertex>& roots_g, const std::vector<Vertex>& roots_h, int k);
  [[nodiscard]] std::size_t memo_size() const { return memo_.size(); }

 private:
  bool base(const std::vector<Vertex>& rg, const std::vector<Vertex>& rh) const;
  bool extension_ok(const std::vector<Vertex>& rg, Vertex p, const std::vector<Vertex>& rh, Vertex q) const;
  bool compute(const std::vector<Vertex>& rg, const std::vector<Vertex>& rh, int k);

  const MRFG& g_;
  const MRFG& h_;
  double epsilon_;
  Rational one_minus_eta_;
  std::map<std::tuple<std::vector<Vertex>, std::vector<Vertex>, int>, bool> memo_;
};

/// g ~_{k,eps,eta} h on their root lists. Throws GraphError when the root
/// counts differ.
bool similar(const MRFG& g, const MRFG& h, const GameParams& params);

// ---------------------------------------------------------------------------
// Couplings

class CouplingError : public std::invalid_argument {
 public:
  CouplingError(const std::string& what, int cell) : std::invalid_argument(what), cell_(cell) {}
  /// Offending cell (-1 for T, -2 when not tied to a cell).
  [[nodiscard]] int cell() const { return cell_; }

 private:
  int cell_;
};

struct CouplingTable {
  /// weights[a][b] = Pr(Pi_0 = a, Pi_1 = b) over a common ground set.
  std::vector<std::vector<Rational>> weights;
  /// q_i = min(Pr(X0 in S_i), Pr(X1 in S_i)).
  std::vector<Rational> q;
  /// Sum of q_i: mass of the event "both in the same S_i".
  Rational diagonal_mass;
  /// p = 1 - diagonal_mass.
  Rational p;

  [[nodiscard]] std::vector<Rational> row_sums() const;
  [[nodiscard]] std::vector<Rational> column_sums() const;
  /// Pr((a, b) in S_i x S_i for some i) computed from the table.
  [[nodiscard]] Rational same_cell_mass(std::span<const int> cell) const;
};

/// Explicit construction for two distributions x0, x1 over a ground set of
/// size M. `cell[e]` is the index in [0, ell) of the part S_i containing
/// element e, or -1 for T. Checks |Pr(X0 in S_i) - Pr(X1 in S_i)| <= nu/ell
/// and Pr(X0 in T) + Pr(X1 in T) <= nu_prime.
CouplingTable construct_coupling(std::span<const Rational> x0, std::span<const Rational> x1, std::span<const int> cell,
                                 int ell, const Rational& nu, const Rational& nu_prime);

/// The same construction without the precondition checks.
CouplingTable construct_coupling_unchecked(std::span<const Rational> x0, std::span<const Rational> x1,
                                           std::span<const int> cell, int ell);

// ---------------------------------------------------------------------------
// Feature partitions and partition lifting

/// Uniform grid of mesh epsilon over a support box. Cells of zero mass
/// under the distribution are merged into T (index -1).
class FeaturePartition {
 public:
  FeaturePartition(const FeatureDistribution& d, double epsilon);
  /// Single cell covering the box (T empty).
  static FeaturePartition trivial(const FeatureDistribution& d);

  [[nodiscard]] int cell(std::span<const double> x) const;
  /// Grid index of x whether or not the cell carries mass.
  [[nodiscard]] int grid_cell(std::span<const double> x) const;
  [[nodiscard]] int cell_count() const { return static_cast<int>(valid_.size()); }
  [[nodiscard]] double mesh() const { return epsilon_; }
  [[nodiscard]] bool valid(int c) const { return valid_[static_cast<std::size_t>(c)]; }
  /// Lower corner of a cell's grid box.
  [[nodiscard]] std::vector<double> cell_corner(int c) const;
  /// Center of a cell, clamped to the box.
  [[nodiscard]] std::vector<double> cell_center(int c) const;
  [[nodiscard]] const std::vector<Interval>& box() const { return box_; }

 private:
  FeaturePartition() = default;
  std::vector<Interval> box_;
  double epsilon_ = 0.0;
  std::vector<int> per_dim_;
  std::vector<bool> valid_;
  bool trivial_ = false;
};

/// Class labels (0-based, in order of first appearance) of the lifted
/// equivalence of level k on a collection of MRFGs sharing their root count.
std::vector<int> lift_partition(std::span<const MRFG> collection, const FeaturePartition& partition, int k,
                                double eta);

}  // namespace agglogic
