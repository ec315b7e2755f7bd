#pragma once

// Graph types over k variables and the dense-case controllers.

#include <cstdint>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "agglogic/random.hpp"
#include "agglogic/term.hpp"

namespace agglogic {

/// Quantifier-free graph type of a k-tuple: an equality pattern (class label
/// per variable, labels numbered in order of first appearance) and the
/// adjacency relation between distinct classes.
class GraphType {
 public:
  GraphType() = default;
  /// Throws std::invalid_argument unless the pattern is a restricted growth
  /// string and `adjacency` is symmetric with a false diagonal.
  GraphType(std::vector<int> classes, std::vector<std::vector<bool>> adjacency);

  [[nodiscard]] int k() const { return static_cast<int>(classes_.size()); }
  [[nodiscard]] int class_count() const { return static_cast<int>(adjacency_.size()); }
  [[nodiscard]] int class_of(int var) const { return classes_[static_cast<std::size_t>(var)]; }
  [[nodiscard]] bool equal(int a, int b) const { return class_of(a) == class_of(b); }
  [[nodiscard]] bool adjacent(int a, int b) const {
    return adjacency_[static_cast<std::size_t>(class_of(a))][static_cast<std::size_t>(class_of(b))];
  }
  [[nodiscard]] const std::vector<int>& classes() const { return classes_; }
  [[nodiscard]] const std::vector<std::vector<bool>>& adjacency() const { return adjacency_; }

  /// The type restricted to the first k-1 variables. Requires k >= 1.
  [[nodiscard]] GraphType restrict_last() const;
  /// True when the last variable is a fresh class (not equal to an earlier one).
  [[nodiscard]] bool last_is_new() const;
  /// Number of earlier classes the last variable is adjacent to.
  [[nodiscard]] int last_edge_count() const;

  [[nodiscard]] std::string to_string() const;
  friend bool operator==(const GraphType&, const GraphType&) = default;
  friend auto operator<=>(const GraphType& a, const GraphType& b) {
    if (auto c = a.classes_ <=> b.classes_; c != 0) return c;
    return a.adjacency_ <=> b.adjacency_;
  }

 private:
  std::vector<int> classes_;
  std::vector<std::vector<bool>> adjacency_;
};

/// Type of a tuple of vertices in a graph given by an adjacency predicate.
GraphType type_of(std::span<const int> vertices, const std::function<bool(int, int)>& adjacent);

/// All consistent types over k variables. Throws std::invalid_argument for k > 5.
std::vector<GraphType> enumerate_types(int k);

/// One-variable extensions of t.
std::vector<GraphType> extensions(const GraphType& t);
/// Extensions in which the new variable is adjacent to variable i.
std::vector<GraphType> extensions_adj(const GraphType& t, int i);

/// p^r (1-p)^(m-r) with r the edges from the new variable and m the number of
/// classes of t; 0 when the new variable equals an old one.
double alpha(const GraphType& t, const GraphType& ext, double p);
/// p^r' (1-p)^(m-1-r') where r' does not count the forced edge to variable i.
double alpha_adj(const GraphType& t, const GraphType& ext, int i, double p);

struct DenseConfig {
  std::size_t mc_samples = 20000;
  std::size_t sup_points = 5000;
  /// Lower limit on samples for expectations and suprema nested inside
  /// other sampled loops.
  std::size_t nested_samples = 200;
};

class DenseController {
 public:
  /// Throws std::invalid_argument when p is not in (0, 1) or the term reads
  /// more feature coordinates than the distribution provides.
  DenseController(Term term, double p, FeatureDistribution d, DenseConfig config = {});

  [[nodiscard]] const Term& term() const { return term_; }
  [[nodiscard]] double p() const { return p_; }
  [[nodiscard]] const FeatureDistribution& distribution() const { return d_; }
  [[nodiscard]] const DenseConfig& config() const { return config_; }

  /// lambda_term^t(x). `x` holds one feature vector per variable of t.
  /// Deterministic given `rng`. Throws EvalError on dimension mismatch.
  [[nodiscard]] double value(const GraphType& t, std::span<const std::vector<double>> x, const RngStream& rng) const;

 private:
  double node_value(int node, const GraphType& t, std::vector<std::vector<double>>& x, const RngStream& rng,
                    std::size_t multiplicity) const;
  double expectation(int node, int body, const std::vector<GraphType>& exts, const std::vector<double>& weights,
                     const GraphType& t, std::vector<std::vector<double>>& x, const RngStream& rng,
                     std::size_t multiplicity) const;

  Term term_;
  double p_;
  FeatureDistribution d_;
  DenseConfig config_;
  std::vector<std::vector<double>> special_points_;
  std::vector<bool> reads_bound_;
};

DenseController build_controller(const Term& t, double p, const FeatureDistribution& d, DenseConfig config = {});

/// Same as ctrl.value(t, x, rng).
double controller_value(const DenseController& ctrl, const GraphType& t, std::span<const std::vector<double>> x,
                        const RngStream& rng);

}  // namespace agglogic
