#pragma once

// Reproducible random streams, feature distributions and samplers for
// Erdos-Renyi featured graphs, branching processes and random cores.

#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "agglogic/graph.hpp"
#include "agglogic/interval.hpp"
#include "agglogic/rational.hpp"

namespace agglogic {

/// Counter-based stream identified by (seed, path). Identical (seed, path)
/// gives an identical draw sequence on every platform; split() derives child
/// streams that depend only on the parent's identity and the tag, never on
/// how many draws the parent has made.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed = 0, std::vector<std::uint64_t> path = {});

  [[nodiscard]] RngStream split(std::uint64_t tag) const;

  [[nodiscard]] std::uint64_t seed() const { return seed_; }
  [[nodiscard]] const std::vector<std::uint64_t>& path() const { return path_; }

  std::uint64_t next_u64();
  result_type operator()() { return next_u64(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  double uniform(double lo, double hi);
  /// Uniform integer in [0, n), unbiased.
  std::uint64_t below(std::uint64_t n);
  /// Failures before the first success of Bernoulli(p) trials.
  std::uint64_t geometric(double p);
  std::uint64_t poisson(double mean);
  std::uint64_t binomial(std::uint64_t n, double p);
  bool bernoulli(double p) { return uniform() < p; }

 private:
  std::uint64_t seed_;
  std::vector<std::uint64_t> path_;
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
};

inline RngStream split(const RngStream& s, std::uint64_t tag) { return s.split(tag); }

// ---------------------------------------------------------------------------
// Feature distributions

class DistributionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct FeatureDistribution {
  enum class Kind { kUniformBox, kDiscrete, kProduct };

  struct Atom {
    std::vector<double> point;
    Rational weight;
  };

  Kind kind = Kind::kUniformBox;
  std::vector<Interval> box;                      // kUniformBox
  std::vector<Atom> atoms;                        // kDiscrete
  std::vector<FeatureDistribution> coordinates;   // kProduct, each one-dimensional

  static FeatureDistribution uniform_box(std::vector<Interval> box);
  static FeatureDistribution discrete(std::vector<Atom> atoms);
  static FeatureDistribution product(std::vector<FeatureDistribution> coordinates);
  /// Zero-dimensional distribution for featureless graphs.
  static FeatureDistribution none() { return uniform_box({}); }

  [[nodiscard]] std::size_t dimension() const;
  /// Per-coordinate interval containing the support.
  [[nodiscard]] std::vector<Interval> support_box() const;
  /// Finite points that FeatSp certainly contains: atoms of discrete parts
  /// combined with the corners of continuous parts.
  [[nodiscard]] std::vector<std::vector<double>> special_points() const;
  /// True when every coordinate is discrete.
  [[nodiscard]] bool is_discrete() const;

  void sample(RngStream& rng, std::span<double> out) const;
};

std::vector<double> sample_feature(const FeatureDistribution& d, RngStream& rng);

FeatureDistribution distribution_from_json(const std::string& text);
std::string to_json(const FeatureDistribution& d);

// ---------------------------------------------------------------------------
// Graph models

struct ModelSpec {
  enum class Kind { kDense, kLinearSparse };
  Kind kind = Kind::kDense;
  double param = 0.5;  // p for dense, c for linear sparse

  static ModelSpec dense(double p) { return {Kind::kDense, p}; }
  static ModelSpec linear_sparse(double c) { return {Kind::kLinearSparse, c}; }
  [[nodiscard]] double edge_probability(std::size_t n) const;
  [[nodiscard]] std::string name() const;
};

/// Rootless featured G(n, p) sample; edges and features use independent
/// sub-streams.
MRFG sample_graph(const ModelSpec& spec, std::size_t n, const FeatureDistribution& d, RngStream& rng);

/// First r generations of a Poisson(c) Galton-Watson tree with i.i.d.
/// features; vertices in BFS order, root 0 is the single root.
/// Throws if the tree exceeds `max_vertices`.
MRFG sample_fbp(double c, const FeatureDistribution& d, std::size_t r, RngStream& rng,
                std::size_t max_vertices = 5'000'000);

/// Po(c^i / 2i) disjoint i-cycles for each 3 <= i <= max_cycle, with an
/// independent BP|_r hung from every cycle vertex; rootless. max_cycle = 0
/// means r. The r-core of G(n, c/n) keeps cycles up to 2r + 1, so matching
/// its limit law needs max_cycle = 2r + 1.
MRFG sample_core(std::size_t r, double c, const FeatureDistribution& d, RngStream& rng, std::size_t max_cycle = 0);

}  // namespace agglogic
