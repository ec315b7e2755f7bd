#pragma once

// Experiments and statistics: convergence runs for the dense and sparse
// models, two-sample KS, and simulation checks of the probabilistic lemmas.

#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "agglogic/dense.hpp"
#include "agglogic/games.hpp"
#include "agglogic/random.hpp"
#include "agglogic/sparse.hpp"
#include "agglogic/term.hpp"

namespace agglogic {

// ---------------------------------------------------------------------------
// Statistics

/// Empirical CDF of a sample.
class Ecdf {
 public:
  /// Throws std::invalid_argument on an empty sample.
  explicit Ecdf(std::vector<double> sample);
  [[nodiscard]] double operator()(double x) const;
  [[nodiscard]] const std::vector<double>& sorted() const { return sorted_; }

 private:
  std::vector<double> sorted_;
};

Ecdf ecdf(std::vector<double> sample);

/// sup_x |F_a(x) - F_b(x)|. Throws std::invalid_argument on an empty sample.
double ks_statistic(std::vector<double> a, std::vector<double> b);

double sample_mean(const std::vector<double>& xs);
/// Unbiased sample variance (0 for fewer than two values).
double sample_variance(const std::vector<double>& xs);
/// Linear-interpolated quantile, q in [0, 1].
double quantile(std::vector<double> xs, double q);

/// 2 exp(-2 lam^2 / (n (b - a)^2)).
double hoeffding_bound(std::size_t n, double a, double b, double lam);

struct HoeffdingReport {
  std::size_t n = 0;
  std::size_t reps = 0;
  std::vector<double> lambdas;
  std::vector<double> empirical;  // Pr(|S - n/2| >= lam)
  std::vector<double> bound;
  bool pass = false;
};

/// Simulates `reps` sums of n fair coin flips.
HoeffdingReport hoeffding_tail_test(std::size_t n, std::size_t reps, const std::vector<double>& lambdas,
                                    const RngStream& rng);

struct ChainedBinomialReport {
  double alpha = 0.0;
  double beta = 0.0;
  double epsilon = 0.0;
  std::vector<std::size_t> sizes;
  std::vector<double> deviation;  // Pr(|Y_n / n - alpha beta| >= epsilon)
  bool strictly_decreasing = false;
  bool y_zero_always = true;      // every Y_n was 0
  bool y_equals_x_always = true;  // every Y_n equalled X_n
};

/// X_n ~ Bin(n, alpha), Y_n | X_n = m ~ Bin(m, beta).
ChainedBinomialReport chained_binomial_test(double alpha, double beta, const std::vector<std::size_t>& sizes,
                                            std::size_t reps, double epsilon, const RngStream& rng);

enum class LocalClasses { kLifted, kDegree };

struct LocalConvergenceReport {
  std::size_t classes = 0;
  std::vector<double> graph_freq;
  std::vector<double> fbp_freq;
  double max_gap = 0.0;
  /// Frequencies of isolated roots on each side.
  double isolated_graph = 0.0;
  double isolated_fbp = 0.0;
};

/// Compares class frequencies of the r-balls of one G(n, c/n) sample with
/// those of `samples` draws of FBP|_r. Lifted classes use `params.k`,
/// `params.eta` and `partition`; degree classes cap the root degree at 9.
LocalConvergenceReport local_convergence_test(double c, const FeatureDistribution& d, std::size_t r, std::size_t n,
                                              std::size_t samples, const GameParams& params,
                                              const FeaturePartition& partition, const RngStream& rng,
                                              LocalClasses classes = LocalClasses::kLifted);

// ---------------------------------------------------------------------------
// Experiments

struct ExperimentConfig {
  std::string mode = "dense";  // dense | sparse
  std::string term;
  ModelSpec model = ModelSpec::dense(0.5);
  FeatureDistribution distribution = FeatureDistribution::none();
  std::vector<std::size_t> sizes;
  std::size_t replicates = 10;
  std::uint64_t seed = 1;
  DenseConfig dense;
  /// Monte Carlo trees per Mean node; 0 means the largest size.
  std::size_t mc_fbp_samples = 0;
  std::size_t pool_fbp_samples = 200;
  double pool_mesh = 0.1;
  double tol_mean = 0.02;
  double tol_ks = 0.07;

  /// Throws std::invalid_argument with a message naming the bad field.
  static ExperimentConfig from_json(const nlohmann::json& j);
  [[nodiscard]] nlohmann::ordered_json to_json() const;
  void validate() const;
};

struct SizeStats {
  std::size_t n = 0;
  std::vector<double> values;
  std::vector<double> references;
  double mean = 0.0;
  double variance = 0.0;
};

struct SummaryStats {
  std::string mode;
  std::vector<SizeStats> per_size;
  /// Dense: the controller constant. Sparse: mean of the reference sample.
  double reference = 0.0;
  /// Sparse: lambda over sampled random cores.
  std::vector<double> reference_samples;
  double ks = 0.0;
  /// Sparse: quantiles (0.5, 0.9, 1.0) of |value - lambda(core of the same graph)|.
  std::vector<double> core_gap_quantiles;
  std::map<std::string, bool> checks;
  [[nodiscard]] bool pass() const;
  [[nodiscard]] nlohmann::ordered_json to_json() const;
};

SummaryStats run_dense(const ExperimentConfig& cfg);
SummaryStats run_sparse(const ExperimentConfig& cfg);
SummaryStats run_experiment(const ExperimentConfig& cfg);

/// `#`-prefixed configuration lines followed by
/// mode,n,replicate,value,reference,abs_err rows.
void write_csv(std::ostream& out, const ExperimentConfig& cfg, const SummaryStats& stats);

/// Shortest round-trip representation.
std::string format_double(double x);

}  // namespace agglogic
