#include "agglogic/lab.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <stdexcept>

#include "agglogic/eval.hpp"

namespace agglogic {

// ---------------------------------------------------------------------------
// Statistics

Ecdf::Ecdf(std::vector<double> sample) : sorted_(std::move(sample)) {
  if (sorted_.empty()) throw std::invalid_argument("empirical CDF of an empty sample");
  std::sort(sorted_.begin(), sorted_.end());
}

double Ecdf::operator()(double x) const {
  const auto it = std::upper_bound(sorted_.begin(), sorted_.end(), x);
  return static_cast<double>(it - sorted_.begin()) / static_cast<double>(sorted_.size());
}

Ecdf ecdf(std::vector<double> sample) { return Ecdf(std::move(sample)); }

double ks_statistic(std::vector<double> a, std::vector<double> b) {
  if (a.empty() || b.empty()) throw std::invalid_argument("KS statistic needs nonempty samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size());
  const double nb = static_cast<double>(b.size());
  std::size_t i = 0;
  std::size_t j = 0;
  double d = 0.0;
  while (i < a.size() || j < b.size()) {
    // Step past every copy of the smallest remaining value on both sides.
    double x;
    if (j == b.size() || (i < a.size() && a[i] <= b[j])) {
      x = a[i];
    } else {
      x = b[j];
    }
    while (i < a.size() && a[i] == x) ++i;
    while (j < b.size() && b[j] == x) ++j;
    d = std::max(d, std::fabs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  return d;
}

double sample_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sample_variance(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = sample_mean(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return s / static_cast<double>(xs.size() - 1);
}

double quantile(std::vector<double> xs, double q) {
  if (xs.empty()) throw std::invalid_argument("quantile of an empty sample");
  std::sort(xs.begin(), xs.end());
  const double pos = std::clamp(q, 0.0, 1.0) * static_cast<double>(xs.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, xs.size() - 1);
  return xs[lo] + (pos - static_cast<double>(lo)) * (xs[hi] - xs[lo]);
}

double hoeffding_bound(std::size_t n, double a, double b, double lam) {
  if (n == 0) throw std::invalid_argument("hoeffding_bound needs n >= 1");
  if (!(b > a)) throw std::invalid_argument("hoeffding_bound needs b > a");
  if (!(lam > 0.0)) throw std::invalid_argument("hoeffding_bound needs lam > 0");
  const double w = b - a;
  return 2.0 * std::exp(-2.0 * lam * lam / (static_cast<double>(n) * w * w));
}

HoeffdingReport hoeffding_tail_test(std::size_t n, std::size_t reps, const std::vector<double>& lambdas,
                                    const RngStream& rng) {
  HoeffdingReport rep;
  rep.n = n;
  rep.reps = reps;
  rep.lambdas = lambdas;
  std::vector<std::size_t> hits(lambdas.size(), 0);
  for (std::size_t i = 0; i < reps; ++i) {
    RngStream s = rng.split(i);
    std::size_t heads = 0;
    for (std::size_t j = 0; j < n; ++j) heads += s.bernoulli(0.5) ? 1 : 0;
    const double dev = std::fabs(static_cast<double>(heads) - static_cast<double>(n) / 2.0);
    for (std::size_t l = 0; l < lambdas.size(); ++l) {
      if (dev >= lambdas[l]) ++hits[l];
    }
  }
  rep.pass = true;
  for (std::size_t l = 0; l < lambdas.size(); ++l) {
    rep.empirical.push_back(static_cast<double>(hits[l]) / static_cast<double>(reps));
    rep.bound.push_back(hoeffding_bound(n, 0.0, 1.0, lambdas[l]));
    rep.pass = rep.pass && rep.empirical.back() <= rep.bound.back();
  }
  return rep;
}

ChainedBinomialReport chained_binomial_test(double alpha, double beta, const std::vector<std::size_t>& sizes,
                                            std::size_t reps, double epsilon, const RngStream& rng) {
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("alpha must lie in (0, 1]");
  if (!(beta >= 0.0 && beta <= 1.0)) throw std::invalid_argument("beta must lie in [0, 1]");
  ChainedBinomialReport rep;
  rep.alpha = alpha;
  rep.beta = beta;
  rep.epsilon = epsilon;
  rep.sizes = sizes;
  for (std::size_t n : sizes) {
    RngStream s = rng.split(n);
    std::size_t dev = 0;
    for (std::size_t i = 0; i < reps; ++i) {
      const auto x = s.binomial(n, alpha);
      const auto y = s.binomial(x, beta);
      rep.y_zero_always = rep.y_zero_always && y == 0;
      rep.y_equals_x_always = rep.y_equals_x_always && y == x;
      if (std::fabs(static_cast<double>(y) / static_cast<double>(n) - alpha * beta) >= epsilon) ++dev;
    }
    rep.deviation.push_back(static_cast<double>(dev) / static_cast<double>(reps));
  }
  rep.strictly_decreasing = true;
  for (std::size_t i = 1; i < rep.deviation.size(); ++i) {
    rep.strictly_decreasing = rep.strictly_decreasing && rep.deviation[i] < rep.deviation[i - 1];
  }
  return rep;
}

LocalConvergenceReport local_convergence_test(double c, const FeatureDistribution& d, std::size_t r, std::size_t n,
                                              std::size_t samples, const GameParams& params,
                                              const FeaturePartition& partition, const RngStream& rng,
                                              LocalClasses classes) {
  if (samples == 0) throw std::invalid_argument("local_convergence_test needs samples >= 1");
  RngStream gs = rng.split(0);
  const MRFG g = sample_graph(ModelSpec::linear_sparse(c), n, d, gs);
  std::vector<MRFG> coll;
  coll.reserve(n + samples);
  for (std::size_t v = 0; v < n; ++v) coll.push_back(ball(g, static_cast<Vertex>(v), r));
  for (std::size_t s = 0; s < samples; ++s) {
    RngStream ts = rng.split(1).split(s);
    coll.push_back(sample_fbp(c, d, r, ts));
  }
  std::vector<int> labels;
  if (classes == LocalClasses::kLifted) {
    labels = lift_partition(coll, partition, params.k, params.eta);
  } else {
    for (const auto& b : coll) labels.push_back(static_cast<int>(std::min<std::size_t>(b.degree(b.root(0)), 9)));
  }
  LocalConvergenceReport rep;
  rep.classes = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end()) + 1);
  if (classes == LocalClasses::kDegree) rep.classes = 10;
  rep.graph_freq.assign(rep.classes, 0.0);
  rep.fbp_freq.assign(rep.classes, 0.0);
  for (std::size_t i = 0; i < coll.size(); ++i) {
    const bool from_graph = i < n;
    auto& f = from_graph ? rep.graph_freq : rep.fbp_freq;
    f[static_cast<std::size_t>(labels[i])] += 1.0 / static_cast<double>(from_graph ? n : samples);
    if (coll[i].degree(coll[i].root(0)) == 0) {
      (from_graph ? rep.isolated_graph : rep.isolated_fbp) += 1.0 / static_cast<double>(from_graph ? n : samples);
    }
  }
  for (std::size_t l = 0; l < rep.classes; ++l) {
    rep.max_gap = std::max(rep.max_gap, std::fabs(rep.graph_freq[l] - rep.fbp_freq[l]));
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Configuration

namespace {

template <class T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw std::invalid_argument(std::string("config field '") + key + "': " + e.what());
  }
}

}  // namespace

ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw std::invalid_argument("config must be a JSON object");
  ExperimentConfig cfg;
  cfg.mode = get_or<std::string>(j, "mode", cfg.mode);
  cfg.term = get_or<std::string>(j, "term", cfg.term);
  if (j.contains("model")) {
    const auto& m = j.at("model");
    const auto kind = get_or<std::string>(m, "kind", "dense");
    if (kind == "dense") {
      cfg.model = ModelSpec::dense(get_or<double>(m, "p", 0.5));
    } else if (kind == "linear_sparse") {
      cfg.model = ModelSpec::linear_sparse(get_or<double>(m, "c", 1.0));
    } else {
      throw std::invalid_argument("config field 'model.kind': unknown model '" + kind + "'");
    }
  } else if (cfg.mode == "sparse") {
    cfg.model = ModelSpec::linear_sparse(1.0);
  }
  if (j.contains("distribution")) {
    try {
      cfg.distribution = distribution_from_json(j.at("distribution").dump());
    } catch (const std::exception& e) {
      throw std::invalid_argument(std::string("config field 'distribution': ") + e.what());
    }
  }
  cfg.sizes = get_or<std::vector<std::size_t>>(j, "sizes", cfg.sizes);
  cfg.replicates = get_or<std::size_t>(j, "replicates", cfg.replicates);
  cfg.seed = get_or<std::uint64_t>(j, "seed", cfg.seed);
  cfg.dense.mc_samples = get_or<std::size_t>(j, "mc_samples", cfg.dense.mc_samples);
  cfg.dense.sup_points = get_or<std::size_t>(j, "sup_points", cfg.dense.sup_points);
  cfg.dense.nested_samples = get_or<std::size_t>(j, "nested_samples", cfg.dense.nested_samples);
  cfg.mc_fbp_samples = get_or<std::size_t>(j, "mc_fbp_samples", cfg.mc_fbp_samples);
  cfg.pool_fbp_samples = get_or<std::size_t>(j, "pool_size", cfg.pool_fbp_samples);
  cfg.pool_mesh = get_or<double>(j, "pool_mesh", cfg.pool_mesh);
  if (j.contains("tolerance")) {
    cfg.tol_mean = get_or<double>(j.at("tolerance"), "mean", cfg.tol_mean);
    cfg.tol_ks = get_or<double>(j.at("tolerance"), "ks", cfg.tol_ks);
  }
  cfg.validate();
  return cfg;
}

void ExperimentConfig::validate() const {
  if (mode != "dense" && mode != "sparse") throw std::invalid_argument("config field 'mode': expected dense or sparse");
  if (term.empty()) throw std::invalid_argument("config field 'term' is required");
  if (sizes.empty()) throw std::invalid_argument("config field 'sizes' must be nonempty");
  for (std::size_t i = 0; i < sizes.size(); ++i) {
    if (sizes[i] == 0) throw std::invalid_argument("config field 'sizes': sizes must be positive");
    if (i > 0 && sizes[i] <= sizes[i - 1]) throw std::invalid_argument("config field 'sizes' must be strictly increasing");
  }
  if (replicates < 2) throw std::invalid_argument("config field 'replicates' must be >= 2");
  if (mode == "dense" && model.kind != ModelSpec::Kind::kDense) {
    throw std::invalid_argument("dense mode needs a dense model");
  }
  if (mode == "sparse" && model.kind != ModelSpec::Kind::kLinearSparse) {
    throw std::invalid_argument("sparse mode needs a linear_sparse model");
  }
}

nlohmann::ordered_json ExperimentConfig::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["term"] = term;
  if (model.kind == ModelSpec::Kind::kDense) {
    j["model"] = {{"kind", "dense"}, {"p", model.param}};
  } else {
    j["model"] = {{"kind", "linear_sparse"}, {"c", model.param}};
  }
  j["distribution"] = nlohmann::ordered_json::parse(agglogic::to_json(distribution));
  j["sizes"] = sizes;
  j["replicates"] = replicates;
  j["seed"] = seed;
  j["mc_samples"] = dense.mc_samples;
  j["sup_points"] = dense.sup_points;
  j["nested_samples"] = dense.nested_samples;
  j["mc_fbp_samples"] = mc_fbp_samples;
  j["pool_size"] = pool_fbp_samples;
  j["pool_mesh"] = pool_mesh;
  j["tolerance"] = {{"mean", tol_mean}, {"ks", tol_ks}};
  return j;
}

bool SummaryStats::pass() const {
  return std::all_of(checks.begin(), checks.end(), [](const auto& kv) { return kv.second; });
}

nlohmann::ordered_json SummaryStats::to_json() const {
  nlohmann::ordered_json j;
  j["mode"] = mode;
  j["reference"] = reference;
  auto sizes = nlohmann::ordered_json::array();
  for (const auto& s : per_size) sizes.push_back({{"n", s.n}, {"mean", s.mean}, {"variance", s.variance}});
  j["per_size"] = sizes;
  if (mode == "sparse") {
    j["ks"] = ks;
    j["core_gap_quantiles"] = core_gap_quantiles;
  }
  j["checks"] = checks;
  j["pass"] = pass();
  return j;
}

// ---------------------------------------------------------------------------
// Experiments

namespace {

Term closed_term(const ExperimentConfig& cfg) {
  Term t = parse_term(cfg.term);
  if (!t.closed()) throw std::invalid_argument("experiment terms must be closed");
  return t;
}

void finish_size(SizeStats& s) {
  s.mean = sample_mean(s.values);
  s.variance = sample_variance(s.values);
}

}  // namespace

SummaryStats run_dense(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != "dense") throw std::invalid_argument("run_dense needs mode dense");
  const Term t = closed_term(cfg);
  const RngStream root(cfg.seed);
  SummaryStats out;
  out.mode = "dense";
  const DenseController ctrl = build_controller(t, cfg.model.param, cfg.distribution, cfg.dense);
  out.reference = ctrl.value(GraphType(), {}, root.split(1));
  for (std::size_t n : cfg.sizes) {
    SizeStats s;
    s.n = n;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      RngStream gs = root.split(0).split(n).split(r);
      const MRFG g = sample_graph(cfg.model, n, cfg.distribution, gs);
      s.values.push_back(eval(t, g));
      s.references.push_back(out.reference);
    }
    finish_size(s);
    out.per_size.push_back(std::move(s));
  }
  const auto& last = out.per_size.back();
  out.checks["mean_within_tolerance"] = std::fabs(last.mean - out.reference) <= cfg.tol_mean;
  if (out.per_size.size() >= 2) {
    const auto& first = out.per_size.front();
    out.checks["variance_shrinks"] =
        last.variance < first.variance || (last.variance == 0.0 && first.variance == 0.0);
  }
  return out;
}

SummaryStats run_sparse(const ExperimentConfig& cfg) {
  cfg.validate();
  if (cfg.mode != "sparse") throw std::invalid_argument("run_sparse needs mode sparse");
  const Term t = closed_term(cfg);
  const RngStream root(cfg.seed);
  const auto m = metrics(t, cfg.distribution.support_box());
  const std::size_t rk = core_radius(m.srank + m.lmrank);
  SparseConfig sc;
  sc.c = cfg.model.param;
  sc.distribution = cfg.distribution;
  sc.mc_fbp_samples = cfg.mc_fbp_samples == 0 ? cfg.sizes.back() : cfg.mc_fbp_samples;
  sc.pool_fbp_samples = cfg.pool_fbp_samples;
  sc.pool_mesh = cfg.pool_mesh;

  SummaryStats out;
  out.mode = "sparse";
  for (std::size_t n : cfg.sizes) {
    SizeStats s;
    s.n = n;
    for (std::size_t r = 0; r < cfg.replicates; ++r) {
      RngStream gs = root.split(0).split(n).split(r);
      const MRFG g = sample_graph(cfg.model, n, cfg.distribution, gs);
      s.values.push_back(eval(t, g));
      const SparseController ctrl(t, sc, root.split(2).split(n).split(r));
      s.references.push_back(ctrl(core(g, rk)));
    }
    finish_size(s);
    out.per_size.push_back(std::move(s));
  }
  for (std::size_t i = 0; i < cfg.replicates; ++i) {
    RngStream cs = root.split(3).split(i);
    const MRFG k = sample_core(rk, sc.c, cfg.distribution, cs, 2 * rk + 1);
    const SparseController ctrl(t, sc, root.split(4).split(i));
    out.reference_samples.push_back(ctrl(k));
  }
  out.reference = sample_mean(out.reference_samples);
  const auto& last = out.per_size.back();
  out.ks = ks_statistic(last.values, out.reference_samples);
  std::vector<double> gaps;
  for (std::size_t i = 0; i < last.values.size(); ++i) gaps.push_back(std::fabs(last.values[i] - last.references[i]));
  out.core_gap_quantiles = {quantile(gaps, 0.5), quantile(gaps, 0.9), quantile(gaps, 1.0)};
  out.checks["ks_within_tolerance"] = out.ks <= cfg.tol_ks;
  return out;
}

SummaryStats run_experiment(const ExperimentConfig& cfg) {
  return cfg.mode == "sparse" ? run_sparse(cfg) : run_dense(cfg);
}

std::string format_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

void write_csv(std::ostream& out, const ExperimentConfig& cfg, const SummaryStats& stats) {
  out << "# agglogic experiment\n";
  out << "# config: " << cfg.to_json().dump() << "\n";
  out << "# tolerance_mean: " << format_double(cfg.tol_mean) << "\n";
  out << "# tolerance_ks: " << format_double(cfg.tol_ks) << "\n";
  out << "mode,n,replicate,value,reference,abs_err\n";
  for (const auto& s : stats.per_size) {
    for (std::size_t r = 0; r < s.values.size(); ++r) {
      out << stats.mode << ',' << s.n << ',' << r << ',' << format_double(s.values[r]) << ','
          << format_double(s.references[r]) << ',' << format_double(std::fabs(s.values[r] - s.references[r]))
          << '\n';
    }
  }
}

}  // namespace agglogic
