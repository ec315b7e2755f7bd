#include "agglogic/random.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>
#include <numbers>
#include <random>

namespace agglogic {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

std::uint64_t derive_key(std::uint64_t seed, const std::vector<std::uint64_t>& path) {
  std::uint64_t k = mix64(seed + kGolden);
  for (std::uint64_t tag : path) k = mix64(k ^ mix64(tag + 0x632BE59BD9B4E019ULL));
  return k;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed, std::vector<std::uint64_t> path)
    : seed_(seed), path_(std::move(path)), key_(derive_key(seed_, path_)) {}

RngStream RngStream::split(std::uint64_t tag) const {
  std::vector<std::uint64_t> p = path_;
  p.push_back(tag);
  return RngStream(seed_, std::move(p));
}

std::uint64_t RngStream::next_u64() { return mix64(key_ + kGolden * ++counter_); }

double RngStream::uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

double RngStream::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

std::uint64_t RngStream::below(std::uint64_t n) {
  if (n == 0) return 0;
  // Lemire's multiply-and-reject.
  std::uint64_t x = next_u64();
  auto m = static_cast<unsigned __int128>(x) * n;
  auto low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (low < threshold) {
      x = next_u64();
      m = static_cast<unsigned __int128>(x) * n;
      low = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

std::uint64_t RngStream::geometric(double p) {
  if (p >= 1.0) return 0;
  if (p <= 0.0) return std::numeric_limits<std::uint64_t>::max();
  return std::geometric_distribution<std::uint64_t>(p)(*this);
}

std::uint64_t RngStream::poisson(double mean) {
  if (mean <= 0.0) return 0;
  return std::poisson_distribution<std::uint64_t>(mean)(*this);
}

std::uint64_t RngStream::binomial(std::uint64_t n, double p) {
  if (p <= 0.0 || n == 0) return 0;
  if (p >= 1.0) return n;
  return std::binomial_distribution<std::uint64_t>(n, p)(*this);
}

// ---------------------------------------------------------------------------

FeatureDistribution FeatureDistribution::uniform_box(std::vector<Interval> box) {
  for (const auto& iv : box) {
    if (!(iv.lo <= iv.hi) || !std::isfinite(iv.lo) || !std::isfinite(iv.hi)) {
      throw DistributionError("uniform box needs finite intervals with lo <= hi");
    }
  }
  FeatureDistribution d;
  d.kind = Kind::kUniformBox;
  d.box = std::move(box);
  return d;
}

FeatureDistribution FeatureDistribution::discrete(std::vector<Atom> atoms) {
  if (atoms.empty()) throw DistributionError("discrete distribution needs at least one atom");
  Rational total = 0;
  const std::size_t dim = atoms.front().point.size();
  for (const auto& a : atoms) {
    if (a.weight <= 0) throw DistributionError("atom weights must be positive");
    if (a.point.size() != dim) throw DistributionError("atoms must share a dimension");
    for (double x : a.point) {
      if (!std::isfinite(x)) throw DistributionError("atom coordinates must be finite");
    }
    total += a.weight;
  }
  if (total != 1) throw DistributionError("atom weights must sum to 1, got " + to_string(total));
  FeatureDistribution d;
  d.kind = Kind::kDiscrete;
  d.atoms = std::move(atoms);
  return d;
}

FeatureDistribution FeatureDistribution::product(std::vector<FeatureDistribution> coordinates) {
  for (const auto& c : coordinates) {
    if (c.dimension() != 1) throw DistributionError("product coordinates must be one-dimensional");
  }
  FeatureDistribution d;
  d.kind = Kind::kProduct;
  d.coordinates = std::move(coordinates);
  return d;
}

std::size_t FeatureDistribution::dimension() const {
  switch (kind) {
    case Kind::kUniformBox: return box.size();
    case Kind::kDiscrete: return atoms.front().point.size();
    case Kind::kProduct: return coordinates.size();
  }
  return 0;
}

std::vector<Interval> FeatureDistribution::support_box() const {
  switch (kind) {
    case Kind::kUniformBox:
      return box;
    case Kind::kDiscrete: {
      std::vector<Interval> b;
      for (double x : atoms.front().point) b.push_back({x, x});
      for (const auto& a : atoms) {
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = hull(b[i], a.point[i]);
      }
      return b;
    }
    case Kind::kProduct: {
      std::vector<Interval> b;
      for (const auto& c : coordinates) b.push_back(c.support_box().front());
      return b;
    }
  }
  return {};
}

std::vector<std::vector<double>> FeatureDistribution::special_points() const {
  switch (kind) {
    case Kind::kDiscrete: {
      std::vector<std::vector<double>> out;
      for (const auto& a : atoms) out.push_back(a.point);
      return out;
    }
    case Kind::kUniformBox:
    case Kind::kProduct: {
      std::vector<std::vector<double>> per_coord;
      if (kind == Kind::kUniformBox) {
        for (const auto& iv : box) per_coord.push_back(iv.lo == iv.hi ? std::vector<double>{iv.lo}
                                                                        : std::vector<double>{iv.lo, iv.hi});
      } else {
        for (const auto& c : coordinates) {
          std::vector<double> vals;
          for (const auto& p : c.special_points()) vals.push_back(p.front());
          per_coord.push_back(std::move(vals));
        }
      }
      std::vector<std::vector<double>> out{{}};
      for (const auto& vals : per_coord) {
        std::vector<std::vector<double>> next;
        for (const auto& prefix : out) {
          for (double v : vals) {
            auto p = prefix;
            p.push_back(v);
            next.push_back(std::move(p));
          }
        }
        out.swap(next);
      }
      return out;
    }
  }
  return {};
}

bool FeatureDistribution::is_discrete() const {
  switch (kind) {
    case Kind::kUniformBox:
      return std::all_of(box.begin(), box.end(), [](const Interval& iv) { return iv.lo == iv.hi; });
    case Kind::kDiscrete:
      return true;
    case Kind::kProduct:
      return std::all_of(coordinates.begin(), coordinates.end(), [](const auto& c) { return c.is_discrete(); });
  }
  return false;
}

void FeatureDistribution::sample(RngStream& rng, std::span<double> out) const {
  switch (kind) {
    case Kind::kUniformBox:
      for (std::size_t i = 0; i < box.size(); ++i) out[i] = rng.uniform(box[i].lo, box[i].hi);
      return;
    case Kind::kDiscrete: {
      const double u = rng.uniform();
      double acc = 0.0;
      std::size_t pick = atoms.size() - 1;
      for (std::size_t i = 0; i < atoms.size(); ++i) {
        acc += to_double(atoms[i].weight);
        if (u < acc) {
          pick = i;
          break;
        }
      }
      std::copy(atoms[pick].point.begin(), atoms[pick].point.end(), out.begin());
      return;
    }
    case Kind::kProduct:
      for (std::size_t i = 0; i < coordinates.size(); ++i) coordinates[i].sample(rng, out.subspan(i, 1));
      return;
  }
}

std::vector<double> sample_feature(const FeatureDistribution& d, RngStream& rng) {
  std::vector<double> x(d.dimension());
  d.sample(rng, x);
  return x;
}

namespace {

FeatureDistribution distribution_from(const nlohmann::json& j) {
  const auto kind = j.at("kind").get<std::string>();
  if (kind == "uniform_box") {
    std::vector<Interval> box;
    for (const auto& iv : j.at("box")) box.push_back({iv.at(0).get<double>(), iv.at(1).get<double>()});
    return FeatureDistribution::uniform_box(std::move(box));
  }
  if (kind == "discrete") {
    std::vector<FeatureDistribution::Atom> atoms;
    for (const auto& a : j.at("atoms")) {
      FeatureDistribution::Atom atom;
      atom.point = a.at("point").get<std::vector<double>>();
      const auto& w = a.at("weight");
      atom.weight = w.is_string() ? parse_rational(w.get<std::string>()) : rational_from_double(w.get<double>());
      atoms.push_back(std::move(atom));
    }
    return FeatureDistribution::discrete(std::move(atoms));
  }
  if (kind == "product") {
    std::vector<FeatureDistribution> coords;
    for (const auto& c : j.at("coordinates")) coords.push_back(distribution_from(c));
    return FeatureDistribution::product(std::move(coords));
  }
  throw DistributionError("unknown distribution kind '" + kind + "'");
}

nlohmann::ordered_json distribution_json(const FeatureDistribution& d) {
  nlohmann::ordered_json j;
  switch (d.kind) {
    case FeatureDistribution::Kind::kUniformBox: {
      j["kind"] = "uniform_box";
      nlohmann::ordered_json box = nlohmann::ordered_json::array();
      for (const auto& iv : d.box) box.push_back({iv.lo, iv.hi});
      j["box"] = std::move(box);
      break;
    }
    case FeatureDistribution::Kind::kDiscrete: {
      j["kind"] = "discrete";
      nlohmann::ordered_json atoms = nlohmann::ordered_json::array();
      for (const auto& a : d.atoms) {
        nlohmann::ordered_json aj;
        aj["point"] = a.point;
        aj["weight"] = to_string(a.weight);
        atoms.push_back(std::move(aj));
      }
      j["atoms"] = std::move(atoms);
      break;
    }
    case FeatureDistribution::Kind::kProduct: {
      j["kind"] = "product";
      nlohmann::ordered_json coords = nlohmann::ordered_json::array();
      for (const auto& c : d.coordinates) coords.push_back(distribution_json(c));
      j["coordinates"] = std::move(coords);
      break;
    }
  }
  return j;
}

}  // namespace

FeatureDistribution distribution_from_json(const std::string& text) {
  try {
    return distribution_from(nlohmann::json::parse(text));
  } catch (const nlohmann::json::exception& e) {
    throw DistributionError(std::string("invalid distribution JSON: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DistributionError(e.what());
  }
}

std::string to_json(const FeatureDistribution& d) { return distribution_json(d).dump(); }

// ---------------------------------------------------------------------------

double ModelSpec::edge_probability(std::size_t n) const {
  return kind == Kind::kDense ? param : param / static_cast<double>(n);
}

std::string ModelSpec::name() const { return kind == Kind::kDense ? "dense" : "linear_sparse"; }

MRFG sample_graph(const ModelSpec& spec, std::size_t n, const FeatureDistribution& d, RngStream& rng) {
  if (n == 0) throw std::invalid_argument("sample_graph needs n >= 1");
  const double p = spec.edge_probability(n);
  if (spec.kind == ModelSpec::Kind::kDense && !(p >= 0.0 && p <= 1.0)) {
    throw std::invalid_argument("dense edge probability must lie in [0, 1]");
  }
  if (spec.kind == ModelSpec::Kind::kLinearSparse && !(spec.param > 0.0)) {
    throw std::invalid_argument("linear sparse parameter c must be positive");
  }
  if (p > 1.0) throw std::invalid_argument("c/n exceeds 1");

  RngStream edge_rng = rng.split(0);
  RngStream feat_rng = rng.split(1);
  std::vector<std::vector<Vertex>> adj(n);
  if (p > 0.0 && n > 1) {
    // Walk the pairs (i, j), i < j, in lexicographic order with geometric skips.
    const std::uint64_t total = static_cast<std::uint64_t>(n) * (n - 1) / 2;
    std::uint64_t next = 0;  // linear index of the next candidate pair
    std::size_t i = 0;
    std::uint64_t row_start = 0;
    while (true) {
      const std::uint64_t skip = edge_rng.geometric(p);
      if (skip >= total - next) break;
      const std::uint64_t k = next + skip;
      while (k >= row_start + (n - 1 - i)) {
        row_start += n - 1 - i;
        ++i;
      }
      const std::size_t j = i + 1 + static_cast<std::size_t>(k - row_start);
      adj[i].push_back(static_cast<Vertex>(j));
      adj[j].push_back(static_cast<Vertex>(i));
      next = k + 1;
    }
    for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  }
  const std::size_t dim = d.dimension();
  std::vector<double> features(n * dim);
  for (std::size_t v = 0; v < n; ++v) d.sample(feat_rng, std::span<double>(features).subspan(v * dim, dim));
  return MRFG::from_adjacency(std::move(adj), {}, dim, std::move(features), d.support_box());
}

namespace {

// Appends a Poisson(c) tree of height <= r below `root` (already present).
void grow_tree(double c, const FeatureDistribution& d, std::size_t r, RngStream& rng,
               std::vector<std::vector<Vertex>>& adj, std::vector<double>& features, Vertex root,
               std::size_t max_vertices) {
  const std::size_t dim = d.dimension();
  std::vector<Vertex> frontier{root};
  for (std::size_t depth = 0; depth < r && !frontier.empty(); ++depth) {
    std::vector<Vertex> next;
    for (Vertex u : frontier) {
      const std::uint64_t kids = rng.poisson(c);
      for (std::uint64_t k = 0; k < kids; ++k) {
        const auto w = static_cast<Vertex>(adj.size());
        if (adj.size() >= max_vertices) throw std::runtime_error("branching process exceeded the vertex limit");
        adj.emplace_back();
        adj[static_cast<std::size_t>(u)].push_back(w);
        adj.back().push_back(u);
        features.resize(features.size() + dim);
        d.sample(rng, std::span<double>(features).subspan(features.size() - dim, dim));
        next.push_back(w);
      }
    }
    frontier.swap(next);
  }
}

}  // namespace

MRFG sample_fbp(double c, const FeatureDistribution& d, std::size_t r, RngStream& rng, std::size_t max_vertices) {
  if (!(c > 0.0)) throw std::invalid_argument("branching process needs c > 0");
  const std::size_t dim = d.dimension();
  std::vector<std::vector<Vertex>> adj(1);
  std::vector<double> features(dim);
  d.sample(rng, features);
  grow_tree(c, d, r, rng, adj, features, 0, max_vertices);
  // BFS order means every adjacency list is already sorted.
  return MRFG::from_adjacency(std::move(adj), {0}, dim, std::move(features), d.support_box());
}

MRFG sample_core(std::size_t r, double c, const FeatureDistribution& d, RngStream& rng, std::size_t max_cycle) {
  if (!(c > 0.0)) throw std::invalid_argument("random core needs c > 0");
  const std::size_t dim = d.dimension();
  std::vector<std::vector<Vertex>> adj;
  std::vector<double> features;
  RngStream count_rng = rng.split(0);
  std::uint64_t component = 0;
  const std::size_t top = max_cycle == 0 ? r : max_cycle;
  for (std::size_t len = 3; len <= top; ++len) {
    const double mean = std::pow(c, static_cast<double>(len)) / (2.0 * static_cast<double>(len));
    const std::uint64_t cycles = count_rng.poisson(mean);
    for (std::uint64_t k = 0; k < cycles; ++k) {
      RngStream crng = rng.split(1).split(component++);
      const auto base = static_cast<Vertex>(adj.size());
      for (std::size_t i = 0; i < len; ++i) {
        adj.emplace_back();
        features.resize(features.size() + dim);
        d.sample(crng, std::span<double>(features).subspan(features.size() - dim, dim));
      }
      for (std::size_t i = 0; i < len; ++i) {
        const auto a = base + static_cast<Vertex>(i);
        const auto b = base + static_cast<Vertex>((i + 1) % len);
        adj[static_cast<std::size_t>(a)].push_back(b);
        adj[static_cast<std::size_t>(b)].push_back(a);
      }
      for (std::size_t i = 0; i < len; ++i) {
        grow_tree(c, d, r, crng, adj, features, base + static_cast<Vertex>(i), 5'000'000);
      }
    }
  }
  for (auto& nb : adj) std::sort(nb.begin(), nb.end());
  return MRFG::from_adjacency(std::move(adj), {}, dim, std::move(features), d.support_box());
}

}  // namespace agglogic
