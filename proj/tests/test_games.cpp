#include <gtest/gtest.h>

#include <random>

#include "agglogic/games.hpp"
#include "oracles.hpp"

using namespace agglogic;

namespace {

using Q = Rational;

const FeatureDistribution kUnit = FeatureDistribution::uniform_box({{0.0, 1.0}});

std::vector<Q> random_simplex(std::mt19937_64& rng, std::size_t n, int denom = 12) {
  std::uniform_int_distribution<int> w(0, denom);
  std::vector<Q> x(n);
  Q s = 0;
  while (s == 0) {
    s = 0;
    for (auto& v : x) {
      v = w(rng);
      s += v;
    }
  }
  for (auto& v : x) v /= s;
  return x;
}

MRFG perturb(const MRFG& g, double delta, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-delta, delta);
  std::vector<double> f = g.feature_matrix();
  for (auto& x : f) x += u(rng);
  return g.with_features(f);
}

/// Small graph with features from a coarse grid, so that similar pairs occur.
MRFG small_graph(std::mt19937_64& rng, std::size_t n, double p, std::size_t roots) {
  std::bernoulli_distribution coin(p);
  std::uniform_int_distribution<int> level(0, 2);
  std::vector<Edge> e;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (coin(rng)) e.emplace_back(static_cast<Vertex>(i), static_cast<Vertex>(j));
  std::vector<double> f(n);
  for (auto& x : f) x = 0.5 * level(rng);
  std::vector<Vertex> r;
  for (std::size_t i = 0; i < roots; ++i) r.push_back(std::uniform_int_distribution<int>(0, static_cast<int>(n) - 1)(rng));
  return MRFG(n, e, r, 1, f, {{0.0, 1.0}});
}

}  // namespace

TEST(CouplingMass, Examples) {
  const std::vector<Q> a{Q(1, 2), Q(1, 2)};
  const std::vector<Q> b{Q(1, 2), Q(1, 2)};
  EXPECT_EQ(max_coupling_mass(a, b, {{true, true}, {true, true}}), 1);
  EXPECT_EQ(max_coupling_mass(a, b, {{false, false}, {false, false}}), 0);
  // Uniform on {a, b} against uniform on {a, c}, related when the labels agree.
  EXPECT_EQ(max_coupling_mass(a, b, {{true, false}, {false, false}}), Q(1, 2));
  const std::vector<Q> bad{Q(1, 2)};
  EXPECT_THROW((void)max_coupling_mass(a, bad, {{true}, {true}}), CouplingError);
}

TEST(CouplingMass, MatchesMinCut) {
  std::mt19937_64 rng(1);
  std::bernoulli_distribution coin(0.35);
  for (int i = 0; i < 500; ++i) {
    const std::size_t na = 1 + i % 6;
    const std::size_t nb = 1 + (i / 6) % 6;
    const auto a = random_simplex(rng, na);
    const auto b = random_simplex(rng, nb);
    std::vector<std::vector<bool>> rel(na, std::vector<bool>(nb));
    for (auto& row : rel)
      for (std::size_t j = 0; j < nb; ++j) row[j] = coin(rng);
    EXPECT_EQ(max_coupling_mass(a, b, rel), oracle::coupling_mass_mincut(a, b, rel));
  }
}

TEST(Similar, Reflexive) {
  std::mt19937_64 rng(2);
  for (int i = 0; i < 40; ++i) {
    const MRFG g = oracle::random_graph(rng, 3 + i % 6, 0.4, 1, {0});
    for (int k = 0; k <= 3; ++k) EXPECT_TRUE(similar(g, g, {k, 0.01, 0.01}));
  }
}

TEST(Similar, EdgeVersusTwoIsolatedVertices) {
  const MRFG k2 = MRFG::plain(2, std::vector<Edge>{{0, 1}});
  const MRFG two = MRFG::plain(2, {});
  EXPECT_FALSE(similar(k2, two, {2, 0.1, 0.1}));
  // One pebble cannot tell them apart.
  EXPECT_TRUE(similar(k2, two, {1, 0.1, 0.1}));
  EXPECT_TRUE(oracle::similar_def(k2, {}, two, {}, 1, 0.1, Q(9, 10)));
  EXPECT_FALSE(oracle::similar_def(k2, {}, two, {}, 2, 0.1, Q(9, 10)));
}

TEST(Similar, RootCountMismatchThrows) {
  const MRFG g = MRFG::plain(2, {}, {0});
  const MRFG h = MRFG::plain(2, {});
  EXPECT_THROW((void)similar(g, h, {}), GraphError);
}

TEST(Similar, PerturbedFeatures) {
  std::mt19937_64 rng(3);
  const double eps = 0.1;
  for (int i = 0; i < 50; ++i) {
    const MRFG g = oracle::random_graph(rng, 4 + i % 5, 0.35, 1, {0});
    const MRFG h = perturb(g, eps / 2, rng);
    for (int k = 0; k <= 3; ++k) EXPECT_TRUE(similar(g, h, {k, eps, 0.05}));
  }
}

TEST(Similar, MatchesDefinitionOracle) {
  std::mt19937_64 rng(4);
  int trues = 0;
  for (int i = 0; i < 400; ++i) {
    const std::size_t roots = static_cast<std::size_t>(i % 2);
    const MRFG g = small_graph(rng, 2 + i % 3, 0.5, roots);
    MRFG h = i % 3 == 0 ? perturb(g, 0.2, rng) : small_graph(rng, 2 + (i / 3) % 3, 0.5, roots);
    const double eta = i % 4 < 2 ? 0.2 : 0.55;
    for (int k = 0; k <= 2; ++k) {
      const bool fast = similar(g, h, {k, 0.3, eta});
      const bool def = oracle::similar_def(g, g.roots(), h, h.roots(), k, 0.3, Q(1) - rational_from_double(eta));
      ASSERT_EQ(fast, def) << "case " << i << " k=" << k;
      trues += fast;
    }
  }
  EXPECT_GT(trues, 100);
}

TEST(Similar, SymmetricAndMonotone) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 200; ++i) {
    const MRFG g = small_graph(rng, 3 + i % 3, 0.4, 1);
    const MRFG h = i % 2 ? perturb(g, 0.3, rng) : small_graph(rng, 3 + i % 3, 0.4, 1);
    bool prev = true;
    for (int k = 0; k <= 2; ++k) {
      const GameParams p{k, 0.25, 0.3};
      const bool s = similar(g, h, p);
      EXPECT_EQ(s, similar(h, g, p));
      if (!prev) EXPECT_FALSE(s) << "not monotone at k=" << k;
      prev = s;
    }
  }
}

TEST(Similar, PreservedByDisjointUnion) {
  std::mt19937_64 rng(6);
  int premises = 0;
  for (int i = 0; i < 100; ++i) {
    const int k = i % 3;
    const GameParams p{k, 0.25, 0.3};
    const MRFG g1 = small_graph(rng, 3, 0.5, 1);
    const MRFG g2 = small_graph(rng, 3, 0.4, 1);
    const MRFG h1 = perturb(g1, 0.12, rng);
    const MRFG h2 = i % 2 ? perturb(g2, 0.12, rng) : small_graph(rng, 3, 0.4, 1);
    if (!similar(g1, h1, p) || !similar(g2, h2, p)) continue;
    ++premises;
    EXPECT_TRUE(similar(disjoint_union(g1, g2), disjoint_union(h1, h2), p)) << i;
  }
  EXPECT_GT(premises, 50);
}

TEST(Coupling, IdenticalMarginals) {
  const std::vector<Q> x{Q(1, 2), Q(1, 2)};
  const std::vector<int> cell{0, 1};
  const auto t = construct_coupling(x, x, cell, 2, Q(0), Q(0));
  EXPECT_EQ(t.diagonal_mass, 1);
  EXPECT_EQ(t.p, 0);
  EXPECT_EQ(t.weights[0][0], Q(1, 2));
  EXPECT_EQ(t.weights[0][1], 0);
  EXPECT_EQ(t.weights[1][1], Q(1, 2));
}

TEST(Coupling, HandExecutedExample) {
  const std::vector<Q> x0{Q(3, 5), Q(2, 5)};
  const std::vector<Q> x1{Q(2, 5), Q(3, 5)};
  const std::vector<int> cell{0, 1};
  const auto t = construct_coupling(x0, x1, cell, 2, Q(2, 5), Q(0));
  EXPECT_EQ(t.diagonal_mass, Q(4, 5));
  EXPECT_EQ(t.q, (std::vector<Q>{Q(2, 5), Q(2, 5)}));
  // The remaining 1/5 moves from S_1 to S_2.
  EXPECT_EQ(t.weights[0][1], Q(1, 5));
  EXPECT_EQ(t.row_sums(), x0);
  EXPECT_EQ(t.column_sums(), x1);
  EXPECT_GE(t.diagonal_mass, Q(3, 5));
}

TEST(Coupling, PreconditionErrorsNameTheCell) {
  const std::vector<Q> x0{Q(3, 5), Q(2, 5), Q(0)};
  const std::vector<Q> x1{Q(1, 5), Q(3, 5), Q(1, 5)};
  const std::vector<int> cell{0, 1, -1};
  try {
    (void)construct_coupling(x0, x1, cell, 2, Q(1, 2), Q(1));
    FAIL();
  } catch (const CouplingError& e) {
    EXPECT_EQ(e.cell(), 0);
  }
  try {
    (void)construct_coupling(x0, x1, cell, 2, Q(1), Q(1, 10));
    FAIL();
  } catch (const CouplingError& e) {
    EXPECT_EQ(e.cell(), -1);
  }
  const std::vector<Q> bad{Q(1, 2), Q(1, 4), Q(0)};
  EXPECT_THROW((void)construct_coupling(bad, x1, cell, 2, Q(1), Q(1)), CouplingError);
}

TEST(Coupling, RandomInstances) {
  std::mt19937_64 rng(7);
  for (int i = 0; i < 500; ++i) {
    const int ell = 1 + i % 4;
    const std::size_t M = static_cast<std::size_t>(ell) + 1 + static_cast<std::size_t>(i % 5);
    std::vector<int> cell(M);
    for (std::size_t e = 0; e < M; ++e)
      cell[e] = e < static_cast<std::size_t>(ell) ? static_cast<int>(e)
                                                  : std::uniform_int_distribution<int>(-1, ell - 1)(rng);
    const auto x0 = random_simplex(rng, M);
    const auto y = random_simplex(rng, M);
    const Q s(std::uniform_int_distribution<int>(0, 4)(rng), 4);
    std::vector<Q> x1(M);
    for (std::size_t e = 0; e < M; ++e) x1[e] = (1 - s) * x0[e] + s * y[e];
    // Smallest parameters satisfying the preconditions.
    std::vector<Q> m0(static_cast<std::size_t>(ell) + 1, Q(0)), m1 = m0;
    for (std::size_t e = 0; e < M; ++e) {
      const auto c = static_cast<std::size_t>(cell[e] < 0 ? ell : cell[e]);
      m0[c] += x0[e];
      m1[c] += x1[e];
    }
    Q worst = 0;
    for (int c = 0; c < ell; ++c) worst = std::max(worst, Q(abs(m0[static_cast<std::size_t>(c)] - m1[static_cast<std::size_t>(c)])));
    const Q nu = worst * ell;
    const Q nu_prime = m0.back() + m1.back();
    const auto t = construct_coupling(x0, x1, cell, ell, nu, nu_prime);
    ASSERT_EQ(t.row_sums(), x0);
    ASSERT_EQ(t.column_sums(), x1);
    ASSERT_GE(t.diagonal_mass, 1 - nu - nu_prime);
    ASSERT_EQ(t.same_cell_mass(cell), t.diagonal_mass);
    ASSERT_EQ(t.p, 1 - t.diagonal_mass);
    for (const auto& row : t.weights)
      for (const auto& w : row) ASSERT_GE(w, 0);
  }
}

TEST(Partition, GridCells) {
  const FeaturePartition p(kUnit, 0.25);
  EXPECT_EQ(p.cell_count(), 4);
  const std::vector<double> a{0.1}, b{0.3}, c{1.0};
  EXPECT_EQ(p.cell(a), 0);
  EXPECT_EQ(p.cell(b), 1);
  EXPECT_EQ(p.cell(c), 3);
  const FeaturePartition t = FeaturePartition::trivial(kUnit);
  EXPECT_EQ(t.cell(a), t.cell(c));
}

TEST(Partition, DiscreteAtomsLeaveEmptyCellsInT) {
  const auto d = distribution_from_json(
      R"({"kind":"discrete","atoms":[{"point":[0.0],"weight":"1/2"},{"point":[1.0],"weight":"1/2"}]})");
  const FeaturePartition p(d, 0.25);
  const std::vector<double> zero{0.0}, mid{0.5}, one{1.0};
  EXPECT_GE(p.cell(zero), 0);
  EXPECT_GE(p.cell(one), 0);
  EXPECT_EQ(p.cell(mid), -1);
}

TEST(Lift, SingletonAndCopies) {
  const FeaturePartition part(kUnit, 0.25);
  const MRFG g(3, std::vector<Edge>{{0, 1}}, {0}, 1, {0.1, 0.2, 0.3});
  const std::vector<MRFG> one{g};
  EXPECT_EQ(lift_partition(one, part, 2, 0.2), std::vector<int>{0});
  const MRFG h = g.with_features({0.12, 0.21, 0.33});
  const std::vector<MRFG> two{g, h};
  EXPECT_EQ(lift_partition(two, part, 2, 0.2), (std::vector<int>{0, 0}));
}

TEST(Lift, EdgeVersusTwoIsolatedVertices) {
  // Level 1 agrees with similarity (the pair is 1-similar); level 2 separates.
  const FeatureDistribution none = FeatureDistribution::none();
  const FeaturePartition part = FeaturePartition::trivial(none);
  const std::vector<MRFG> pair{MRFG::plain(2, std::vector<Edge>{{0, 1}}), MRFG::plain(2, {})};
  const auto l1 = lift_partition(pair, part, 1, 0.1);
  EXPECT_EQ(l1[0], l1[1]);
  const auto l2 = lift_partition(pair, part, 2, 0.1);
  EXPECT_NE(l2[0], l2[1]);
}

TEST(Lift, ClassesRefineSimilarity) {
  std::mt19937_64 rng(8);
  const double eps = 0.25;
  int same_pairs = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const int k = trial % 3;
    const double eta = trial % 2 ? 0.3 : 0.6;
    const FeaturePartition part(kUnit, eps);
    std::vector<MRFG> coll;
    while (coll.size() < 30) {
      const std::size_t n = 3 + static_cast<std::size_t>(std::uniform_int_distribution<int>(0, 5)(rng));
      MRFG g = oracle::random_graph(rng, n, 0.3, 1, {0});
      coll.push_back(g);
      if (coll.size() < 30) coll.push_back(perturb(g, 0.05, rng).with_roots({0}));
    }
    for (auto& g : coll) {
      std::vector<double> f = g.feature_matrix();
      for (auto& x : f) x = std::clamp(x, 0.0, 1.0);
      g = g.with_features(f);
    }
    const auto labels = lift_partition(coll, part, k, eta);
    for (std::size_t a = 0; a < coll.size(); ++a) {
      for (std::size_t b = a + 1; b < coll.size(); ++b) {
        if (labels[a] != labels[b]) continue;
        ++same_pairs;
        EXPECT_TRUE(similar(coll[a], coll[b], {k, eps, eta})) << "trial " << trial << " pair " << a << "," << b;
      }
    }
  }
  EXPECT_GT(same_pairs, 50);
}
