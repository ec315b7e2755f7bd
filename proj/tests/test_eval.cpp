#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "agglogic/eval.hpp"
#include "oracles.hpp"

using namespace agglogic;

namespace {

MRFG permute_nonroots(const MRFG& g, std::mt19937_64& rng) {
  std::vector<Vertex> perm(g.n());
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<Vertex> free;
  for (std::size_t v = 0; v < g.n(); ++v) {
    if (std::find(g.roots().begin(), g.roots().end(), static_cast<Vertex>(v)) == g.roots().end())
      free.push_back(static_cast<Vertex>(v));
  }
  auto shuffled = free;
  std::shuffle(shuffled.begin(), shuffled.end(), rng);
  for (std::size_t i = 0; i < free.size(); ++i) perm[static_cast<std::size_t>(free[i])] = shuffled[i];
  std::vector<Edge> e;
  for (auto [a, b] : g.edges()) e.emplace_back(perm[static_cast<std::size_t>(a)], perm[static_cast<std::size_t>(b)]);
  std::vector<double> f(g.feature_matrix().size());
  for (std::size_t v = 0; v < g.n(); ++v)
    for (std::size_t i = 0; i < g.dimension(); ++i)
      f[static_cast<std::size_t>(perm[v]) * g.dimension() + i] = g.feature(static_cast<Vertex>(v), i);
  return MRFG(g.n(), e, g.roots(), g.dimension(), f, g.feature_box());
}

}  // namespace

TEST(Eval, MeanOfTwoFeatures) {
  const MRFG g(2, {}, {}, 1, {0.2, 0.6});
  EXPECT_DOUBLE_EQ(eval(parse_term("mean u . val1(u)"), g), 0.4);
}

TEST(Eval, LMeanAtIsolatedRootIsZero) {
  const MRFG g(3, std::vector<Edge>{{1, 2}}, {0}, 1, {0.9, 0.5, 0.5});
  EXPECT_EQ(eval(parse_term("lmean v ~ u . val1(v)", std::vector<std::string>{"u"}), g), 0.0);
  const MRFG h = g.with_roots({1});
  EXPECT_DOUBLE_EQ(eval(parse_term("lmean v ~ u . val1(v)", std::vector<std::string>{"u"}), h), 0.5);
}

TEST(Eval, ConstantIsConstant) {
  const auto values = eval_distribution(parse_term("3"), ModelSpec::dense(0.5), 20, FeatureDistribution::none(), 10,
                                        RngStream(1));
  for (double v : values) EXPECT_EQ(v, 3.0);
}

TEST(Eval, Errors) {
  const MRFG g = MRFG::plain(3, {}, {0});
  try {
    (void)eval(parse_term("E(a, b)"), g);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::kArityMismatch);
  }
  try {
    (void)eval(parse_term("mean u . 1"), MRFG::plain(0, {}));
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_EQ(e.kind(), EvalError::Kind::kEmptyDomain);
  }
  EXPECT_THROW((void)eval(parse_term("val1(u)"), g), EvalError);
}

TEST(Eval, TriangleOnAllGraphsOfFourVertices) {
  const Term t = compile_fo(fo::triangle());
  for (const auto& g : oracle::all_graphs(4)) {
    EXPECT_EQ(eval(t, g), count_triangles(g) > 0 ? 1.0 : 0.0);
  }
}

TEST(Eval, AgreesWithNaiveInterpreter) {
  std::mt19937_64 rng(21);
  for (int i = 0; i < 3000; ++i) {
    const std::vector<std::string> vars{"a", "b"};
    const ExprPtr e = oracle::random_term(rng, vars, 4, 2);
    const Term t = make_term(e, vars);
    const std::size_t n = 2 + static_cast<std::size_t>(i % 8);
    const double p = i % 3 == 0 ? 0.15 : 0.5;
    const MRFG g = oracle::random_graph(rng, n, p, 2, {0, static_cast<Vertex>(i % 2 ? 1 : 0)});
    const double expected = oracle::naive_eval(e, g, vars);
    ASSERT_NEAR(eval(t, g), expected, 1e-9) << to_string(t);
  }
}

TEST(Eval, AgreesWithNaiveInterpreterOnSparseGraphs) {
  // Edge-guarded sums are where the fast paths kick in.
  std::mt19937_64 rng(22);
  const std::vector<std::string> vars{"a"};
  const std::vector<ExprPtr> fixed{
      build::mean("x", build::edge("a", "x")),
      build::sup("x", build::apply(FunctionId::kAnd, {build::edge("a", "x"), build::val(1, "x")})),
      build::mean("x", build::apply(FunctionId::kProd2, {build::edge("x", "a"), build::val(1, "x")})),
      build::mean("x", build::apply(FunctionId::kShift, {build::edge("a", "x")}, {0.5})),
      build::sup("x", build::apply(FunctionId::kMin, {build::edge("a", "x"), build::constant(-1.0)})),
      build::mean("x", build::mean("y", build::apply(FunctionId::kMin, {build::edge("x", "y"), build::val(1, "y")}))),
      build::sup("x", build::lmean("y", "x", build::apply(FunctionId::kNeg, {build::edge("a", "y")}))),
  };
  for (int i = 0; i < 400; ++i) {
    const MRFG g = oracle::random_graph(rng, 30, 2.0 / 30.0, 1, {static_cast<Vertex>(i % 30)});
    for (const auto& e : fixed) {
      const Term t = make_term(e, vars);
      ASSERT_NEAR(eval(t, g), oracle::naive_eval(e, g, vars), 1e-9) << to_string(t);
    }
    const ExprPtr r = oracle::random_term(rng, vars, 4, 1);
    ASSERT_NEAR(eval(make_term(r, vars), g), oracle::naive_eval(r, g, vars), 1e-9) << to_string(r);
  }
}

TEST(Eval, InvariantUnderRelabelingNonRoots) {
  std::mt19937_64 rng(23);
  for (int i = 0; i < 300; ++i) {
    const std::vector<std::string> vars{"a"};
    const Term t = make_term(oracle::random_term(rng, vars, 4, 1), vars);
    const MRFG g = oracle::random_graph(rng, 9, 0.3, 1, {2});
    EXPECT_NEAR(eval(t, g), eval(t, permute_nonroots(g, rng)), 1e-12) << to_string(t);
  }
}

TEST(Eval, WithinBoundAndLipschitzForMeanFreeTerms) {
  std::mt19937_64 rng(24);
  const std::vector<Interval> box{{0.0, 1.0}};
  std::uniform_real_distribution<double> shift(-1.0, 1.0);
  int checked = 0;
  while (checked < 300) {
    const std::vector<std::string> vars{"a"};
    const Term t = make_term(oracle::random_term(rng, vars, 4, 1), vars);
    if (t.contains(TermKind::kMean)) continue;
    ++checked;
    const auto m = metrics(t, box);
    const MRFG g = oracle::random_graph(rng, 8, 0.35, 1, {0});
    const double delta = 0.05;
    std::vector<double> f = g.feature_matrix();
    for (auto& x : f) x = std::clamp(x + delta * shift(rng), 0.0, 1.0);
    const MRFG h = g.with_features(f);
    const double a = eval(t, g);
    EXPECT_TRUE(m.bound.contains(a, 1e-9));
    EXPECT_LE(std::fabs(a - eval(t, h)), m.slope * delta + 1e-9) << to_string(t);
  }
}

TEST(Eval, DistributionIsReproducible) {
  const Term t = parse_term("mean u . val1(u)");
  const auto d = FeatureDistribution::uniform_box({{0.0, 1.0}});
  const auto a = eval_distribution(t, ModelSpec::dense(0.5), 50, d, 5, RngStream(9));
  const auto b = eval_distribution(t, ModelSpec::dense(0.5), 50, d, 5, RngStream(9));
  EXPECT_EQ(a, b);
  EXPECT_NE(a[0], a[1]);
}
