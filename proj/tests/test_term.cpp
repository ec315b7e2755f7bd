#include <gtest/gtest.h>

#include <random>

#include "agglogic/eval.hpp"
#include "agglogic/term.hpp"
#include "oracles.hpp"

using namespace agglogic;

namespace {

const std::vector<Interval> kUnit{{0.0, 1.0}};

TermErrorKind error_kind(const std::string& text) {
  try {
    (void)parse_term(text);
  } catch (const TermError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error for " << text;
  return TermErrorKind::kInvalidTerm;
}

}  // namespace

TEST(Parse, ValAtom) {
  const Term t = parse_term("val1(u)");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.node(t.root()).kind, TermKind::kVal);
  EXPECT_EQ(t.node(t.root()).feature, 0);
  EXPECT_EQ(t.free_variables(), std::vector<std::string>{"u"});
  EXPECT_EQ(t.feature_dimension(), 1);
}

TEST(Parse, NestedMeanLMean) {
  const Term t = parse_term("mean u . lmean v ~ u . val1(v)");
  const Term expected = make_term(build::mean("u", build::lmean("v", "u", build::val(1, "v"))));
  EXPECT_TRUE(same_structure(t, expected));
  EXPECT_TRUE(t.closed());
  const auto& m = t.node(t.root());
  EXPECT_EQ(m.kind, TermKind::kMean);
  const auto& l = t.node(m.children[0]);
  EXPECT_EQ(l.kind, TermKind::kLMean);
  EXPECT_EQ(l.a, 0);
  EXPECT_EQ(l.scope, 1);
}

TEST(Parse, UnboundAnchor) {
  EXPECT_EQ(error_kind("lmean v ~ w . val1(v)"), TermErrorKind::kUnboundAnchor);
  // Declaring the anchor free makes it legal.
  const Term t = parse_term("lmean v ~ w . val1(v)", std::vector<std::string>{"w"});
  EXPECT_EQ(t.arity(), 1);
}

TEST(Parse, Errors) {
  EXPECT_EQ(error_kind("foo(u)"), TermErrorKind::kUnknownFunction);
  EXPECT_EQ(error_kind("add(val1(u))"), TermErrorKind::kArityMismatch);
  EXPECT_EQ(error_kind("mean u val1(u)"), TermErrorKind::kSyntax);
  EXPECT_EQ(error_kind("val1(u) extra"), TermErrorKind::kSyntax);
  EXPECT_EQ(error_kind(""), TermErrorKind::kSyntax);
  try {
    (void)parse_term("add(val1(u), ?)");
    FAIL();
  } catch (const TermError& e) {
    EXPECT_EQ(e.kind(), TermErrorKind::kSyntax);
    EXPECT_EQ(e.position(), 13u);
  }
}

TEST(Parse, FreeVariableOrderIsFirstOccurrence) {
  const Term t = parse_term("add(val1(b), E(a, b))");
  EXPECT_EQ(t.free_variables(), (std::vector<std::string>{"b", "a"}));
  const Term s = parse_term("E(a, b)", std::vector<std::string>{"b", "a"});
  EXPECT_EQ(s.node(s.root()).a, 1);
  EXPECT_EQ(s.node(s.root()).b, 0);
}

TEST(Parse, ShadowingIsResolvedInnermost) {
  // The inner u shadows the outer one; E(u, u) refers to the inner binder.
  const Term t = parse_term("mean u . sup u . E(u, u)");
  const auto& sup = t.node(t.node(t.root()).children[0]);
  const auto& e = t.node(sup.children[0]);
  EXPECT_EQ(e.a, 1);
  EXPECT_EQ(e.b, 1);
}

TEST(Parse, RoundTripOnRandomTerms) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 300; ++i) {
    const ExprPtr e = oracle::random_term(rng, {"a", "b"}, 4, 2);
    const Term t = make_term(e, std::vector<std::string>{"a", "b"});
    const std::string text = to_string(t);
    const Term back = parse_term(text, std::vector<std::string>{"a", "b"});
    EXPECT_TRUE(same_structure(t, back)) << text;
    EXPECT_EQ(to_string(back), text);
  }
}

TEST(Metrics, PaperExamples) {
  auto m = metrics(parse_term("val1(u)"), kUnit);
  EXPECT_EQ(m.rank, 0);
  EXPECT_DOUBLE_EQ(m.slope, 1.0);

  m = metrics(parse_term("mean v . val1(v)"), kUnit);
  EXPECT_EQ(m.rank, 1);
  EXPECT_EQ(m.mrank, 1);
  EXPECT_EQ(m.srank, 0);
  EXPECT_DOUBLE_EQ(m.slope, 2.0);

  m = metrics(parse_term("sup u . mean v . E(u, v)"), kUnit);
  EXPECT_EQ(m.rank, 2);
  EXPECT_EQ(m.srank, 1);
  EXPECT_EQ(m.mrank, 1);
  EXPECT_DOUBLE_EQ(m.slope, 2.0);

  m = metrics(parse_term("mean u . lmean v ~ u . val1(v)"), kUnit);
  EXPECT_EQ(m.lmrank, 1);
  EXPECT_EQ(m.mrank, 2);
  EXPECT_DOUBLE_EQ(m.slope, 3.0);
  EXPECT_EQ(m.bound, (Interval{0.0, 1.0}));
}

TEST(Metrics, CoreRadius) {
  EXPECT_EQ(core_radius(0), 0u);
  EXPECT_EQ(core_radius(1), 1u);
  EXPECT_EQ(core_radius(2), 4u);
  EXPECT_EQ(core_radius(3), 13u);
}

TEST(Metrics, ValBeyondBoxThrows) {
  EXPECT_THROW((void)metrics(parse_term("val2(u)"), kUnit), TermError);
}

TEST(Registry, LipschitzSpotChecks) {
  std::mt19937_64 rng(3);
  for (const auto& f : function_registry()) {
    std::uniform_real_distribution<double> u(f.input_box.lo, f.input_box.hi);
    std::vector<double> params;
    if (f.param_count == 1) params = {1.7};
    if (f.param_count == 2) params = {-2.0, 3.0};
    const std::vector<Interval> in(static_cast<std::size_t>(f.arity), f.input_box);
    const double L = f.slope(params, in);
    for (int s = 0; s < 10000; ++s) {
      std::vector<double> x(static_cast<std::size_t>(f.arity));
      std::vector<double> y(x.size());
      double dist = 0.0;
      for (std::size_t i = 0; i < x.size(); ++i) {
        x[i] = u(rng);
        y[i] = u(rng);
        dist = std::max(dist, std::fabs(x[i] - y[i]));
      }
      const double fx = f.apply(x, params);
      const double fy = f.apply(y, params);
      ASSERT_LE(std::fabs(fx - fy), L * dist + 1e-12) << f.name;
      const Interval img = f.image(params, in);
      ASSERT_TRUE(img.contains(fx, 1e-12)) << f.name;
      ASSERT_DOUBLE_EQ(fx, oracle::apply_fn(f.id, x, params)) << f.name;
    }
  }
}

TEST(Metrics, BoundContainsEval) {
  std::mt19937_64 rng(5);
  const std::vector<Interval> box{{0.0, 1.0}, {0.0, 1.0}};
  for (int i = 0; i < 300; ++i) {
    const ExprPtr e = oracle::random_term(rng, {"a"}, 4, 2);
    const Term t = make_term(e, std::vector<std::string>{"a"});
    const auto m = metrics(t, box);
    const MRFG g = oracle::random_graph(rng, 1 + i % 7, 0.4, 2, {0});
    const double v = eval(t, g);
    EXPECT_TRUE(m.bound.contains(v, 1e-9)) << to_string(t) << " = " << v;
  }
}

TEST(CompileFo, ExistsEdge) {
  const auto phi = fo::exists("u", fo::exists("v", fo::edge("u", "v")));
  const Term t = compile_fo(phi);
  const Term expected = make_term(build::sup("u", build::sup("v", build::edge("u", "v"))));
  EXPECT_TRUE(same_structure(t, expected));
}

TEST(CompileFo, NegatedEquality) {
  const Term t = compile_fo(fo::negate(fo::eq("u", "v")));
  const Term expected = make_term(build::apply(FunctionId::kNot, {build::eq("u", "v")}));
  EXPECT_TRUE(same_structure(t, expected));
}

TEST(CompileFo, AgreesWithModelCheckerOnSmallGraphs) {
  std::mt19937_64 rng(17);
  std::vector<FOPtr> sentences{fo::triangle()};
  while (sentences.size() < 20) sentences.push_back(oracle::random_fo(rng, {}, 3, 8));
  for (std::size_t n = 1; n <= 6; ++n) {
    const auto graphs = oracle::all_graphs(n);
    for (const auto& phi : sentences) {
      const Term t = compile_fo(phi);
      for (const auto& g : graphs) {
        ASSERT_EQ(eval(t, g), oracle::holds(phi, g) ? 1.0 : 0.0) << to_string(phi);
      }
    }
  }
}
