#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "agglogic/dense.hpp"
#include "agglogic/eval.hpp"

using namespace agglogic;

namespace {

const FeatureDistribution kUnit = FeatureDistribution::uniform_box({{0.0, 1.0}});
const FeatureDistribution kSquare = FeatureDistribution::uniform_box({{0.0, 1.0}, {0.0, 1.0}});

GraphType single() { return GraphType({0}, {{false}}); }
GraphType pair(bool edge) { return GraphType({0, 1}, {{false, edge}, {edge, false}}); }
GraphType empty_type() { return GraphType({}, {}); }

double binom(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

}  // namespace

TEST(Types, Counts) {
  EXPECT_EQ(enumerate_types(0).size(), 1u);
  EXPECT_EQ(enumerate_types(1).size(), 1u);
  EXPECT_EQ(enumerate_types(2).size(), 3u);
  // Set partitions of 3 elements with graphs on the blocks: 1 + 3*2 + 8.
  EXPECT_EQ(enumerate_types(3).size(), 15u);
  EXPECT_THROW(enumerate_types(6), std::invalid_argument);
}

TEST(Types, Validation) {
  EXPECT_THROW(GraphType({1}, {{false}}), std::invalid_argument);
  EXPECT_THROW(GraphType({0, 1}, {{false, true}, {false, false}}), std::invalid_argument);
  EXPECT_THROW(GraphType({0}, {{true}}), std::invalid_argument);
}

TEST(Types, TypeOfTuple) {
  const auto adj = [](int a, int b) { return a + b == 3; };
  const std::vector<int> v{1, 2, 1};
  const GraphType t = type_of(v, adj);
  EXPECT_EQ(t.classes(), (std::vector<int>{0, 1, 0}));
  EXPECT_TRUE(t.adjacent(0, 1));
  EXPECT_TRUE(t.equal(0, 2));
}

TEST(Types, ExtensionsEnumerateAllConsistentTypes) {
  for (int k = 0; k <= 3; ++k) {
    std::set<GraphType> from_ext;
    for (const auto& t : enumerate_types(k))
      for (const auto& e : extensions(t)) {
        EXPECT_EQ(e.restrict_last(), t);
        from_ext.insert(e);
      }
    const auto all = enumerate_types(k + 1);
    EXPECT_EQ(from_ext, std::set<GraphType>(all.begin(), all.end()));
  }
}

TEST(Alpha, Examples) {
  const GraphType t = single();
  const GraphType adj({0, 1}, {{false, true}, {true, false}});
  EXPECT_DOUBLE_EQ(alpha(t, adj, 0.5), 0.5);
  EXPECT_DOUBLE_EQ(alpha_adj(t, adj, 0, 0.7), 1.0);
  const GraphType same({0, 0}, {{false}});
  EXPECT_EQ(alpha(t, same, 0.5), 0.0);
  EXPECT_THROW((void)alpha(t, pair(true), 0.0), std::invalid_argument);
  EXPECT_THROW((void)alpha(pair(true), adj, 0.5), std::invalid_argument);
  EXPECT_THROW((void)alpha_adj(t, pair(false), 0, 0.5), std::invalid_argument);
}

TEST(Alpha, SumsToOne) {
  for (double p : {0.3, 0.5, 0.9}) {
    for (int k = 0; k <= 4; ++k) {
      for (const auto& t : enumerate_types(k)) {
        double s = 0.0;
        for (const auto& e : extensions(t))
          if (e.last_is_new()) s += alpha(t, e, p);
        EXPECT_NEAR(s, 1.0, 1e-12);
        for (int i = 0; i < k; ++i) {
          double sa = 0.0;
          for (const auto& e : extensions_adj(t, i)) sa += alpha_adj(t, e, i, p);
          EXPECT_NEAR(sa, 1.0, 1e-12);
        }
      }
    }
  }
  // Independent check of the k = 2 case through the binomial identity.
  const double p = 0.3;
  double s = 0.0;
  for (const auto& e : extensions(pair(false)))
    if (e.last_is_new()) s += alpha(pair(false), e, p);
  double b = 0.0;
  for (int r = 0; r <= 2; ++r) b += binom(2, r) * std::pow(p, r) * std::pow(1 - p, 2 - r);
  EXPECT_NEAR(s, b, 1e-12);
}

TEST(Controller, EdgeIsDeterministic) {
  const auto ctrl = build_controller(parse_term("E(u, v)"), 0.5, kUnit);
  const std::vector<std::vector<double>> x{{0.1}, {0.2}};
  EXPECT_EQ(ctrl.value(pair(true), x, RngStream(1)), 1.0);
  EXPECT_EQ(ctrl.value(pair(false), x, RngStream(1)), 0.0);
}

TEST(Controller, ValReturnsTheFeature) {
  const auto ctrl = build_controller(parse_term("val1(u)"), 0.5, kUnit);
  const std::vector<std::vector<double>> x{{0.37}};
  EXPECT_EQ(ctrl.value(single(), x, RngStream(1)), 0.37);
}

TEST(Controller, MeanOfFeature) {
  const auto ctrl = build_controller(parse_term("mean u . val1(u)"), 0.5, kUnit);
  const double v = ctrl.value(empty_type(), {}, RngStream(2));
  EXPECT_NEAR(v, 0.5, 4 * std::sqrt(1.0 / 12.0 / 20000.0));
}

TEST(Controller, SupOfFeature) {
  const auto ctrl = build_controller(parse_term("sup v . val1(v)"), 0.5, kUnit);
  EXPECT_NEAR(ctrl.value(empty_type(), {}, RngStream(3)), 1.0, 1e-12);
}

TEST(Controller, ExistsEdge) {
  const Term t = compile_fo(fo::exists("u", fo::exists("v", fo::edge("u", "v"))));
  const auto ctrl = build_controller(t, 0.5, kUnit);
  EXPECT_EQ(ctrl.value(empty_type(), {}, RngStream(4)), 1.0);
}

TEST(Controller, MeanOfEdgeIsP) {
  const auto ctrl = build_controller(parse_term("mean v . E(u, v)"), 0.3, kUnit);
  const std::vector<std::vector<double>> x{{0.5}};
  EXPECT_NEAR(ctrl.value(single(), x, RngStream(5)), 0.3, 1e-12);
}

TEST(Controller, LMeanAveragesOverNeighbours) {
  // lmean v ~ u . E(v, w) at the type u~w: the neighbour v of u is adjacent to w with probability p.
  const Term t = parse_term("lmean v ~ u . E(v, w)", std::vector<std::string>{"u", "w"});
  const auto ctrl = build_controller(t, 0.3, kUnit);
  const std::vector<std::vector<double>> x{{0.5}, {0.5}};
  EXPECT_NEAR(ctrl.value(pair(true), x, RngStream(6)), 0.3, 1e-12);
}

TEST(Controller, Errors) {
  EXPECT_THROW(build_controller(parse_term("val2(u)"), 0.5, kUnit), std::invalid_argument);
  EXPECT_THROW(build_controller(parse_term("val1(u)"), 1.0, kUnit), std::invalid_argument);
  const auto ctrl = build_controller(parse_term("val1(u)"), 0.5, kUnit);
  const std::vector<std::vector<double>> bad{{0.1, 0.2}};
  EXPECT_THROW((void)ctrl.value(single(), bad, RngStream(1)), EvalError);
  EXPECT_THROW((void)ctrl.value(pair(true), {}, RngStream(1)), EvalError);
}

TEST(Controller, DeterministicGivenStream) {
  const auto ctrl = build_controller(parse_term("mean u . sup v . min(val1(u), val1(v))"), 0.5, kUnit,
                                     DenseConfig{2000, 200, 50});
  EXPECT_EQ(ctrl.value(empty_type(), {}, RngStream(7)), ctrl.value(empty_type(), {}, RngStream(7)));
}

TEST(Controller, ClosedTermVarianceWithinBudget) {
  const DenseConfig cfg{2000, 500, 50};
  const auto ctrl = build_controller(parse_term("mean u . val1(u)"), 0.5, kUnit, cfg);
  std::vector<double> v;
  for (int i = 0; i < 50; ++i) v.push_back(ctrl.value(empty_type(), {}, RngStream(100 + i)));
  double m = 0.0;
  for (double x : v) m += x / 50.0;
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m) / 49.0;
  const double budget = 2.0 * (1.0 / 12.0) / static_cast<double>(cfg.mc_samples);
  EXPECT_LE(var, budget);
}

TEST(Controller, EmpiricalLipschitz) {
  const Term t = parse_term("mean v . prod2(val1(u), val1(v))");
  const auto slope = metrics(t, kUnit.support_box()).slope;
  const auto ctrl = build_controller(t, 0.5, kUnit, DenseConfig{4000, 200, 50});
  RngStream pick(8);
  for (int i = 0; i < 50; ++i) {
    const std::vector<std::vector<double>> x{{pick.uniform()}};
    const std::vector<std::vector<double>> y{{pick.uniform()}};
    const RngStream s(200 + static_cast<std::uint64_t>(i));
    const double diff = std::fabs(ctrl.value(single(), x, s) - ctrl.value(single(), y, s));
    EXPECT_LE(diff, slope * std::fabs(x[0][0] - y[0][0]) + 1e-9);
  }
}

TEST(Controller, SupConvergesWithMorePoints) {
  // Interior maximum at 0.3, not a corner of the box.
  const Term t = parse_term("sup v . neg(abs(shift(-0.3, val1(v))))");
  const auto few = build_controller(t, 0.5, kUnit, DenseConfig{1000, 1000, 50});
  const auto many = build_controller(t, 0.5, kUnit, DenseConfig{1000, 10000, 50});
  for (int i = 0; i < 100; ++i) {
    const RngStream s(300 + static_cast<std::uint64_t>(i));
    const double a = few.value(empty_type(), {}, s);
    const double b = many.value(empty_type(), {}, s);
    EXPECT_NEAR(a, b, 0.02);
    // The larger set extends the smaller one, so the value cannot drop.
    EXPECT_GE(b, a);
  }
  const Term corner = parse_term("sup v . min(val1(v), val2(v))");
  const auto c = build_controller(corner, 0.5, kSquare, DenseConfig{1000, 1000, 50});
  EXPECT_EQ(c.value(empty_type(), {}, RngStream(9)), 1.0);
}
