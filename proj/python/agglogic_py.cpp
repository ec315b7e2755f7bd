#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "agglogic/dense.hpp"
#include "agglogic/eval.hpp"
#include "agglogic/games.hpp"
#include "agglogic/graph.hpp"
#include "agglogic/lab.hpp"
#include "agglogic/random.hpp"
#include "agglogic/sparse.hpp"
#include "agglogic/term.hpp"

namespace py = pybind11;
using namespace agglogic;

namespace {

MRFG make_graph(std::size_t n, const std::vector<std::pair<int, int>>& edges, std::vector<int> roots,
                const std::vector<std::vector<double>>& features) {
  const std::size_t d = features.empty() ? 0 : features.front().size();
  if (!features.empty() && features.size() != n) throw std::invalid_argument("need one feature vector per vertex");
  std::vector<double> flat;
  for (const auto& f : features) {
    if (f.size() != d) throw std::invalid_argument("feature vectors must share a dimension");
    flat.insert(flat.end(), f.begin(), f.end());
  }
  std::vector<Edge> e(edges.begin(), edges.end());
  return MRFG(n, e, std::move(roots), d, std::move(flat));
}

FeatureDistribution dist_or_none(const std::string& text) {
  return text.empty() ? FeatureDistribution::none() : distribution_from_json(text);
}

}  // namespace

PYBIND11_MODULE(_agglogic, m) {
  m.doc() = "Averaging logic on featured graphs";
  m.attr("__version__") = "0.1.0";

  py::register_exception<TermError>(m, "TermError", PyExc_ValueError);
  py::register_exception<EvalError>(m, "EvalError", PyExc_ValueError);
  py::register_exception<GraphError>(m, "GraphError", PyExc_ValueError);

  py::class_<Term>(m, "Term")
      .def_property_readonly("arity", &Term::arity)
      .def_property_readonly("closed", &Term::closed)
      .def_property_readonly("free_variables", &Term::free_variables)
      .def("__str__", [](const Term& t) { return to_string(t); })
      .def("__repr__", [](const Term& t) { return "Term('" + to_string(t) + "')"; });

  m.def("parse_term", [](const std::string& s) { return parse_term(s); }, py::arg("text"));
  m.def("triangle_term", [] { return compile_fo(fo::triangle()); },
        "Characteristic term of 'there is a triangle'.");

  py::class_<TermMetrics>(m, "TermMetrics")
      .def_readonly("rank", &TermMetrics::rank)
      .def_readonly("srank", &TermMetrics::srank)
      .def_readonly("mrank", &TermMetrics::mrank)
      .def_readonly("lmrank", &TermMetrics::lmrank)
      .def_readonly("slope", &TermMetrics::slope)
      .def_property_readonly("bound", [](const TermMetrics& t) { return std::make_pair(t.bound.lo, t.bound.hi); });
  m.def(
      "metrics",
      [](const Term& t, const std::vector<std::pair<double, double>>& box) {
        std::vector<Interval> b;
        for (auto [lo, hi] : box) b.push_back({lo, hi});
        return metrics(t, b);
      },
      py::arg("term"), py::arg("feature_box") = std::vector<std::pair<double, double>>{});

  py::class_<MRFG>(m, "Graph")
      .def(py::init(&make_graph), py::arg("n"), py::arg("edges") = std::vector<std::pair<int, int>>{},
           py::arg("roots") = std::vector<int>{}, py::arg("features") = std::vector<std::vector<double>>{})
      .def_property_readonly("n", &MRFG::n)
      .def_property_readonly("roots", &MRFG::roots)
      .def_property_readonly("dimension", &MRFG::dimension)
      .def("edges", &MRFG::edges)
      .def("to_json", [](const MRFG& g) { return to_json(g); })
      .def_static("from_json", &graph_from_json);

  m.def("eval", [](const Term& t, const MRFG& g) { return eval(t, g); }, py::arg("term"), py::arg("graph"));
  m.def(
      "sample_graph",
      [](const std::string& model, double param, std::size_t n, const std::string& dist, std::uint64_t seed) {
        RngStream rng(seed);
        const ModelSpec spec = model == "dense" ? ModelSpec::dense(param) : ModelSpec::linear_sparse(param);
        return sample_graph(spec, n, dist_or_none(dist), rng);
      },
      py::arg("model"), py::arg("param"), py::arg("n"), py::arg("distribution") = "", py::arg("seed") = 1);
  m.def(
      "similar",
      [](const MRFG& g, const MRFG& h, int k, double epsilon, double eta) {
        return similar(g, h, GameParams{k, epsilon, eta});
      },
      py::arg("g"), py::arg("h"), py::arg("k"), py::arg("epsilon"), py::arg("eta"));
  m.def(
      "dense_controller",
      [](const Term& t, double p, const std::string& dist, std::uint64_t seed, std::size_t mc_samples) {
        DenseConfig cfg;
        cfg.mc_samples = mc_samples;
        const auto ctrl = build_controller(t, p, dist_or_none(dist), cfg);
        return ctrl.value(GraphType(), {}, RngStream(seed));
      },
      py::arg("term"), py::arg("p"), py::arg("distribution") = "", py::arg("seed") = 1,
      py::arg("mc_samples") = 20000, "Value of the dense controller of a closed term.");
  m.def(
      "sparse_controller",
      [](const Term& t, const MRFG& g, double c, const std::string& dist, std::uint64_t seed) {
        SparseConfig cfg;
        cfg.c = c;
        cfg.distribution = dist_or_none(dist);
        return lambda(t, g, cfg, RngStream(seed));
      },
      py::arg("term"), py::arg("graph"), py::arg("c") = 1.0, py::arg("distribution") = "", py::arg("seed") = 1);
  m.def(
      "check_homogeneity",
      [](const MRFG& g, int k, double eta, std::size_t r) { return to_json(check_homogeneity(g, k, eta, r)); },
      py::arg("graph"), py::arg("k"), py::arg("eta"), py::arg("r"), "AxiomReport as JSON text.");
  m.def("ks_statistic", &ks_statistic, py::arg("a"), py::arg("b"));
  m.def("hoeffding_bound", &hoeffding_bound, py::arg("n"), py::arg("a"), py::arg("b"), py::arg("lam"));
}
