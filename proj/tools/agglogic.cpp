// agglogic: command line front end.
//
//   agglogic sample     --config cfg.json [--seed S] [--out DIR]
//   agglogic eval       --term T --config cfg.json
//   agglogic controller --term T --config cfg.json [--seed S]
//   agglogic game       --config cfg.json
//   agglogic axioms     --config cfg.json [--seed S] [--out DIR]
//   agglogic experiment --config cfg.json [--seed S] [--out DIR] [--term T]
//
// Exit codes: 0 pass, 1 criterion failure, 2 usage error.

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <nlohmann/json.hpp>

#include "agglogic/dense.hpp"
#include "agglogic/eval.hpp"
#include "agglogic/games.hpp"
#include "agglogic/graph.hpp"
#include "agglogic/lab.hpp"
#include "agglogic/random.hpp"
#include "agglogic/sparse.hpp"
#include "agglogic/term.hpp"

namespace fs = std::filesystem;
using namespace agglogic;
using json = nlohmann::json;

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string term;
};

std::string read_file(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw UsageError("cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json load_config(const Options& o) {
  if (o.config.empty()) throw UsageError("--config is required");
  try {
    return json::parse(read_file(o.config));
  } catch (const json::exception& e) {
    throw UsageError("config " + o.config + " is not valid JSON: " + e.what());
  }
}

/// A graph given inline as an object or as a path relative to the config.
MRFG graph_field(const json& cfg, const char* key, const Options& o) {
  if (!cfg.contains(key)) throw UsageError(std::string("config field '") + key + "' is required");
  const json& v = cfg.at(key);
  if (v.is_string()) {
    const fs::path p = fs::path(o.config).parent_path() / v.get<std::string>();
    return graph_from_json(read_file(p));
  }
  return graph_from_json(v.dump());
}

FeatureDistribution distribution_field(const json& cfg) {
  if (!cfg.contains("distribution")) return FeatureDistribution::none();
  return distribution_from_json(cfg.at("distribution").dump());
}

std::string term_text(const json& cfg, const Options& o) {
  if (!o.term.empty()) return o.term;
  if (cfg.contains("term")) return cfg.at("term").get<std::string>();
  throw UsageError("a term is required (--term or config field 'term')");
}

std::uint64_t seed_of(const json& cfg, const Options& o) {
  if (o.seed) return *o.seed;
  return cfg.value("seed", std::uint64_t{1});
}

void write_output(const Options& o, const std::string& name, const std::string& content) {
  if (o.out.empty()) {
    std::cout << content;
    if (!content.empty() && content.back() != '\n') std::cout << '\n';
    return;
  }
  fs::create_directories(o.out);
  std::ofstream f(fs::path(o.out) / name);
  f << content;
  if (!content.empty() && content.back() != '\n') f << '\n';
  std::cout << (fs::path(o.out) / name).string() << '\n';
}

int cmd_sample(const Options& o) {
  const json cfg = load_config(o);
  const auto d = distribution_field(cfg);
  RngStream rng(seed_of(cfg, o));
  const std::string kind = cfg.value("kind", std::string("graph"));
  MRFG g;
  if (kind == "graph") {
    const json m = cfg.value("model", json::object());
    const std::string mk = m.value("kind", std::string("dense"));
    ModelSpec spec = mk == "dense" ? ModelSpec::dense(m.value("p", 0.5)) : ModelSpec::linear_sparse(m.value("c", 1.0));
    if (mk != "dense" && mk != "linear_sparse") throw UsageError("unknown model kind '" + mk + "'");
    g = sample_graph(spec, cfg.at("n").get<std::size_t>(), d, rng);
  } else if (kind == "fbp") {
    g = sample_fbp(cfg.value("c", 1.0), d, cfg.at("r").get<std::size_t>(), rng);
  } else if (kind == "core") {
    g = sample_core(cfg.at("r").get<std::size_t>(), cfg.value("c", 1.0), d, rng, cfg.value("max_cycle", std::size_t{0}));
  } else {
    throw UsageError("unknown sample kind '" + kind + "'");
  }
  write_output(o, "graph.json", to_json(g));
  return 0;
}

int cmd_eval(const Options& o) {
  const json cfg = load_config(o);
  const Term t = parse_term(term_text(cfg, o));
  const MRFG g = graph_field(cfg, "graph", o);
  std::cout << format_double(eval(t, g)) << '\n';
  return 0;
}

int cmd_controller(const Options& o) {
  const json cfg = load_config(o);
  const Term t = parse_term(term_text(cfg, o));
  const auto d = distribution_field(cfg);
  const RngStream rng(seed_of(cfg, o));
  const json m = cfg.value("model", json::object());
  const std::string mk = m.value("kind", std::string("dense"));
  double value = 0.0;
  if (mk == "dense") {
    DenseConfig dc;
    dc.mc_samples = cfg.value("mc_samples", dc.mc_samples);
    dc.sup_points = cfg.value("sup_points", dc.sup_points);
    dc.nested_samples = cfg.value("nested_samples", dc.nested_samples);
    const auto ctrl = build_controller(t, m.value("p", 0.5), d, dc);
    GraphType type;
    if (cfg.contains("type")) {
      type = GraphType(cfg.at("type").at("classes").get<std::vector<int>>(),
                       cfg.at("type").at("adjacency").get<std::vector<std::vector<bool>>>());
    }
    const auto x = cfg.value("x", std::vector<std::vector<double>>{});
    value = ctrl.value(type, x, rng);
  } else if (mk == "linear_sparse") {
    SparseConfig sc;
    sc.c = m.value("c", 1.0);
    sc.distribution = d;
    sc.mc_fbp_samples = cfg.value("mc_fbp_samples", sc.mc_fbp_samples);
    sc.pool_fbp_samples = cfg.value("pool_size", sc.pool_fbp_samples);
    sc.pool_mesh = cfg.value("pool_mesh", sc.pool_mesh);
    const MRFG g = cfg.contains("graph") ? graph_field(cfg, "graph", o)
                                         : MRFG::from_adjacency({}, {}, d.dimension(), {}, d.support_box());
    value = lambda(t, g, sc, rng);
  } else {
    throw UsageError("unknown model kind '" + mk + "'");
  }
  std::cout << format_double(value) << '\n';
  return 0;
}

int cmd_game(const Options& o) {
  const json cfg = load_config(o);
  const MRFG g = graph_field(cfg, "g", o);
  const MRFG h = graph_field(cfg, "h", o);
  const GameParams p{cfg.value("k", 1), cfg.value("epsilon", 0.1), cfg.value("eta", 0.1)};
  const bool s = similar(g, h, p);
  std::cout << (s ? "similar" : "not similar") << '\n';
  return 0;
}

int cmd_axioms(const Options& o) {
  const json cfg = load_config(o);
  const auto d = distribution_field(cfg);
  const RngStream rng(seed_of(cfg, o));
  MRFG g;
  if (cfg.contains("graph")) {
    g = graph_field(cfg, "graph", o);
  } else {
    RngStream gs = rng.split(0);
    g = sample_graph(ModelSpec::linear_sparse(cfg.value("c", 1.0)), cfg.at("n").get<std::size_t>(), d, gs);
  }
  const GameParams p{cfg.value("k", 1), cfg.value("epsilon", 0.1), cfg.value("eta", 0.1)};
  const auto r = cfg.value("r", std::size_t{1});
  const auto which = cfg.value("axioms", std::vector<std::string>{"homogeneity", "fbp_closeness", "richness"});
  nlohmann::ordered_json reports = nlohmann::ordered_json::array();
  bool all = true;
  for (const auto& a : which) {
    AxiomReport rep;
    if (a == "homogeneity") {
      rep = check_homogeneity(g, p.k, p.eta, r);
    } else if (a == "fbp_closeness") {
      const double mesh = cfg.value("mesh", p.epsilon);
      const auto part = d.dimension() == 0 ? FeaturePartition::trivial(d) : FeaturePartition(d, mesh);
      rep = check_fbp_closeness(g, p, r, part, cfg.value("c", 1.0), d, cfg.value("mc", std::size_t{1000}),
                                rng.split(1));
    } else if (a == "richness") {
      std::vector<MRFG> trees;
      if (cfg.contains("witness_trees")) {
        for (const auto& t : cfg.at("witness_trees")) trees.push_back(graph_from_json(t.dump()));
      } else {
        for (std::size_t s = 0; s < 3; ++s) {
          RngStream ts = rng.split(2).split(s);
          trees.push_back(sample_fbp(cfg.value("c", 1.0), d, r, ts));
        }
      }
      rep = check_richness(g, p, r, trees);
    } else {
      throw UsageError("unknown axiom '" + a + "'");
    }
    all = all && rep.verdict;
    reports.push_back(nlohmann::ordered_json::parse(to_json(rep)));
  }
  write_output(o, "axioms.json", reports.dump(2));
  return all ? 0 : 1;
}

int cmd_experiment(const Options& o) {
  json cfg = load_config(o);
  if (!o.term.empty()) cfg["term"] = o.term;
  if (o.seed) cfg["seed"] = *o.seed;
  ExperimentConfig ec;
  try {
    ec = ExperimentConfig::from_json(cfg);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
  const SummaryStats stats = run_experiment(ec);
  std::ostringstream csv;
  write_csv(csv, ec, stats);
  if (o.out.empty()) {
    std::cout << csv.str();
    std::cerr << stats.to_json().dump(2) << '\n';
  } else {
    write_output(o, "experiment.csv", csv.str());
    write_output(o, "summary.json", stats.to_json().dump(2));
  }
  return stats.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Averaging logic on random featured graphs"};
  app.require_subcommand(1);
  Options o;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "JSON configuration file");
    sub->add_option("--seed", o.seed, "Random seed (overrides the config)");
    sub->add_option("--out", o.out, "Output directory");
    sub->add_option("--term", o.term, "Term in the concrete syntax");
  };
  std::map<std::string, int (*)(const Options&)> commands{
      {"sample", cmd_sample}, {"eval", cmd_eval},     {"controller", cmd_controller},
      {"game", cmd_game},     {"axioms", cmd_axioms}, {"experiment", cmd_experiment}};
  for (const auto& [name, fn] : commands) add_common(app.add_subcommand(name));
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  const auto* sub = app.get_subcommands().front();
  try {
    return commands.at(sub->get_name())(o);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const TermError& e) {
    std::cerr << "term error at offset " << e.position() << ": " << e.what() << '\n';
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
