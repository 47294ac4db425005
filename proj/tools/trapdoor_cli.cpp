// Command-line front end over the C interface.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "trapdoor/trapdoor.h"

namespace {

struct Failure {
  td_status status;
};

void check(td_status s) {
  if (s != TD_OK) throw Failure{s};
}

int exit_code(td_status s) {
  switch (s) {
    case TD_OK: return 0;
    case TD_ERR_DEGENERACY:
    case TD_ERR_UNDEFINED_CELL:
    case TD_ERR_FIT: return 3;
    case TD_ERR_INTERNAL: return 1;
    default: return 2;
  }
}

struct Owned {
  char* p = nullptr;
  ~Owned() { td_string_free(p); }
  std::string str() const { return p ? p : ""; }
};

struct GraphDel {
  void operator()(td_graph* g) const { td_graph_free(g); }
};
struct ScmDel {
  void operator()(td_scm* m) const { td_scm_free(m); }
};
struct DataDel {
  void operator()(td_dataset* d) const { td_dataset_free(d); }
};
using Scm = std::unique_ptr<td_scm, ScmDel>;
using Data = std::unique_ptr<td_dataset, DataDel>;
using Graph = std::unique_ptr<td_graph, GraphDel>;

std::string read_file(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) {
    std::fprintf(stderr, "error: cannot read '%s'\n", path.c_str());
    throw Failure{TD_ERR_IO};
  }
  std::ostringstream os;
  os << f.rdbuf();
  return os.str();
}

void write_output(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream f(path, std::ios::binary);
  f << text;
  if (!f) {
    std::fprintf(stderr, "error: cannot write '%s'\n", path.c_str());
    throw Failure{TD_ERR_IO};
  }
}

Scm load_scm(const std::string& key_or_path) {
  td_scm* m = nullptr;
  if (key_or_path.size() > 5 && key_or_path.ends_with(".json")) {
    check(td_scm_from_json(read_file(key_or_path).c_str(), &m));
  } else {
    check(td_scm_builtin(key_or_path.c_str(), &m));
  }
  return Scm(m);
}

/// CSV text as {"column": [values...]}.
std::string csv_to_json(const std::string& csv) {
  std::istringstream in(csv);
  std::string line;
  std::getline(in, line);
  std::vector<std::string> names;
  std::stringstream hs(line);
  for (std::string cell; std::getline(hs, cell, ',');) names.push_back(cell);
  nlohmann::ordered_json j;
  for (const auto& n : names) j[n] = nlohmann::json::array();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream rs(line);
    std::size_t k = 0;
    for (std::string cell; std::getline(rs, cell, ',') && k < names.size(); ++k) j[names[k]].push_back(std::stod(cell));
  }
  return j.dump(2) + "\n";
}

/// Flat JSON object as a two-line CSV; nested values are dumped as JSON text.
std::string object_to_csv(const std::string& json) {
  const auto j = nlohmann::ordered_json::parse(json);
  std::string head, row;
  for (const auto& [k, v] : j.items()) {
    head += (head.empty() ? "" : ",") + k;
    std::string cell = v.is_string() ? v.get<std::string>() : v.dump();
    if (cell.find_first_of(",\"") != std::string::npos) {
      std::string q = "\"";
      for (char c : cell) q += c == '"' ? std::string("\"\"") : std::string(1, c);
      cell = q + "\"";
    }
    row += (row.empty() ? "" : ",") + cell;
  }
  return head + "\n" + row + "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Causal effect estimation with trapdoor variables"};
  app.require_subcommand(1);
  app.fallthrough();
  std::string format = "csv";
  app.add_option("--format", format, "Output format")->check(CLI::IsMember({"csv", "json"}));

  // simulate
  auto* sim = app.add_subcommand("simulate", "Draw a dataset from a structural causal model");
  std::string sim_scm, sim_out;
  std::size_t sim_n = 0;
  std::uint64_t sim_seed = 1;
  sim->add_option("--scm", sim_scm, "Built-in model key or a model JSON file")->required();
  sim->add_option("--n", sim_n, "Sample size")->required();
  sim->add_option("--seed", sim_seed, "Random seed");
  sim->add_option("--out", sim_out, "Output file (stdout when omitted)");

  // estimate
  auto* est = app.add_subcommand("estimate", "Estimate E(Y | do(X = x)) from a dataset");
  std::string est_data, est_graph, est_functional, est_strategy = "cond-mean:X", est_method = "gaussian-analytic";
  double est_x = 0;
  td_estimate_options eo;
  td_estimate_options_default(&eo);
  est->add_option("--data", est_data, "CSV file")->required();
  est->add_option("--graph", est_graph, "Graph key (fig2a, fig2c, fig3a, fsd)");
  est->add_option("--functional", est_functional, "Catalog key, overrides --graph");
  est->add_option("--x", est_x, "Intervention value")->required();
  est->add_option("--strategy", est_strategy, "Trapdoor strategy");
  est->add_option("--method", est_method, "nonparametric | gaussian-analytic | monte-carlo | bayes");
  est->add_option("--N", eo.N, "Outer Monte Carlo draws");
  est->add_option("--M", eo.M, "Inner Monte Carlo draws");
  est->add_option("--draws", eo.draws, "Posterior draws (0: maximum likelihood plug-in)");
  est->add_option("--burn-in", eo.burn_in, "Sampler warm-up iterations");
  est->add_option("--pseudocount", eo.pseudocount, "Added to every frequency cell");
  est->add_option("--seed", eo.seed, "Random seed");

  // reproduce
  auto* rep = app.add_subcommand("reproduce", "Run a named reproduction recipe");
  std::string recipe, out_dir;
  std::size_t reps = 0, workers = 0, draws = 0;
  std::uint64_t seed = 0;
  rep->add_option("recipe", recipe, "repro:fig-bernoulli | repro:fig-gaussian | repro:sec4.3 | repro:table1")
      ->required();
  rep->add_option("--reps", reps, "Replications");
  rep->add_option("--seed", seed, "Base seed");
  rep->add_option("--workers", workers, "Worker threads");
  rep->add_option("--draws", draws, "Posterior draws");
  rep->add_option("--out-dir", out_dir, "Directory for CSV and JSON outputs");

  // run
  auto* run = app.add_subcommand("run", "Run an experiment from a JSON config");
  std::string config_path, run_out_dir;
  run->add_option("--config", config_path, "Experiment config JSON")->required();
  run->add_option("--out-dir", run_out_dir, "Directory for CSV and JSON outputs");

  // oracle
  auto* ora = app.add_subcommand("oracle", "Simulate E(Y | do(X = x)) from a model");
  std::string ora_scm;
  double ora_x = 0;
  std::size_t ora_draws = 1'000'000;
  std::uint64_t ora_seed = 1;
  ora->add_option("--scm", ora_scm, "Built-in model key or a model JSON file")->required();
  ora->add_option("--x", ora_x, "Intervention value")->required();
  ora->add_option("--draws", ora_draws, "Monte Carlo draws");
  ora->add_option("--seed", ora_seed, "Random seed");

  // list and graph
  auto* lst = app.add_subcommand("list", "List built-in graphs, models, functionals or recipes");
  std::string what;
  lst->add_option("what", what, "graphs | scms | functionals | recipes")->required();
  auto* gr = app.add_subcommand("graph", "Print a built-in graph as JSON");
  std::string graph_key, keep;
  gr->add_option("key", graph_key, "Graph key")->required();
  gr->add_option("--project", keep, "Latent projection onto these comma-separated vertices");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    const bool json = format == "json";
    if (*sim) {
      const auto m = load_scm(sim_scm);
      td_dataset* d = nullptr;
      check(td_simulate(m.get(), sim_n, sim_seed, &d));
      const Data data(d);
      Owned csv;
      check(td_dataset_to_csv(data.get(), &csv.p));
      write_output(sim_out, json ? csv_to_json(csv.str()) : csv.str());
    } else if (*est) {
      td_dataset* d = nullptr;
      check(td_dataset_from_csv(read_file(est_data).c_str(), &d));
      const Data data(d);
      std::string functional = est_functional;
      if (functional.empty()) {
        if (est_graph.empty()) {
          std::fprintf(stderr, "error: give --graph or --functional\n");
          return 2;
        }
        Owned key;
        check(td_functional_for_graph(est_graph.c_str(), data.get(), &key.p));
        functional = key.str();
      }
      eo.estimator = est_method.c_str();
      Owned out;
      check(td_estimate(data.get(), functional.c_str(), est_x, est_strategy.c_str(), &eo, &out.p));
      std::cout << (json ? out.str() + "\n" : object_to_csv(out.str()));
    } else if (*rep) {
      if (recipe == "repro:sec4.3") {
        Owned csv;
        check(td_mc_vs_analytic(100, draws ? draws : 5000, 500, 1, seed ? seed : 43, &csv.p));
        if (!out_dir.empty()) write_output(out_dir + "/sec4.3-summary.csv", csv.str());
        std::cout << csv.str();
      } else {
        Owned cfg;
        check(td_recipe_config(recipe.c_str(), &cfg.p));
        auto j = nlohmann::ordered_json::parse(cfg.str());
        if (reps) j["reps"] = reps;
        if (seed) j["base_seed"] = seed;
        if (workers) j["workers"] = workers;
        if (draws) j["draws"] = draws;
        Owned summary;
        check(td_run_experiment(j.dump().c_str(), out_dir.empty() ? nullptr : out_dir.c_str(), format.c_str(),
                                &summary.p));
        std::cout << summary.str();
      }
    } else if (*run) {
      Owned summary;
      check(td_run_experiment(read_file(config_path).c_str(), run_out_dir.empty() ? nullptr : run_out_dir.c_str(),
                              format.c_str(), &summary.p));
      std::cout << summary.str();
    } else if (*ora) {
      const auto m = load_scm(ora_scm);
      double mean = 0, se = 0;
      check(td_oracle_effect(m.get(), "X", ora_x, "Y", ora_draws, ora_seed, &mean, &se));
      nlohmann::ordered_json j{{"x", ora_x}, {"draws", ora_draws}, {"mean", mean}, {"mcse", se}};
      std::cout << (json ? j.dump(2) + "\n" : object_to_csv(j.dump()));
    } else if (*lst) {
      Owned names;
      check(td_list(what.c_str(), &names.p));
      if (json) {
        std::cout << names.str() << "\n";
      } else {
        for (const auto& n : nlohmann::json::parse(names.str())) std::cout << n.get<std::string>() << "\n";
      }
    } else if (*gr) {
      td_graph* g = nullptr;
      check(td_graph_builtin(graph_key.c_str(), &g));
      Graph graph(g);
      if (!keep.empty()) {
        td_graph* p = nullptr;
        check(td_graph_latent_projection(graph.get(), keep.c_str(), &p));
        graph.reset(p);
      }
      Owned text;
      check(td_graph_to_json(graph.get(), &text.p));
      std::cout << text.str() << "\n";
    }
  } catch (const Failure& f) {
    if (*td_last_error()) std::fprintf(stderr, "error (%s): %s\n", td_status_name(f.status), td_last_error());
    return exit_code(f.status);
  }
  return 0;
}
