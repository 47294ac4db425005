#include "trapdoor/trapdoor.h"

#include <cstring>
#include <string>

#include <json.hpp>

#include "trapdoor/effects.hpp"
#include "trapdoor/error.hpp"
#include "trapdoor/graph.hpp"
#include "trapdoor/harness.hpp"
#include "trapdoor/scm.hpp"

struct td_graph {
  trapdoor::CausalGraph value;
};
struct td_scm {
  trapdoor::ScmSpec value;
};
struct td_dataset {
  trapdoor::Dataset value;
};

namespace {

using trapdoor::ErrorKind;

thread_local std::string last_error;

td_status status_of(ErrorKind k) {
  switch (k) {
    case ErrorKind::Input: return TD_ERR_INPUT;
    case ErrorKind::Degeneracy: return TD_ERR_DEGENERACY;
    case ErrorKind::Generation: return TD_ERR_GENERATION;
    case ErrorKind::Fit: return TD_ERR_FIT;
    case ErrorKind::UndefinedCell: return TD_ERR_UNDEFINED_CELL;
    case ErrorKind::Config: return TD_ERR_CONFIG;
    case ErrorKind::Io: return TD_ERR_IO;
  }
  return TD_ERR_INTERNAL;
}

template <class F>
td_status guard(F&& f) {
  try {
    f();
    last_error.clear();
    return TD_OK;
  } catch (const trapdoor::Error& e) {
    last_error = e.what();
    return status_of(e.kind());
  } catch (const std::exception& e) {
    last_error = e.what();
    return TD_ERR_INTERNAL;
  } catch (...) {
    last_error = "unknown failure";
    return TD_ERR_INTERNAL;
  }
}

template <class T>
const T& need(const T* p, const char* what) {
  if (p == nullptr) trapdoor::fail(ErrorKind::Input, std::string(what) + " is null");
  return *p;
}

std::string text(const char* s, const char* what) {
  if (s == nullptr) trapdoor::fail(ErrorKind::Input, std::string(what) + " is null");
  return s;
}

template <class T>
void check_out(T* out) {
  if (out == nullptr) trapdoor::fail(ErrorKind::Input, "output pointer is null");
}

char* dup(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

trapdoor::VertexSet vertex_list(const char* s) {
  trapdoor::VertexSet out;
  std::string item;
  for (const char* p = s == nullptr ? "" : s;; ++p) {
    if (*p == ',' || *p == '\0') {
      const auto a = item.find_first_not_of(' ');
      if (a != std::string::npos) out.insert(item.substr(a, item.find_last_not_of(' ') - a + 1));
      item.clear();
      if (*p == '\0') break;
    } else {
      item += *p;
    }
  }
  return out;
}

nlohmann::json summary_json(const trapdoor::DistributionSummary& d) {
  nlohmann::json q = nlohmann::json::object();
  for (const auto& [p, v] : d.quantiles) q[trapdoor::format_double(p)] = v;
  return {{"n", d.n}, {"mean", d.mean}, {"median", d.median}, {"variance", d.variance}, {"quantiles", q}};
}

}  // namespace

extern "C" {

const char* td_version(void) { return "1.0.0"; }

const char* td_last_error(void) { return last_error.c_str(); }

const char* td_status_name(td_status s) {
  switch (s) {
    case TD_OK: return "ok";
    case TD_ERR_INTERNAL: return "internal";
    case TD_ERR_INPUT: return trapdoor::to_string(ErrorKind::Input);
    case TD_ERR_DEGENERACY: return trapdoor::to_string(ErrorKind::Degeneracy);
    case TD_ERR_GENERATION: return trapdoor::to_string(ErrorKind::Generation);
    case TD_ERR_FIT: return trapdoor::to_string(ErrorKind::Fit);
    case TD_ERR_UNDEFINED_CELL: return trapdoor::to_string(ErrorKind::UndefinedCell);
    case TD_ERR_CONFIG: return trapdoor::to_string(ErrorKind::Config);
    case TD_ERR_IO: return trapdoor::to_string(ErrorKind::Io);
  }
  return "unknown";
}

void td_string_free(char* s) { delete[] s; }

td_status td_list(const char* what, char** json_out) {
  return guard([&] {
    check_out(json_out);
    const std::string w = text(what, "list name");
    std::vector<std::string> names;
    if (w == "graphs") {
      names = trapdoor::builtin_graph_keys();
    } else if (w == "scms") {
      names = trapdoor::builtin_scm_keys();
    } else if (w == "functionals") {
      for (const auto& e : trapdoor::functional_catalog()) names.push_back(e.key);
    } else if (w == "recipes") {
      names = trapdoor::recipe_names();
    } else {
      trapdoor::fail(ErrorKind::Input, "unknown list '" + w + "'");
    }
    *json_out = dup(nlohmann::json(names).dump());
  });
}

td_status td_graph_builtin(const char* key, td_graph** out) {
  return guard([&] {
    check_out(out);
    *out = new td_graph{trapdoor::builtin_graph(text(key, "graph key"))};
  });
}

td_status td_graph_from_json(const char* json, td_graph** out) {
  return guard([&] {
    check_out(out);
    *out = new td_graph{trapdoor::graph_from_json(text(json, "graph JSON"))};
  });
}

td_status td_graph_to_json(const td_graph* g, char** json_out) {
  return guard([&] {
    check_out(json_out);
    *json_out = dup(trapdoor::to_json(need(g, "graph").value));
  });
}

td_status td_graph_d_separated(const td_graph* g, const char* a, const char* b, const char* given, int* out) {
  return guard([&] {
    check_out(out);
    *out = trapdoor::d_separated(need(g, "graph").value, vertex_list(a), vertex_list(b), vertex_list(given)) ? 1 : 0;
  });
}

td_status td_graph_backdoor_admissible(const td_graph* g, const char* x, const char* y, const char* z, int* out) {
  return guard([&] {
    check_out(out);
    *out = trapdoor::is_backdoor_admissible(need(g, "graph").value, vertex_list(x), vertex_list(y), vertex_list(z))
               ? 1
               : 0;
  });
}

td_status td_graph_latent_projection(const td_graph* g, const char* keep, td_graph** out) {
  return guard([&] {
    check_out(out);
    *out = new td_graph{trapdoor::latent_projection(need(g, "graph").value, vertex_list(keep))};
  });
}

int td_graph_equal(const td_graph* a, const td_graph* b) {
  return a != nullptr && b != nullptr && a->value == b->value ? 1 : 0;
}

void td_graph_free(td_graph* g) { delete g; }

td_status td_scm_builtin(const char* key, td_scm** out) {
  return guard([&] {
    check_out(out);
    *out = new td_scm{trapdoor::builtin_scm(text(key, "model key"))};
  });
}

td_status td_scm_from_json(const char* json, td_scm** out) {
  return guard([&] {
    check_out(out);
    *out = new td_scm{trapdoor::scm_from_json(text(json, "model JSON"))};
  });
}

td_status td_scm_to_json(const td_scm* m, char** json_out) {
  return guard([&] {
    check_out(json_out);
    *json_out = dup(trapdoor::to_json(need(m, "model").value));
  });
}

void td_scm_free(td_scm* m) { delete m; }

td_status td_oracle_effect(const td_scm* m, const char* x_var, double x, const char* outcome, size_t draws,
                           uint64_t seed, double* mean, double* mcse) {
  return guard([&] {
    check_out(mean);
    check_out(mcse);
    const auto d = trapdoor::oracle_effect(need(m, "model").value, {text(x_var, "treatment"), x}, draws, seed,
                                           outcome == nullptr ? "Y" : outcome);
    *mean = d.mean;
    *mcse = d.mcse_mean;
  });
}

td_status td_simulate(const td_scm* m, size_t n, uint64_t seed, td_dataset** out) {
  return guard([&] {
    check_out(out);
    *out = new td_dataset{trapdoor::simulate(need(m, "model").value, n, seed)};
  });
}

td_status td_dataset_from_csv(const char* csv, td_dataset** out) {
  return guard([&] {
    check_out(out);
    *out = new td_dataset{trapdoor::Dataset::from_csv(text(csv, "CSV text"))};
  });
}

td_status td_dataset_to_csv(const td_dataset* d, char** csv_out) {
  return guard([&] {
    check_out(csv_out);
    *csv_out = dup(need(d, "dataset").value.to_csv());
  });
}

size_t td_dataset_rows(const td_dataset* d) { return d == nullptr ? 0 : d->value.rows(); }

void td_dataset_free(td_dataset* d) { delete d; }

void td_estimate_options_default(td_estimate_options* o) {
  if (o == nullptr) return;
  const trapdoor::EstimateOptions def;
  o->estimator = trapdoor::to_string(def.estimator);
  o->N = def.N;
  o->M = def.M;
  o->draws = def.draws;
  o->burn_in = def.burn_in;
  o->pseudocount = def.pseudocount;
  o->seed = def.seed;
}

td_status td_functional_for_graph(const char* graph_key, const td_dataset* d, char** key_out) {
  return guard([&] {
    check_out(key_out);
    *key_out = dup(trapdoor::entry_for_graph(text(graph_key, "graph key"), need(d, "dataset").value).key);
  });
}

td_status td_estimate(const td_dataset* d, const char* functional, double x, const char* strategy,
                      const td_estimate_options* o, char** json_out) {
  return guard([&] {
    check_out(json_out);
    const auto& entry = trapdoor::catalog_entry(text(functional, "functional"));
    const auto st = trapdoor::TrapdoorStrategy::parse(text(strategy, "strategy"));
    td_estimate_options opt;
    td_estimate_options_default(&opt);
    if (o != nullptr) opt = *o;
    trapdoor::EstimateOptions eo;
    eo.estimator = trapdoor::parse_estimator(text(opt.estimator, "estimator"));
    eo.N = opt.N;
    eo.M = opt.M;
    eo.draws = opt.draws;
    eo.burn_in = opt.burn_in;
    eo.pseudocount = opt.pseudocount;
    eo.seed = opt.seed;
    const auto e = trapdoor::estimate_effect(need(d, "dataset").value, entry, x, st, eo);
    nlohmann::ordered_json j{{"functional", entry.key},
                             {"x", x},
                             {"strategy", st.to_string()},
                             {"estimator", trapdoor::to_string(eo.estimator)},
                             {"draws", eo.draws},
                             {"seed", eo.seed},
                             {"estimate", e.value},
                             {"mcse", e.mcse},
                             {"ess", e.ess},
                             {"posterior_sd", e.posterior_sd}};
    if (e.predictive) j["predictive"] = summary_json(*e.predictive);
    if (!e.warning.empty()) j["warning"] = e.warning;
    *json_out = dup(j.dump(2));
  });
}

td_status td_recipe_config(const char* recipe, char** json_out) {
  return guard([&] {
    check_out(json_out);
    *json_out = dup(trapdoor::to_json(trapdoor::recipe(text(recipe, "recipe"))));
  });
}

td_status td_run_experiment(const char* config_json, const char* out_dir, const char* format, char** summary_out) {
  return guard([&] {
    check_out(summary_out);
    const std::string fmt = format == nullptr ? "csv" : format;
    if (fmt != "csv" && fmt != "json") trapdoor::fail(ErrorKind::Input, "format must be csv or json");
    const auto cfg = trapdoor::experiment_from_json(text(config_json, "config"));
    const auto r = trapdoor::run_experiment(cfg);
    if (out_dir != nullptr) trapdoor::write_outputs(r, out_dir);
    *summary_out = dup(fmt == "csv" ? r.summary_csv() : r.summary_json());
  });
}

td_status td_mc_vs_analytic(size_t n, size_t draws, size_t N, size_t M, uint64_t seed, char** csv_out) {
  return guard([&] {
    check_out(csv_out);
    trapdoor::McVsAnalyticOptions o;
    o.n = n;
    o.draws = draws;
    o.N = N;
    o.M = M;
    o.seed = seed;
    if (draws < 1 || N < 1 || M < 1) trapdoor::fail(ErrorKind::Input, "draws, N and M must be positive");
    *csv_out = dup(trapdoor::mc_vs_analytic_csv(trapdoor::run_mc_vs_analytic(o)));
  });
}

}  // extern "C"
