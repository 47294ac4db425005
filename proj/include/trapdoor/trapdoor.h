/* C interface to the trapdoor estimation library.
 *
 * Objects are opaque handles released with their *_free function. Every
 * fallible call returns a td_status; on failure td_last_error() describes the
 * problem for the calling thread. Strings returned through char** are owned by
 * the caller and released with td_string_free. Vertex lists are comma
 * separated, e.g. "X,S,G". */
#ifndef TRAPDOOR_H
#define TRAPDOOR_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define TD_API __declspec(dllexport)
#else
#define TD_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum td_status {
  TD_OK = 0,
  TD_ERR_INTERNAL = 1,
  TD_ERR_INPUT = 2,
  TD_ERR_DEGENERACY = 3,
  TD_ERR_GENERATION = 4,
  TD_ERR_FIT = 5,
  TD_ERR_UNDEFINED_CELL = 6,
  TD_ERR_CONFIG = 7,
  TD_ERR_IO = 8
} td_status;

typedef struct td_graph td_graph;
typedef struct td_scm td_scm;
typedef struct td_dataset td_dataset;

TD_API const char* td_version(void);
TD_API const char* td_last_error(void);
TD_API const char* td_status_name(td_status s);
TD_API void td_string_free(char* s);

/* JSON array of names. `what` is one of "graphs", "scms", "functionals",
 * "recipes". */
TD_API td_status td_list(const char* what, char** json_out);

/* Graphs */
TD_API td_status td_graph_builtin(const char* key, td_graph** out);
TD_API td_status td_graph_from_json(const char* json, td_graph** out);
TD_API td_status td_graph_to_json(const td_graph* g, char** json_out);
TD_API td_status td_graph_d_separated(const td_graph* g, const char* a, const char* b, const char* given, int* out);
TD_API td_status td_graph_backdoor_admissible(const td_graph* g, const char* x, const char* y, const char* z,
                                              int* out);
TD_API td_status td_graph_latent_projection(const td_graph* g, const char* keep, td_graph** out);
TD_API int td_graph_equal(const td_graph* a, const td_graph* b);
TD_API void td_graph_free(td_graph* g);

/* Structural causal models */
TD_API td_status td_scm_builtin(const char* key, td_scm** out);
TD_API td_status td_scm_from_json(const char* json, td_scm** out);
TD_API td_status td_scm_to_json(const td_scm* m, char** json_out);
TD_API void td_scm_free(td_scm* m);

/* Mean and Monte Carlo standard error of `outcome` under do(x_var = x). */
TD_API td_status td_oracle_effect(const td_scm* m, const char* x_var, double x, const char* outcome, size_t draws,
                                  uint64_t seed, double* mean, double* mcse);

/* Datasets */
TD_API td_status td_simulate(const td_scm* m, size_t n, uint64_t seed, td_dataset** out);
TD_API td_status td_dataset_from_csv(const char* text, td_dataset** out);
TD_API td_status td_dataset_to_csv(const td_dataset* d, char** csv_out);
TD_API size_t td_dataset_rows(const td_dataset* d);
TD_API void td_dataset_free(td_dataset* d);

/* Estimation */
typedef struct td_estimate_options {
  const char* estimator; /* nonparametric | gaussian-analytic | monte-carlo | bayes */
  size_t N, M;
  size_t draws; /* 0: evaluate at the maximum likelihood fit */
  size_t burn_in;
  double pseudocount;
  uint64_t seed;
} td_estimate_options;

TD_API void td_estimate_options_default(td_estimate_options* o);

/* Functional key for a graph key and a dataset, e.g. "fig2c" with binary
 * columns gives "fig2c-binary". */
TD_API td_status td_functional_for_graph(const char* graph_key, const td_dataset* d, char** key_out);

/* Estimate of E(Y | do(X = x)) as a JSON object. */
TD_API td_status td_estimate(const td_dataset* d, const char* functional, double x, const char* strategy,
                             const td_estimate_options* o, char** json_out);

/* Experiments. Configs are JSON objects; see td_recipe_config for the keys. */
TD_API td_status td_recipe_config(const char* recipe, char** json_out);
/* Runs the grid; writes config, per-replication and summary files into
 * `out_dir` when it is non-NULL. The summary is returned as JSON or CSV
 * according to `format` ("json" or "csv"). */
TD_API td_status td_run_experiment(const char* config_json, const char* out_dir, const char* format,
                                   char** summary_out);
/* Single-dataset comparison of Monte Carlo and closed-form posteriors on the
 * small-noise Gaussian model; CSV rows per (method, strategy). */
TD_API td_status td_mc_vs_analytic(size_t n, size_t draws, size_t N, size_t M, uint64_t seed, char** csv_out);

#ifdef __cplusplus
}
#endif

#endif
