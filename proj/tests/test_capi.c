/* Exercises the shared library through its C header only. */
#include <stdio.h>
#include <stdlib.h>
#include <string.h>

#include "trapdoor/trapdoor.h"

static int failures = 0;

#define EXPECT(cond)                                                   \
  do {                                                                 \
    if (!(cond)) {                                                     \
      fprintf(stderr, "%s:%d: expectation failed: %s\n", __FILE__,     \
              __LINE__, #cond);                                        \
      ++failures;                                                      \
    }                                                                  \
  } while (0)

static void graphs(void) {
  td_graph *fig2c = NULL, *fig2b = NULL, *proj = NULL, *back = NULL;
  char* json = NULL;
  int sep = -1, adm = -1;

  EXPECT(td_graph_builtin("fig2c", &fig2c) == TD_OK);
  EXPECT(td_graph_builtin("fig2b", &fig2b) == TD_OK);
  EXPECT(td_graph_latent_projection(fig2c, "W, X, Y", &proj) == TD_OK);
  EXPECT(td_graph_equal(proj, fig2b) == 1);
  EXPECT(td_graph_equal(fig2c, fig2b) == 0);

  EXPECT(td_graph_d_separated(fig2c, "W", "X", "Z", &sep) == TD_OK);
  EXPECT(sep == 0); /* W <-> X stays open */
  EXPECT(td_graph_backdoor_admissible(fig2b, "X", "Y", "W", &adm) == TD_OK);
  EXPECT(adm == 0);

  EXPECT(td_graph_to_json(fig2c, &json) == TD_OK);
  EXPECT(json != NULL && strstr(json, "\"bidirected\"") != NULL);
  EXPECT(td_graph_from_json(json, &back) == TD_OK);
  EXPECT(td_graph_equal(back, fig2c) == 1);
  td_string_free(json);

  EXPECT(td_graph_builtin("nope", &proj) == TD_ERR_INPUT);
  EXPECT(strlen(td_last_error()) > 0);
  EXPECT(td_graph_d_separated(fig2c, "X", "X", "", &sep) == TD_ERR_INPUT);
  EXPECT(td_graph_d_separated(NULL, "X", "Y", "", &sep) == TD_ERR_INPUT);

  td_graph_free(back);
  td_graph_free(proj);
  td_graph_free(fig2b);
  td_graph_free(fig2c);
  td_graph_free(NULL);
}

static void estimation(void) {
  td_scm* m = NULL;
  td_dataset *d = NULL, *again = NULL;
  char *csv = NULL, *out = NULL, *key = NULL;
  td_estimate_options o;
  double mean = 0, se = 0;

  EXPECT(td_scm_builtin("gauss-eq10", &m) == TD_OK);
  EXPECT(td_oracle_effect(m, "X", 3.0, "Y", 200000, 1, &mean, &se) == TD_OK);
  EXPECT(mean > 5.0 - 4 * se && mean < 5.0 + 4 * se);

  EXPECT(td_simulate(m, 250, 7, &d) == TD_OK);
  EXPECT(td_dataset_rows(d) == 250);
  EXPECT(td_dataset_to_csv(d, &csv) == TD_OK);
  EXPECT(td_dataset_from_csv(csv, &again) == TD_OK);
  EXPECT(td_dataset_rows(again) == 250);

  EXPECT(td_functional_for_graph("fig2c", d, &key) == TD_OK);
  EXPECT(key != NULL && strcmp(key, "fig2c-gaussian") == 0);

  td_estimate_options_default(&o);
  o.estimator = "gaussian-analytic";
  EXPECT(td_estimate(d, key, 3.0, "cond-mean:X", &o, &out) == TD_OK);
  EXPECT(out != NULL && strstr(out, "\"estimate\"") != NULL);
  td_string_free(out);
  out = NULL;

  o.estimator = "nonparametric";
  EXPECT(td_estimate(d, key, 3.0, "cond-mean:X", &o, &out) == TD_ERR_CONFIG);
  EXPECT(out == NULL);
  EXPECT(td_estimate(d, key, 3.0, "no-such-strategy", &o, &out) == TD_ERR_INPUT);
  EXPECT(td_estimate(d, "fig9", 3.0, "marg-mean", &o, &out) == TD_ERR_INPUT);
  EXPECT(td_estimate(d, key, 3.0, "marg-mean", &o, NULL) == TD_ERR_INPUT);
  EXPECT(td_dataset_from_csv("a,b\n1\n", &again) != TD_OK);

  /* a successful call clears the error text */
  EXPECT(td_dataset_to_csv(d, &out) == TD_OK);
  EXPECT(strlen(td_last_error()) == 0);
  td_string_free(out);

  td_string_free(key);
  td_string_free(csv);
  td_dataset_free(again);
  td_dataset_free(d);
  td_scm_free(m);
}

static void undefined_cell(void) {
  /* no rows with Z = 0 and W = 1 */
  const char* csv = "W,Z,X,Y\n0,0,0,0\n0,0,1,1\n0,1,0,0\n0,1,1,1\n1,1,0,1\n1,1,1,0\n";
  td_dataset* d = NULL;
  char* out = NULL;
  td_estimate_options o;
  EXPECT(td_dataset_from_csv(csv, &d) == TD_OK);
  td_estimate_options_default(&o);
  EXPECT(td_estimate(d, "fig2c-binary", 1, "fixed:0", &o, &out) == TD_ERR_UNDEFINED_CELL);
  EXPECT(strcmp(td_status_name(TD_ERR_UNDEFINED_CELL), "undefined-cell") == 0 ||
         strlen(td_status_name(TD_ERR_UNDEFINED_CELL)) > 0);
  o.pseudocount = 1.0;
  EXPECT(td_estimate(d, "fig2c-binary", 1, "fixed:0", &o, &out) == TD_OK);
  td_string_free(out);
  td_dataset_free(d);
}

static void experiments(void) {
  char *cfg = NULL, *summary = NULL, *names = NULL;
  EXPECT(td_list("recipes", &names) == TD_OK);
  EXPECT(names != NULL && strstr(names, "repro:table1") != NULL);
  td_string_free(names);
  EXPECT(td_list("planets", &names) == TD_ERR_INPUT);

  EXPECT(td_recipe_config("repro:fig-bernoulli", &cfg) == TD_OK);
  EXPECT(td_run_experiment("{\"scm\":\"binary-eq9\",\"sample_sizes\":[80],\"reps\":5,\"x_grid\":[1],"
                           "\"strategies\":[\"fixed:1\"]}",
                           NULL, "csv", &summary) == TD_OK);
  EXPECT(summary != NULL && strncmp(summary, "n,x,strategy", 12) == 0);
  td_string_free(summary);
  EXPECT(td_run_experiment("{\"scm\":\"binary-eq9\"}", NULL, "xml", &summary) == TD_ERR_INPUT);
  EXPECT(td_run_experiment("{not json", NULL, "csv", &summary) == TD_ERR_INPUT);
  td_string_free(cfg);
}

int main(void) {
  EXPECT(strlen(td_version()) > 0);
  EXPECT(strcmp(td_status_name(TD_OK), "ok") == 0);
  graphs();
  estimation();
  undefined_cell();
  experiments();
  if (failures) {
    fprintf(stderr, "%d expectation(s) failed\n", failures);
    return EXIT_FAILURE;
  }
  printf("C interface: all expectations met\n");
  return EXIT_SUCCESS;
}
