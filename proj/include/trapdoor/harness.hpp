#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "trapdoor/dataset.hpp"
#include "trapdoor/effects.hpp"
#include "trapdoor/montecarlo.hpp"

namespace trapdoor {

enum class EstimatorKind { Nonparametric, GaussianAnalytic, MonteCarlo, Bayes };

const char* to_string(EstimatorKind k) noexcept;
EstimatorKind parse_estimator(std::string_view text);

/// Settings of one point estimate. `draws == 0` evaluates at the ML fit;
/// otherwise the estimate is the posterior mean over that many draws.
struct EstimateOptions {
  EstimatorKind estimator = EstimatorKind::Nonparametric;
  std::size_t N = 250, M = 250;
  std::size_t draws = 0;
  std::size_t burn_in = 1000;
  double pseudocount = 0;
  std::uint64_t seed = 1;
};

struct EffectEstimate {
  double value = 0;
  double mcse = 0;            // Monte Carlo error, zero for closed forms
  double ess = 0;             // smallest over posterior draws; 0 for closed forms
  double posterior_sd = 0;    // zero for plug-in estimates
  std::optional<DistributionSummary> predictive;
  std::string warning;
};

/// Throws a configuration error when `s` cannot be evaluated for `entry`
/// with the given estimator.
void check_compatible(const FunctionalCatalogEntry& entry, EstimatorKind estimator, const TrapdoorStrategy& s);

/// Estimates on one dataset. Fits and posterior draws are made on first use
/// and shared by every later (x, strategy) request.
class EffectEstimator {
 public:
  EffectEstimator(Dataset data, const FunctionalCatalogEntry& entry, EstimateOptions opts,
                  const std::vector<TrapdoorStrategy>& planned = {});
  ~EffectEstimator();
  EffectEstimator(EffectEstimator&&) noexcept;
  EffectEstimator& operator=(EffectEstimator&&) noexcept;

  EffectEstimate operator()(double x, const TrapdoorStrategy& s, std::uint64_t seed);

 private:
  struct Cache;
  Dataset data_;
  const FunctionalCatalogEntry* entry_;
  EstimateOptions opts_;
  std::vector<VertexSet> aux_sets_;
  std::unique_ptr<Cache> cache_;
};

/// One estimate of E(Y | do(X = x)) on `data` for a catalog entry.
EffectEstimate estimate_effect(const Dataset& data, const FunctionalCatalogEntry& entry, double x,
                               const TrapdoorStrategy& s, const EstimateOptions& opts);

/// Catalog entry used for data generated by a built-in SCM.
const FunctionalCatalogEntry& entry_for_scm(std::string_view scm_key);
/// Catalog entry for a graph key, choosing the binary or Gaussian form of
/// fig2c from the column types of `data`.
const FunctionalCatalogEntry& entry_for_graph(std::string_view graph_key, const Dataset& data);

struct ExperimentConfig {
  std::string name = "experiment";
  std::string scm;
  std::vector<std::size_t> sample_sizes;
  std::size_t reps = 1;
  std::vector<double> x_grid;
  std::vector<std::string> strategies;
  EstimateOptions estimate;
  std::uint64_t base_seed = 1;
  std::size_t workers = 1;
  std::size_t oracle_draws = 1'000'000;
};

/// Throws an input error when the configuration cannot be run.
void validate(const ExperimentConfig& cfg);
std::string to_json(const ExperimentConfig& cfg);
ExperimentConfig experiment_from_json(std::string_view text);

struct Truth {
  double value = 0;
  double mcse = 0;  // nonzero only for simulation oracles
};

/// Ground truth of E(Y | do(X = x)): exact for Bernoulli and linear-Gaussian
/// models, simulated otherwise.
Truth truth_for(const ScmSpec& spec, double x, std::size_t oracle_draws, std::uint64_t seed);

struct ReplicationRecord {
  std::size_t n = 0;
  std::size_t rep = 0;
  std::uint64_t seed = 0;
  double x = 0;
  std::string strategy;
  std::string status;  // "ok" or the error kind
  double estimate = 0;
  double mcse = 0;
  std::string message;
};

struct EstimateSummary {
  std::size_t n = 0;
  double x = 0;
  std::string strategy;
  double truth = 0, truth_mcse = 0;
  std::size_t used = 0, discarded = 0;
  double discard_fraction = 0;
  /// Fraction of replications in which any estimate at this n failed.
  double replication_discard_fraction = 0;
  double mean = 0, se = 0;
  double bias = 0, bias_mcse = 0;
  double rmse = 0, rmse_mcse = 0;
  double average_mcse = 0;
};

struct ExperimentResult {
  ExperimentConfig config;
  std::vector<ReplicationRecord> records;
  std::vector<EstimateSummary> summary;

  std::string records_csv() const;
  std::string summary_csv() const;
  std::string summary_json() const;
  const EstimateSummary& at(std::size_t n, double x, const std::string& strategy) const;
};

/// Replication r uses seed base_seed + r; its dataset of size n is drawn with
/// derive_seed(base_seed + r, n). Failures are recorded, never thrown.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Summary of one cell from its estimates; SEs and MCSEs are NaN below two
/// replications.
EstimateSummary summarize(const std::vector<double>& estimates, const Truth& truth);

/// Writes config JSON, per-replication CSV and summary CSV into `dir`.
void write_outputs(const ExperimentResult& r, const std::string& dir);

/// Named recipes: "repro:fig-bernoulli", "repro:fig-gaussian", "repro:table1".
/// "repro:sec4.3" is a single-dataset study; see run_mc_vs_analytic.
ExperimentConfig recipe(std::string_view name);
std::vector<std::string> recipe_names();

struct McVsAnalyticOptions {
  std::size_t n = 100;
  std::size_t draws = 5000;
  std::size_t N = 500, M = 1;
  double x = 0;
  std::uint64_t seed = 43;
};

struct McVsAnalyticRow {
  std::string method;    // "analytic" or "monte-carlo"
  std::string strategy;
  BayesEffect effect;
};

/// One dataset from the small-noise Gaussian model; posterior of E(Y | do(x))
/// by the closed form and by weighted Monte Carlo under the marginal and
/// x-conditional trapdoor means.
std::vector<McVsAnalyticRow> run_mc_vs_analytic(const McVsAnalyticOptions& opts);
std::string mc_vs_analytic_csv(const std::vector<McVsAnalyticRow>& rows);

}  // namespace trapdoor
