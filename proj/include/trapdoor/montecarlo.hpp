#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "trapdoor/dataset.hpp"
#include "trapdoor/effects.hpp"
#include "trapdoor/fit.hpp"
#include "trapdoor/model_types.hpp"
#include "trapdoor/scm.hpp"

namespace trapdoor {

struct McOptions {
  std::size_t N = 250;  // outer draws of (b, z)
  std::size_t M = 250;  // inner draws of w per outer draw
  std::uint64_t seed = 1;
};

/// N x M weighted draws from the plug-in interventional distribution. Entry
/// (i, j) sits at i * M + j. Weights are normalized within each group of outer
/// draws sharing the same (z, b), each group gets mass |group| / N, and the
/// grand total is one.
struct WeightedInterventionalSample {
  std::size_t N = 0, M = 0;
  std::vector<double> y;
  std::vector<double> weights;
  std::vector<double> z;                 // per outer draw
  std::vector<std::vector<double>> b;    // per outer draw, in `b_names` order
  std::vector<std::string> b_names;
  double raw_log_sum = 0;                // log of the sum of unnormalized weights
  std::string warning;                   // set when the ESS is below 1% of N M

  double ess() const;
  bool low_ess() const { return ess() < 0.01 * static_cast<double>(N * M); }
};

/// Linear-Gaussian model, empty B. Draw strategies sample z per outer draw.
WeightedInterventionalSample algorithm1(const GaussianObsModel& m, const AuxSet& aux, double x,
                                        const TrapdoorStrategy& s, const McOptions& opts);

/// Binary tables, empty B. Mean strategies are not available.
WeightedInterventionalSample algorithm1(const BinaryTables& t, int x, const TrapdoorStrategy& s,
                                        const McOptions& opts);

/// Education/income model with B = (S, G).
WeightedInterventionalSample algorithm1(const GlmObsModel& m, int x, const TrapdoorStrategy& s,
                                        const McOptions& opts);

double weighted_mean(const WeightedInterventionalSample& s);
/// sqrt(sum over (i, j) of [w_ij (y_ij - weighted mean)]^2).
double mcse(const WeightedInterventionalSample& s);
/// k draws of y with probabilities equal to the normalized weights.
std::vector<double> resample(const WeightedInterventionalSample& s, std::size_t k, std::uint64_t seed);

enum class EffectMethod { MonteCarlo, Analytic };

struct BayesOptions {
  McOptions mc;
  std::size_t draws = 1000;
  std::size_t burn_in = 1000;
  EffectMethod method = EffectMethod::MonteCarlo;
};

struct BayesEffect {
  DistributionSummary mean;        // posterior of E(Y | do(x))
  DistributionSummary predictive;  // one Y^{do(x)} per posterior draw
  std::vector<double> draw_means;
  double average_mcse = 0;         // zero for the analytic method
  double min_ess = 0;
  std::size_t low_ess_draws = 0;
};

/// Runs the effect at every posterior draw. Analytic evaluation is only
/// available for the linear-Gaussian entry; its predictive draw comes from
/// N(mean, closed-form variance).
BayesEffect bayes_effect(const GaussianPosterior& post, double x, const TrapdoorStrategy& s,
                         const BayesOptions& opts);
BayesEffect bayes_effect(const GlmPosterior& post, int x, const TrapdoorStrategy& s, const BayesOptions& opts);

/// Fits the posterior for `entry` from `data` and evaluates the effect.
BayesEffect bayes_effect(const Dataset& data, const FunctionalCatalogEntry& entry, const TrapdoorStrategy& s,
                         double x, const BayesOptions& opts);

std::string to_json(const WeightedInterventionalSample& s, double x, const TrapdoorStrategy& strategy,
                    std::uint64_t seed);

}  // namespace trapdoor
