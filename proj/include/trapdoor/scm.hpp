#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "trapdoor/dataset.hpp"
#include "trapdoor/model_types.hpp"

namespace trapdoor {

enum class Family {
  Normal,           // location + N(0, params[0])
  BernoulliLinear,  // P(1) = location, identity link; out-of-range is an error
  Threshold,        // levels[#{cut in params : location > cut}]
  BetaLogit,        // Beta(mu*phi, (1-mu)*phi), mu = logistic(location), phi = exp(precision)
  SequentialLogit,  // pass level k with probability logistic(location - params[k])
  GammaLog,         // Gamma(shape = params[0], rate = shape / exp(location))
};

const char* to_string(Family f) noexcept;

struct Mechanism {
  Vertex vertex;
  Family family = Family::Normal;
  LinearPredictor location;
  LinearPredictor precision;
  std::vector<double> params;
  ColumnType type;

  std::vector<Vertex> parents() const;
};

/// A structural causal model with its mechanisms in topological order.
/// Unobserved confounders are ordinary mechanisms left out of `observed`.
struct ScmSpec {
  std::string name;
  std::vector<Mechanism> mechanisms;
  std::vector<Vertex> observed;

  const Mechanism& mechanism(const Vertex& v) const;
  bool has(const Vertex& v) const;
};

/// Throws an input error when the ordering, parent references or parameter
/// arity are inconsistent.
void validate(const ScmSpec& spec);

std::string to_json(const ScmSpec& spec);
ScmSpec scm_from_json(std::string_view text);

/// Reading of the printed N(36 + 3 u3, 25) mechanism for S.
enum class SpreadReading { Variance, StandardDeviation };

/// Built-ins: "binary-eq9", "gauss-eq10", "gauss-eq10-smallsx", "nongauss-fsd".
ScmSpec builtin_scm(std::string_view key);
std::vector<std::string> builtin_scm_keys();
ScmSpec nongauss_fsd(SpreadReading s_reading);

/// do(vertex = value).
struct Intervention {
  Vertex vertex;
  double value = 0.0;
};

/// n i.i.d. draws of the observed variables. Rows are generated one at a
/// time in mechanism order, so a prefix of a larger draw with the same seed
/// is identical.
Dataset simulate(const ScmSpec& spec, std::size_t n, std::uint64_t seed);

struct DistributionSummary {
  std::size_t n = 0;
  double mean = 0, median = 0, variance = 0;
  double mcse_mean = 0;      // sd / sqrt(n)
  double mcse_variance = 0;  // sqrt((m4 - s^4) / n)
  std::vector<std::pair<double, double>> quantiles;  // (probability, value)
};

DistributionSummary summarize_draws(std::vector<double> values);

/// Ground truth by simulating the mutilated model with every confounder
/// generated as usual.
DistributionSummary oracle_effect(const ScmSpec& spec, const Intervention& x, std::size_t n_mc,
                                  std::uint64_t seed, const Vertex& outcome = "Y");

/// Exact joint distribution of an all-Bernoulli model by enumeration.
struct BinaryJoint {
  std::vector<Vertex> names;
  std::vector<std::pair<std::vector<int>, Rational>> atoms;

  std::size_t index_of(const Vertex& v) const;
};

BinaryJoint binary_joint(const ScmSpec& spec, const std::vector<Intervention>& interventions = {});
/// P(outcome = 1 | do(x)) in exact arithmetic.
Rational exact_binary_effect(const ScmSpec& spec, const Intervention& x, const Vertex& outcome = "Y");

/// Mean vector and covariance implied by an all-Normal linear model.
struct GaussianJoint {
  std::vector<Vertex> names;
  Eigen::VectorXd mean;
  Eigen::MatrixXd cov;

  std::size_t index_of(const Vertex& v) const;
  /// Regression of `target` on `given`: coefficients (intercept first) and
  /// residual variance.
  std::pair<Eigen::VectorXd, double> regression(const Vertex& target, const std::vector<Vertex>& given) const;
  double conditional_mean(const Vertex& target, const std::vector<Vertex>& given,
                          const std::vector<double>& values) const;
};

GaussianJoint linear_gaussian_joint(const ScmSpec& spec, const std::vector<Intervention>& interventions = {});

/// Observational parameters (W; X | Z, W; Y | X, Z, W) implied by the model.
GaussianObsModel gaussian_true_params(const ScmSpec& spec);
/// P(Z) and P(Z | X) implied by the model, as trapdoor aux fits.
AuxSet gaussian_true_aux(const ScmSpec& spec);

}  // namespace trapdoor
