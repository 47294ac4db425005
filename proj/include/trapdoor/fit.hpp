#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "trapdoor/dataset.hpp"
#include "trapdoor/model_types.hpp"

namespace trapdoor {

/// Empirical P(target | given) from discrete columns. `pseudocount` is added
/// to every (cell, level) pair of cells seen in the data; 0 keeps the raw
/// frequencies and leaves empty cells undefined.
FreqTable fit_freq(const Dataset& data, const Vertex& target, const std::vector<Vertex>& given,
                   double pseudocount = 0.0);

/// P(W), P(X | Z, W), P(Y | X, Z, W), P(Z) and P(Z | X) from binary data.
BinaryTables fit_binary_tables(const Dataset& data, double pseudocount = 0.0);

/// Ordinary least squares with the ML residual variance rss / n.
struct LinearFit {
  Eigen::VectorXd coef;
  double rss = 0;
  std::size_t n = 0;
  Eigen::MatrixXd xtx_inv;
};

/// `design` excludes the intercept column, which is always prepended.
LinearFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const std::string& what);

GaussianObsModel fit_gaussian(const Dataset& data);

/// Conditioning sets fitted for the trapdoor by default.
std::vector<VertexSet> default_gaussian_aux_sets();
std::vector<VertexSet> default_glm_aux_sets();

/// Linear regressions of Z on each requested conditioning set.
AuxSet fit_gaussian_aux(const Dataset& data, const std::vector<VertexSet>& sets = default_gaussian_aux_sets());

/// ML fit of the observational model with the trapdoor coefficient of the
/// closed-form effect pinned to zero, i.e.
///   b_yz = b_xz b_yw b_xw s_w^2 / (b_xw^2 s_w^2 + s_x^2).
GaussianObsModel fit_gaussian_constrained(const Dataset& data);

/// Residual of the constraint above; zero for constrained fits.
double constraint_residual(const GaussianObsModel& m);

/// Draws x parameters, with the parameter names of `params_of`.
struct PosteriorDraws {
  std::vector<std::string> names;
  Eigen::MatrixXd values;
  std::map<std::string, double> acceptance;  // per Metropolis block

  std::size_t draws() const noexcept { return static_cast<std::size_t>(values.rows()); }
  std::size_t index_of(const std::string& name) const;
  double at(std::size_t draw, const std::string& name) const;
};

/// Parameters of a model in a fixed order, exposed by reference so the same
/// walk both reads and writes them.
using ParamVisitor = std::function<void(const std::string&, double&)>;
void visit_params(GaussianObsModel& m, const ParamVisitor& f);
void visit_params(AuxSet& aux, const ParamVisitor& f);
void visit_params(GlmObsModel& m, const ParamVisitor& f);

struct GaussianPosterior {
  PosteriorDraws draws;
  AuxSet aux_layout;
};

/// Exact draws under flat priors: for each regression block, sigma^2 from
/// its scaled inverse chi-square and coefficients from the conditional normal.
/// Includes the Z regressions for `aux_sets`.
GaussianPosterior draw_gaussian_posterior(const Dataset& data, std::size_t n_draws, std::uint64_t seed,
                                          const std::vector<VertexSet>& aux_sets = default_gaussian_aux_sets());

/// Metropolis draws of the constrained model; Z regressions are exact draws.
GaussianPosterior draw_gaussian_constrained_posterior(
    const Dataset& data, std::size_t n_draws, std::size_t burn_in, std::uint64_t seed,
    const std::vector<VertexSet>& aux_sets = default_gaussian_aux_sets());

GaussianObsModel gaussian_model_at(const GaussianPosterior& post, std::size_t draw);
AuxSet gaussian_aux_at(const GaussianPosterior& post, std::size_t draw);

/// Beta regression of Z (logit mean, constant log precision). Ordinal
/// covariates enter as level indicators, everything else linearly.
BetaAux fit_beta_aux(const Dataset& data, const VertexSet& given);

/// ML fit of every component of the education/income functional, plus Beta
/// trapdoor regressions for `aux_sets`.
GlmObsModel fit_glm(const Dataset& data, const std::vector<VertexSet>& aux_sets = default_glm_aux_sets());

struct GlmPosterior {
  PosteriorDraws draws;
  GlmObsModel layout;
};

struct SamplerOptions {
  std::size_t draws = 1000;
  std::size_t burn_in = 1000;
  std::size_t thin = 1;
  std::uint64_t seed = 1;
};

/// W, G and S | W from their conjugate flat-prior posteriors; the Gamma,
/// sequential-logit and Beta blocks by adaptive random-walk Metropolis started
/// at the ML fit with a proposal shaped by the inverse Hessian.
GlmPosterior draw_glm_posterior(const Dataset& data, const SamplerOptions& opts,
                                const std::vector<VertexSet>& aux_sets = default_glm_aux_sets());

GlmObsModel glm_model_at(const GlmPosterior& post, std::size_t draw);

std::string to_json(const PosteriorDraws& d);
std::string to_json(GaussianObsModel m);
std::string to_json(GlmObsModel m);

}  // namespace trapdoor
