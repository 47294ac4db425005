#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include <Eigen/Dense>

namespace trapdoor::detail {

using Objective = std::function<double(const Eigen::VectorXd&)>;

struct OptimResult {
  Eigen::VectorXd x;
  double value = 0;
  bool converged = false;
  int iterations = 0;
  std::string method;
};

/// Minimizes `f` with BFGS on a central-difference gradient, falling back to
/// Nelder-Mead when BFGS stalls. Throws a fit error naming `what` when
/// neither converges.
OptimResult minimize(const Objective& f, const Eigen::VectorXd& start, const std::string& what);

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x);

/// Lower Cholesky factor of the inverse of `hessian` (negative log density),
/// regularized towards a diagonal when the Hessian is not positive definite.
Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& hessian);

struct Chain {
  Eigen::MatrixXd draws;  // draw x parameter
  double acceptance = 0;
  double scale = 0;
};

/// Random-walk Metropolis on `log_density` with proposal scale * L * N(0, I).
/// The scale follows a Robbins-Monro recursion towards 0.234 acceptance
/// during burn-in and is frozen afterwards.
Chain metropolis(const Objective& log_density, const Eigen::VectorXd& start, const Eigen::MatrixXd& factor,
                 std::size_t draws, std::size_t burn_in, std::size_t thin, std::uint64_t seed, const std::string& what);

}  // namespace trapdoor::detail
