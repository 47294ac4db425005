#include "optimize.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <memory>

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include "trapdoor/error.hpp"
#include "trapdoor/rng.hpp"

namespace trapdoor::detail {

namespace {

Eigen::Map<const Eigen::VectorXd> view(const gsl_vector* v) {
  return {v->data, static_cast<Eigen::Index>(v->size)};
}

double safe_eval(const Objective& f, const Eigen::VectorXd& x) {
  const double v = f(x);
  return std::isfinite(v) ? v : std::numeric_limits<double>::max();
}

double step_for(double x) { return 1e-5 * std::max(1.0, std::abs(x)); }

void central_gradient(const Objective& f, const Eigen::VectorXd& x, gsl_vector* g) {
  Eigen::VectorXd probe = x;
  for (Eigen::Index k = 0; k < x.size(); ++k) {
    const double h = step_for(x(k));
    probe(k) = x(k) + h;
    const double up = safe_eval(f, probe);
    probe(k) = x(k) - h;
    const double down = safe_eval(f, probe);
    probe(k) = x(k);
    gsl_vector_set(g, static_cast<std::size_t>(k), (up - down) / (2 * h));
  }
}

double f_thunk(const gsl_vector* v, void* params) {
  return safe_eval(*static_cast<const Objective*>(params), view(v));
}

void df_thunk(const gsl_vector* v, void* params, gsl_vector* g) {
  central_gradient(*static_cast<const Objective*>(params), view(v), g);
}

void fdf_thunk(const gsl_vector* v, void* params, double* f, gsl_vector* g) {
  *f = f_thunk(v, params);
  df_thunk(v, params, g);
}

struct VectorDeleter {
  void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using GslVector = std::unique_ptr<gsl_vector, VectorDeleter>;

GslVector to_gsl(const Eigen::VectorXd& x) {
  GslVector v(gsl_vector_alloc(static_cast<std::size_t>(x.size())));
  for (Eigen::Index k = 0; k < x.size(); ++k) gsl_vector_set(v.get(), static_cast<std::size_t>(k), x(k));
  return v;
}

OptimResult run_bfgs(const Objective& f, const Eigen::VectorXd& start) {
  const std::size_t n = static_cast<std::size_t>(start.size());
  gsl_multimin_function_fdf fn{&f_thunk, &df_thunk, &fdf_thunk, n, const_cast<Objective*>(&f)};
  std::unique_ptr<gsl_multimin_fdfminimizer, decltype(&gsl_multimin_fdfminimizer_free)> s(
      gsl_multimin_fdfminimizer_alloc(gsl_multimin_fdfminimizer_vector_bfgs2, n), &gsl_multimin_fdfminimizer_free);
  auto x0 = to_gsl(start);
  gsl_multimin_fdfminimizer_set(s.get(), &fn, x0.get(), 0.01, 0.1);
  OptimResult r{start, 0, false, 0, "bfgs2"};
  for (int it = 1; it <= 2000; ++it) {
    r.iterations = it;
    const int status = gsl_multimin_fdfminimizer_iterate(s.get());
    if (status != GSL_SUCCESS) break;
    if (gsl_multimin_test_gradient(s->gradient, 1e-6 * std::max(1.0, std::abs(s->f))) == GSL_SUCCESS) {
      r.converged = true;
      break;
    }
  }
  r.x = view(s->x);
  r.value = s->f;
  // BFGS may stop on a line-search failure at the optimum; accept a small gradient
  if (!r.converged) {
    double gmax = 0;
    for (std::size_t k = 0; k < n; ++k) gmax = std::max(gmax, std::abs(gsl_vector_get(s->gradient, k)));
    r.converged = gmax < 1e-3 * std::max(1.0, std::abs(r.value));
  }
  return r;
}

OptimResult run_simplex(const Objective& f, const Eigen::VectorXd& start) {
  const std::size_t n = static_cast<std::size_t>(start.size());
  gsl_multimin_function fn{&f_thunk, n, const_cast<Objective*>(&f)};
  std::unique_ptr<gsl_multimin_fminimizer, decltype(&gsl_multimin_fminimizer_free)> s(
      gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, n), &gsl_multimin_fminimizer_free);
  auto x0 = to_gsl(start);
  GslVector steps(gsl_vector_alloc(n));
  for (std::size_t k = 0; k < n; ++k) gsl_vector_set(steps.get(), k, 0.1 * std::max(1.0, std::abs(start(k))));
  gsl_multimin_fminimizer_set(s.get(), &fn, x0.get(), steps.get());
  OptimResult r{start, 0, false, 0, "nmsimplex2"};
  for (int it = 1; it <= 20000; ++it) {
    r.iterations = it;
    if (gsl_multimin_fminimizer_iterate(s.get()) != GSL_SUCCESS) break;
    if (gsl_multimin_test_size(gsl_multimin_fminimizer_size(s.get()), 1e-8) == GSL_SUCCESS) {
      r.converged = true;
      break;
    }
  }
  r.x = view(s->x);
  r.value = s->fval;
  return r;
}

}  // namespace

OptimResult minimize(const Objective& f, const Eigen::VectorXd& start, const std::string& what) {
  gsl_set_error_handler_off();
  if (!std::isfinite(f(start))) fail(ErrorKind::Fit, what + ": objective not finite at the starting point");
  OptimResult r = run_bfgs(f, start);
  if (r.converged) return r;
  OptimResult s = run_simplex(f, r.value < f(start) ? r.x : start);
  if (s.converged) {
    // polish
    OptimResult p = run_bfgs(f, s.x);
    return p.value <= s.value ? p : s;
  }
  char buf[160];
  std::snprintf(buf, sizeof buf, ": optimizer did not converge (bfgs2 %d iterations, f=%.6g; nmsimplex2 %d, f=%.6g)",
                r.iterations, r.value, s.iterations, s.value);
  fail(ErrorKind::Fit, what + buf);
}

Eigen::MatrixXd numeric_hessian(const Objective& f, const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  Eigen::MatrixXd h(n, n);
  Eigen::VectorXd p = x;
  const double f0 = f(x);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double hi = 1e-4 * std::max(1.0, std::abs(x(i)));
    p(i) = x(i) + hi;
    const double fp = f(p);
    p(i) = x(i) - hi;
    const double fm = f(p);
    p(i) = x(i);
    h(i, i) = (fp - 2 * f0 + fm) / (hi * hi);
    for (Eigen::Index j = 0; j < i; ++j) {
      const double hj = 1e-4 * std::max(1.0, std::abs(x(j)));
      double acc = 0;
      for (int si : {1, -1}) {
        for (int sj : {1, -1}) {
          p(i) = x(i) + si * hi;
          p(j) = x(j) + sj * hj;
          acc += si * sj * f(p);
        }
      }
      p(i) = x(i);
      p(j) = x(j);
      h(i, j) = h(j, i) = acc / (4 * hi * hj);
    }
  }
  return h;
}

Eigen::MatrixXd proposal_factor(const Eigen::MatrixXd& hessian) {
  const Eigen::Index n = hessian.rows();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (hessian + hessian.transpose()));
  Eigen::VectorXd ev = eig.eigenvalues();
  const double top = std::max(ev.maxCoeff(), 1e-12);
  for (Eigen::Index k = 0; k < n; ++k) ev(k) = std::max(ev(k), 1e-10 * top);
  const Eigen::MatrixXd cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() * eig.eigenvectors().transpose();
  Eigen::LLT<Eigen::MatrixXd> llt(0.5 * (cov + cov.transpose()));
  if (llt.info() != Eigen::Success) return ev.cwiseInverse().cwiseSqrt().asDiagonal();
  return llt.matrixL();
}

Chain metropolis(const Objective& log_density, const Eigen::VectorXd& start, const Eigen::MatrixXd& factor,
                 std::size_t draws, std::size_t burn_in, std::size_t thin, std::uint64_t seed,
                 const std::string& what) {
  if (draws < 1) fail(ErrorKind::Input, what + ": need at least one posterior draw");
  thin = std::max<std::size_t>(thin, 1);
  const Eigen::Index d = start.size();
  Rng rng = make_rng(seed);
  std::normal_distribution<double> std_normal;
  Eigen::VectorXd cur = start;
  double cur_lp = log_density(cur);
  if (!std::isfinite(cur_lp)) fail(ErrorKind::Fit, what + ": log posterior not finite at the starting point");
  double log_scale = std::log(2.38 / std::sqrt(static_cast<double>(d)));

  Chain chain;
  chain.draws.resize(static_cast<Eigen::Index>(draws), d);
  std::size_t accepted = 0, kept = 0;
  const std::size_t total = burn_in + draws * thin;
  Eigen::VectorXd eps(d);
  for (std::size_t t = 0; t < total; ++t) {
    for (Eigen::Index k = 0; k < d; ++k) eps(k) = std_normal(rng);
    const Eigen::VectorXd prop = cur + std::exp(log_scale) * (factor * eps);
    const double prop_lp = log_density(prop);
    const double log_ratio = std::isfinite(prop_lp) ? prop_lp - cur_lp : -std::numeric_limits<double>::infinity();
    const bool accept = std::log(draw_uniform(rng)) < log_ratio;
    if (accept) {
      cur = prop;
      cur_lp = prop_lp;
    }
    if (t < burn_in) {
      const double rate = std::min(1.0, std::exp(std::min(0.0, log_ratio)));
      log_scale += (rate - 0.234) / std::pow(static_cast<double>(t) + 1.0, 0.6);
    } else {
      if (accept) ++accepted;
      if ((t - burn_in + 1) % thin == 0) chain.draws.row(static_cast<Eigen::Index>(kept++)) = cur.transpose();
    }
  }
  chain.acceptance = static_cast<double>(accepted) / static_cast<double>(draws * thin);
  chain.scale = std::exp(log_scale);
  if (!chain.draws.allFinite()) fail(ErrorKind::Fit, what + ": non-finite posterior draw");
  return chain;
}

}  // namespace trapdoor::detail
