#include "trapdoor/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>

#include <json.hpp>

#include "optimize.hpp"
#include "trapdoor/error.hpp"
#include "trapdoor/rng.hpp"

namespace trapdoor {

namespace {

std::vector<int> discrete_levels(const Dataset& data, const Vertex& v) {
  const auto& type = data.type(v);
  if (!type.discrete()) fail(ErrorKind::Input, "column '" + v + "' is not discrete");
  return type.levels;
}

void cartesian(const std::vector<std::vector<int>>& levels, std::size_t k, std::vector<int>& cur,
               std::vector<std::vector<int>>& out) {
  if (k == levels.size()) {
    out.push_back(cur);
    return;
  }
  for (int l : levels[k]) {
    cur.push_back(l);
    cartesian(levels, k + 1, cur, out);
    cur.pop_back();
  }
}

}  // namespace

FreqTable fit_freq(const Dataset& data, const Vertex& target, const std::vector<Vertex>& given, double pseudocount) {
  if (pseudocount < 0) fail(ErrorKind::Input, "pseudocount must be nonnegative");
  FreqTable table(target, discrete_levels(data, target), given);
  std::vector<const std::vector<double>*> cols;
  std::vector<std::vector<int>> given_levels;
  for (const auto& g : given) {
    given_levels.push_back(discrete_levels(data, g));
    cols.push_back(&data.column(g));
  }
  const auto& t = data.column(target);
  std::vector<int> key(given.size());
  for (std::size_t r = 0; r < data.rows(); ++r) {
    for (std::size_t k = 0; k < cols.size(); ++k) key[k] = static_cast<int>((*cols[k])[r]);
    table.add(key, static_cast<int>(t[r]), 1);
  }
  if (pseudocount > 0) {
    std::vector<std::vector<int>> cells;
    std::vector<int> cur;
    cartesian(given_levels, 0, cur, cells);
    const Rational extra = to_rational(pseudocount);
    for (const auto& cell : cells) {
      for (int l : table.target_levels()) table.add(cell, l, extra);
    }
  }
  return table;
}

BinaryTables fit_binary_tables(const Dataset& data, double pseudocount) {
  BinaryTables t;
  t.w = fit_freq(data, "W", {}, pseudocount);
  t.x_given = fit_freq(data, "X", {"Z", "W"}, pseudocount);
  t.y_given = fit_freq(data, "Y", {"X", "Z", "W"}, pseudocount);
  t.z_aux[{}] = DiscreteAux{fit_freq(data, "Z", {}, pseudocount)};
  t.z_aux[{"X"}] = DiscreteAux{fit_freq(data, "Z", {"X"}, pseudocount)};
  return t;
}

// ---------------------------------------------------------------------------
// Linear-Gaussian

LinearFit least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, const std::string& what) {
  const Eigen::Index n = y.size();
  const Eigen::Index p = design.cols() + 1;
  if (n <= p) fail(ErrorKind::Input, what + ": need more rows than coefficients");
  Eigen::MatrixXd x(n, p);
  x.col(0).setOnes();
  x.rightCols(p - 1) = design;
  const Eigen::MatrixXd xtx = x.transpose() * x;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(xtx);
  const double dmax = ldlt.vectorD().cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || ldlt.vectorD().minCoeff() <= 1e-10 * std::max(dmax, 1e-300)) {
    fail(ErrorKind::Degeneracy, what + ": design matrix is rank deficient");
  }
  LinearFit fit;
  fit.coef = ldlt.solve(x.transpose() * y);
  fit.rss = (y - x * fit.coef).squaredNorm();
  fit.n = static_cast<std::size_t>(n);
  fit.xtx_inv = ldlt.solve(Eigen::MatrixXd::Identity(p, p));
  return fit;
}

namespace {

Eigen::VectorXd column_vector(const Dataset& data, const Vertex& v) {
  const auto& c = data.column(v);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

Eigen::MatrixXd design_of(const Dataset& data, const std::vector<Vertex>& vars) {
  Eigen::MatrixXd d(static_cast<Eigen::Index>(data.rows()), static_cast<Eigen::Index>(vars.size()));
  for (std::size_t k = 0; k < vars.size(); ++k) d.col(static_cast<Eigen::Index>(k)) = column_vector(data, vars[k]);
  return d;
}

void require_gaussian_schema(const Dataset& data) {
  for (const char* v : {"W", "Z", "X", "Y"}) {
    if (!data.has_column(v)) fail(ErrorKind::Input, std::string("Gaussian model needs column '") + v + "'");
  }
  if (data.rows() <= 6) fail(ErrorKind::Input, "Gaussian model needs more than 6 rows");
}

std::string feature_name(const Feature& f) {
  return f.level ? f.var + "=" + std::to_string(*f.level) : f.var;
}

std::string aux_prefix(const VertexSet& s) { return "z[" + set_key(s) + "]."; }

}  // namespace

GaussianObsModel fit_gaussian(const Dataset& data) {
  require_gaussian_schema(data);
  GaussianObsModel m;
  const double n = static_cast<double>(data.rows());
  const auto w = least_squares(Eigen::MatrixXd(static_cast<Eigen::Index>(data.rows()), 0), column_vector(data, "W"),
                               "W");
  m.a_w = w.coef(0);
  m.s2_w = w.rss / n;
  const auto x = least_squares(design_of(data, {"Z", "W"}), column_vector(data, "X"), "X | Z, W");
  m.a_x = x.coef(0);
  m.b_xz = x.coef(1);
  m.b_xw = x.coef(2);
  m.s2_x = x.rss / n;
  const auto y = least_squares(design_of(data, {"X", "Z", "W"}), column_vector(data, "Y"), "Y | X, Z, W");
  m.a_y = y.coef(0);
  m.b_yx = y.coef(1);
  m.b_yz = y.coef(2);
  m.b_yw = y.coef(3);
  m.s2_y = y.rss / n;
  return m;
}

std::vector<VertexSet> default_gaussian_aux_sets() { return {{}, {"X"}}; }
std::vector<VertexSet> default_glm_aux_sets() { return {{}, {"X"}, {"S", "G"}, {"X", "S", "G"}}; }

AuxSet fit_gaussian_aux(const Dataset& data, const std::vector<VertexSet>& sets) {
  AuxSet aux;
  const double n = static_cast<double>(data.rows());
  for (const auto& s : sets) {
    const std::vector<Vertex> vars(s.begin(), s.end());
    const auto fit = least_squares(design_of(data, vars), column_vector(data, "Z"), "Z | " + set_key(s));
    NormalAux a;
    a.mean.intercept = fit.coef(0);
    for (std::size_t k = 0; k < vars.size(); ++k) {
      a.mean.features.push_back({vars[k], std::nullopt});
      a.mean.coef.push_back(fit.coef(static_cast<Eigen::Index>(k) + 1));
    }
    a.variance = fit.rss / n;
    aux[s] = std::move(a);
  }
  return aux;
}

double constraint_residual(const GaussianObsModel& m) {
  const double den = m.b_xw * m.b_xw * m.s2_w + m.s2_x;
  return m.b_yz - m.b_xz * m.b_yw * m.b_xw * m.s2_w / den;
}

namespace {

/// Cross-product matrix of (1, Z, W, X, Y); every Gaussian log-likelihood is
/// a quadratic form in it.
struct Moments {
  enum : Eigen::Index { One, Z, W, X, Y };
  Eigen::Matrix<double, 5, 5> m;
  double n = 0;

  explicit Moments(const Dataset& data) {
    Eigen::MatrixXd d(static_cast<Eigen::Index>(data.rows()), 5);
    d.col(One).setOnes();
    d.col(Z) = column_vector(data, "Z");
    d.col(W) = column_vector(data, "W");
    d.col(X) = column_vector(data, "X");
    d.col(Y) = column_vector(data, "Y");
    m = d.transpose() * d;
    n = static_cast<double>(data.rows());
  }

  double quad(const Eigen::Matrix<double, 5, 1>& v) const { return v.dot(m * v); }

  double normal_ll(double rss, double s2) const {
    return -0.5 * n * std::log(2 * std::numbers::pi * s2) - 0.5 * rss / s2;
  }
};

double trapdoor_fraction(double b_xz, double b_xw, double s2_w, double s2_x) {
  return b_xz * b_xw * s2_w / (b_xw * b_xw * s2_w + s2_x);
}

struct ConstrainedParts {
  GaussianObsModel model;
  double ll = 0;
};

// theta = (a_w, log s2_w, a_x, b_xz, b_xw, log s2_x); the Y block is profiled.
ConstrainedParts constrained_profile(const Moments& mo, const Eigen::VectorXd& th) {
  ConstrainedParts out;
  auto& m = out.model;
  m.a_w = th(0);
  m.s2_w = std::exp(th(1));
  m.a_x = th(2);
  m.b_xz = th(3);
  m.b_xw = th(4);
  m.s2_x = std::exp(th(5));
  Eigen::Matrix<double, 5, 1> v;
  v << -m.a_w, 0, 1, 0, 0;
  double ll = mo.normal_ll(mo.quad(v), m.s2_w);
  v << -m.a_x, -m.b_xz, -m.b_xw, 1, 0;
  ll += mo.normal_ll(mo.quad(v), m.s2_x);
  const double c = trapdoor_fraction(m.b_xz, m.b_xw, m.s2_w, m.s2_x);
  Eigen::Matrix<double, 5, 3> a = Eigen::Matrix<double, 5, 3>::Zero();
  a(Moments::One, 0) = 1;
  a(Moments::X, 1) = 1;
  a(Moments::W, 2) = 1;
  a(Moments::Z, 2) = c;
  const Eigen::Matrix3d xtx = a.transpose() * mo.m * a;
  const Eigen::Vector3d xty = a.transpose() * mo.m.col(Moments::Y);
  const Eigen::Vector3d beta = xtx.ldlt().solve(xty);
  const double rss = std::max(mo.m(Moments::Y, Moments::Y) - beta.dot(xty), 1e-300);
  m.a_y = beta(0);
  m.b_yx = beta(1);
  m.b_yw = beta(2);
  m.b_yz = c * beta(2);
  m.s2_y = rss / mo.n;
  out.ll = ll - 0.5 * mo.n * (std::log(2 * std::numbers::pi * m.s2_y) + 1);
  return out;
}

Eigen::VectorXd constrained_start(const GaussianObsModel& u) {
  Eigen::VectorXd th(6);
  th << u.a_w, std::log(u.s2_w), u.a_x, u.b_xz, u.b_xw, std::log(u.s2_x);
  return th;
}

// full = theta (6) followed by (a_y, b_yx, b_yw, log s2_y)
double constrained_log_posterior(const Moments& mo, const Eigen::VectorXd& full) {
  const double s2_w = std::exp(full(1)), s2_x = std::exp(full(5)), s2_y = std::exp(full(9));
  const double c = trapdoor_fraction(full(3), full(4), s2_w, s2_x);
  Eigen::Matrix<double, 5, 1> v;
  v << -full(0), 0, 1, 0, 0;
  double lp = mo.normal_ll(mo.quad(v), s2_w);
  v << -full(2), -full(3), -full(4), 1, 0;
  lp += mo.normal_ll(mo.quad(v), s2_x);
  v << -full(6), -c * full(8), -full(8), -full(7), 1;
  lp += mo.normal_ll(mo.quad(v), s2_y);
  // flat priors on the variances themselves
  return lp + full(1) + full(5) + full(9);
}

GaussianObsModel constrained_model(const Eigen::VectorXd& full) {
  GaussianObsModel m;
  m.a_w = full(0);
  m.s2_w = std::exp(full(1));
  m.a_x = full(2);
  m.b_xz = full(3);
  m.b_xw = full(4);
  m.s2_x = std::exp(full(5));
  m.a_y = full(6);
  m.b_yx = full(7);
  m.b_yw = full(8);
  m.s2_y = std::exp(full(9));
  m.b_yz = trapdoor_fraction(m.b_xz, m.b_xw, m.s2_w, m.s2_x) * m.b_yw;
  return m;
}

}  // namespace

GaussianObsModel fit_gaussian_constrained(const Dataset& data) {
  const GaussianObsModel start = fit_gaussian(data);
  const Moments mo(data);
  const auto objective = [&](const Eigen::VectorXd& th) { return -constrained_profile(mo, th).ll / mo.n; };
  const auto r = detail::minimize(objective, constrained_start(start), "constrained Gaussian fit");
  return constrained_profile(mo, r.x).model;
}

// ---------------------------------------------------------------------------
// Parameter walks

std::size_t PosteriorDraws::index_of(const std::string& name) const {
  const auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) fail(ErrorKind::Input, "posterior has no parameter '" + name + "'");
  return static_cast<std::size_t>(it - names.begin());
}

double PosteriorDraws::at(std::size_t draw, const std::string& name) const {
  return values(static_cast<Eigen::Index>(draw), static_cast<Eigen::Index>(index_of(name)));
}

void visit_params(GaussianObsModel& m, const ParamVisitor& f) {
  f("a_w", m.a_w);
  f("s2_w", m.s2_w);
  f("a_x", m.a_x);
  f("b_xz", m.b_xz);
  f("b_xw", m.b_xw);
  f("s2_x", m.s2_x);
  f("a_y", m.a_y);
  f("b_yx", m.b_yx);
  f("b_yz", m.b_yz);
  f("b_yw", m.b_yw);
  f("s2_y", m.s2_y);
}

void visit_params(AuxSet& aux, const ParamVisitor& f) {
  for (auto& [set, a] : aux) {
    const std::string p = aux_prefix(set);
    if (auto* n = std::get_if<NormalAux>(&a)) {
      f(p + "intercept", n->mean.intercept);
      for (std::size_t k = 0; k < n->mean.features.size(); ++k) f(p + feature_name(n->mean.features[k]), n->mean.coef[k]);
      f(p + "variance", n->variance);
    } else if (auto* b = std::get_if<BetaAux>(&a)) {
      f(p + "intercept", b->mean.intercept);
      for (std::size_t k = 0; k < b->mean.features.size(); ++k) f(p + feature_name(b->mean.features[k]), b->mean.coef[k]);
      f(p + "log_precision", b->log_precision);
    }
  }
}

void visit_params(GlmObsModel& m, const ParamVisitor& f) {
  f("y.intercept", m.y.intercept);
  f("y.b_s", m.y.b_s);
  f("y.b_g", m.y.b_g);
  f("y.b_z", m.y.b_z);
  f("y.x.scale", m.y.x.scale);
  for (std::size_t k = 0; k < m.y.x.simplex.size(); ++k) f("y.x.simplex[" + std::to_string(k) + "]", m.y.x.simplex[k]);
  f("y.w.scale", m.y.w.scale);
  for (std::size_t k = 0; k < m.y.w.simplex.size(); ++k) f("y.w.simplex[" + std::to_string(k) + "]", m.y.w.simplex[k]);
  f("y.shape", m.y.shape);
  for (std::size_t k = 0; k < m.x.thresholds.size(); ++k) f("x.tau[" + std::to_string(k) + "]", m.x.thresholds[k]);
  f("x.c_z", m.x.c_z);
  f("x.c_s", m.x.c_s);
  f("x.c_g", m.x.c_g);
  f("x.c_w2", m.x.c_w2);
  f("x.c_w3", m.x.c_w3);
  for (std::size_t k = 0; k < m.s.means.size(); ++k) f("s.mean[" + std::to_string(k + 1) + "]", m.s.means[k]);
  f("s.variance", m.s.variance);
  f("g.p", m.p_g);
  for (std::size_t k = 0; k < m.p_w.size(); ++k) f("w.p[" + std::to_string(k + 1) + "]", m.p_w[k]);
  visit_params(m.z_aux, f);
}

namespace {

template <class Model>
std::vector<std::string> param_names(Model m) {
  std::vector<std::string> out;
  visit_params(m, [&](const std::string& name, double&) { out.push_back(name); });
  return out;
}

template <class Model>
void write_row(Model m, Eigen::MatrixXd& values, Eigen::Index row) {
  Eigen::Index k = 0;
  visit_params(m, [&](const std::string&, double& v) { values(row, k++) = v; });
}

template <class Model>
void read_row(Model& m, const Eigen::MatrixXd& values, Eigen::Index row) {
  Eigen::Index k = 0;
  visit_params(m, [&](const std::string&, double& v) { v = values(row, k++); });
}

/// Exact flat-prior draw of a regression: sigma^2 ~ rss / chi^2_{n-p},
/// beta | sigma^2 ~ N(beta_hat, sigma^2 (X'X)^-1).
class RegressionSampler {
 public:
  explicit RegressionSampler(LinearFit fit) : fit_(std::move(fit)) {
    dof_ = static_cast<double>(fit_.n) - static_cast<double>(fit_.coef.size());
    if (dof_ < 1) fail(ErrorKind::Input, "posterior needs more rows than coefficients");
    factor_ = Eigen::LLT<Eigen::MatrixXd>(fit_.xtx_inv).matrixL();
  }

  void draw(Rng& rng, Eigen::VectorXd& beta, double& sigma2) const {
    sigma2 = fit_.rss / draw_gamma(rng, dof_ / 2, 0.5);
    Eigen::VectorXd eps(fit_.coef.size());
    for (Eigen::Index k = 0; k < eps.size(); ++k) eps(k) = draw_normal(rng, 0, 1);
    beta = fit_.coef + std::sqrt(sigma2) * (factor_ * eps);
  }

 private:
  LinearFit fit_;
  double dof_ = 0;
  Eigen::MatrixXd factor_;
};

struct AuxSamplers {
  std::vector<std::pair<VertexSet, RegressionSampler>> blocks;

  AuxSamplers(const Dataset& data, const std::vector<VertexSet>& sets) {
    for (const auto& s : sets) {
      const std::vector<Vertex> vars(s.begin(), s.end());
      blocks.emplace_back(s, RegressionSampler(least_squares(design_of(data, vars), column_vector(data, "Z"),
                                                             "Z | " + set_key(s))));
    }
  }

  void draw(Rng& rng, AuxSet& aux) const {
    Eigen::VectorXd beta;
    double s2 = 0;
    for (const auto& [set, sampler] : blocks) {
      sampler.draw(rng, beta, s2);
      auto& a = std::get<NormalAux>(aux.at(set));
      a.mean.intercept = beta(0);
      for (std::size_t k = 0; k < a.mean.coef.size(); ++k) a.mean.coef[k] = beta(static_cast<Eigen::Index>(k) + 1);
      a.variance = s2;
    }
  }
};

struct GaussianRow {
  GaussianObsModel model;
  AuxSet aux;
};

void visit_params(GaussianRow& r, const ParamVisitor& f) {
  visit_params(r.model, f);
  visit_params(r.aux, f);
}

}  // namespace

GaussianPosterior draw_gaussian_posterior(const Dataset& data, std::size_t n_draws, std::uint64_t seed,
                                          const std::vector<VertexSet>& aux_sets) {
  require_gaussian_schema(data);
  if (n_draws < 1) fail(ErrorKind::Input, "need at least one posterior draw");
  const RegressionSampler w(least_squares(Eigen::MatrixXd(static_cast<Eigen::Index>(data.rows()), 0),
                                          column_vector(data, "W"), "W"));
  const RegressionSampler x(least_squares(design_of(data, {"Z", "W"}), column_vector(data, "X"), "X | Z, W"));
  const RegressionSampler y(least_squares(design_of(data, {"X", "Z", "W"}), column_vector(data, "Y"), "Y | X, Z, W"));
  const AuxSamplers aux(data, aux_sets);

  GaussianRow row{fit_gaussian(data), fit_gaussian_aux(data, aux_sets)};
  GaussianPosterior post;
  post.aux_layout = row.aux;
  post.draws.names = param_names(row);
  post.draws.values.resize(static_cast<Eigen::Index>(n_draws), static_cast<Eigen::Index>(post.draws.names.size()));
  Rng rng = make_rng(seed);
  Eigen::VectorXd b;
  for (std::size_t d = 0; d < n_draws; ++d) {
    auto& m = row.model;
    w.draw(rng, b, m.s2_w);
    m.a_w = b(0);
    x.draw(rng, b, m.s2_x);
    m.a_x = b(0);
    m.b_xz = b(1);
    m.b_xw = b(2);
    y.draw(rng, b, m.s2_y);
    m.a_y = b(0);
    m.b_yx = b(1);
    m.b_yz = b(2);
    m.b_yw = b(3);
    aux.draw(rng, row.aux);
    write_row(row, post.draws.values, static_cast<Eigen::Index>(d));
  }
  return post;
}

GaussianPosterior draw_gaussian_constrained_posterior(const Dataset& data, std::size_t n_draws, std::size_t burn_in,
                                                      std::uint64_t seed, const std::vector<VertexSet>& aux_sets) {
  const GaussianObsModel ml = fit_gaussian_constrained(data);
  const Moments mo(data);
  Eigen::VectorXd start(10);
  start << ml.a_w, std::log(ml.s2_w), ml.a_x, ml.b_xz, ml.b_xw, std::log(ml.s2_x), ml.a_y, ml.b_yx, ml.b_yw,
      std::log(ml.s2_y);
  const auto lp = [&](const Eigen::VectorXd& p) { return constrained_log_posterior(mo, p); };
  const auto neg = [&](const Eigen::VectorXd& p) { return -lp(p); };
  const auto factor = detail::proposal_factor(detail::numeric_hessian(neg, start));
  const auto chain = detail::metropolis(lp, start, factor, n_draws, burn_in, 1, derive_seed(seed, 0),
                                        "constrained Gaussian posterior");
  const AuxSamplers aux(data, aux_sets);
  GaussianRow row{ml, fit_gaussian_aux(data, aux_sets)};
  GaussianPosterior post;
  post.aux_layout = row.aux;
  post.draws.names = param_names(row);
  post.draws.values.resize(static_cast<Eigen::Index>(n_draws), static_cast<Eigen::Index>(post.draws.names.size()));
  post.draws.acceptance["constrained"] = chain.acceptance;
  Rng rng = make_rng(derive_seed(seed, 1));
  for (std::size_t d = 0; d < n_draws; ++d) {
    row.model = constrained_model(chain.draws.row(static_cast<Eigen::Index>(d)).transpose());
    aux.draw(rng, row.aux);
    write_row(row, post.draws.values, static_cast<Eigen::Index>(d));
  }
  return post;
}

GaussianObsModel gaussian_model_at(const GaussianPosterior& post, std::size_t draw) {
  if (draw >= post.draws.draws()) fail(ErrorKind::Input, "posterior draw index out of range");
  GaussianRow row{{}, post.aux_layout};
  read_row(row, post.draws.values, static_cast<Eigen::Index>(draw));
  return row.model;
}

AuxSet gaussian_aux_at(const GaussianPosterior& post, std::size_t draw) {
  if (draw >= post.draws.draws()) fail(ErrorKind::Input, "posterior draw index out of range");
  GaussianRow row{{}, post.aux_layout};
  read_row(row, post.draws.values, static_cast<Eigen::Index>(draw));
  return row.aux;
}

// ---------------------------------------------------------------------------
// Education/income GLM components

namespace {

struct GlmData {
  std::vector<double> y, z, s, g, log_y, log_z, log_1mz;
  std::vector<int> x, w;
  double s_mean = 0;
  std::size_t n = 0;
};

GlmData glm_data(const Dataset& data) {
  for (const char* v : {"Y", "X", "Z", "W", "S", "G"}) {
    if (!data.has_column(v)) fail(ErrorKind::Input, std::string("education/income model needs column '") + v + "'");
  }
  GlmData d;
  d.n = data.rows();
  if (d.n < 20) fail(ErrorKind::Input, "education/income model needs at least 20 rows");
  d.y = data.column("Y");
  d.z = data.column("Z");
  d.s = data.column("S");
  d.g = data.column("G");
  for (double v : data.column("X")) d.x.push_back(static_cast<int>(v));
  for (double v : data.column("W")) d.w.push_back(static_cast<int>(v));
  for (std::size_t i = 0; i < d.n; ++i) {
    if (!(d.y[i] > 0)) fail(ErrorKind::Input, "Y must be positive");
    if (!(d.z[i] > 0 && d.z[i] < 1)) fail(ErrorKind::Input, "Z must lie strictly inside (0, 1)");
    if (d.x[i] < 0 || d.x[i] > 2) fail(ErrorKind::Input, "X must take levels 0, 1, 2");
    if (d.w[i] < 1 || d.w[i] > 3) fail(ErrorKind::Input, "W must take levels 1, 2, 3");
    if (d.g[i] != 0 && d.g[i] != 1) fail(ErrorKind::Input, "G must be binary");
    d.log_y.push_back(std::log(d.y[i]));
    d.log_z.push_back(std::log(d.z[i]));
    d.log_1mz.push_back(std::log1p(-d.z[i]));
    d.s_mean += d.s[i];
  }
  d.s_mean /= static_cast<double>(d.n);
  for (int level : kTreatmentLevels) {
    if (std::count(d.x.begin(), d.x.end(), level) == 0) {
      fail(ErrorKind::Fit, "X level " + std::to_string(level) + " not observed");
    }
  }
  for (int level : kSesLevels) {
    if (std::count(d.w.begin(), d.w.end(), level) == 0) {
      fail(ErrorKind::Fit, "W level " + std::to_string(level) + " not observed");
    }
  }
  return d;
}

/// A block of the GLM with an unconstrained internal parameterization.
struct Block {
  std::string name;
  detail::Objective log_lik;    // data log-likelihood
  detail::Objective log_prior;  // flat prior in the model scale, as a density on the internal scale
  Eigen::VectorXd start;
};

Eigen::VectorXd min_norm_ls(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  return x.completeOrthogonalDecomposition().solve(y);
}

double clamp_logit(double p) {
  p = std::clamp(p, 0.05, 0.95);
  return std::log(p / (1 - p));
}

// Gamma outcome, internal: (c0, b_s, b_g, b_z, x_scale, x_t, w_scale, w_t, log_shape) with
// the intercept at the mean of S.
GammaOutcome gamma_from(const Eigen::VectorXd& p, double s_mean) {
  GammaOutcome o;
  o.intercept = p(0) - p(1) * s_mean;
  o.b_s = p(1);
  o.b_g = p(2);
  o.b_z = p(3);
  const double xz = logistic(p(5)), wz = logistic(p(7));
  o.x = {p(4), {xz, 1 - xz}};
  o.w = {p(6), {wz, 1 - wz}};
  o.shape = std::exp(p(8));
  return o;
}

Block gamma_block(const GlmData& d) {
  Block b;
  b.name = "Y gamma regression";
  b.log_lik = [&d](const Eigen::VectorXd& p) {
    const double k = std::exp(p(8));
    if (!std::isfinite(k)) return -std::numeric_limits<double>::infinity();
    const double xz = logistic(p(5)), wz = logistic(p(7));
    const double xe[3] = {0, p(4) * xz, p(4)};
    const double we[3] = {0, p(6) * wz, p(6)};
    const double log_k = p(8);
    double ll = static_cast<double>(d.n) * (k * log_k - std::lgamma(k));
    for (std::size_t i = 0; i < d.n; ++i) {
      const double lm = p(0) + p(1) * (d.s[i] - d.s_mean) + p(2) * d.g[i] + p(3) * d.z[i] +
                        xe[d.x[i]] + we[d.w[i] - 1];
      ll += -k * lm + (k - 1) * d.log_y[i] - k * std::exp(d.log_y[i] - lm);
    }
    return ll;
  };
  b.log_prior = [](const Eigen::VectorXd& p) {
    // flat on the simplices and on the shape
    return log_logistic(p(5)) + log_logistic(-p(5)) + log_logistic(p(7)) + log_logistic(-p(7)) + p(8);
  };
  // start from least squares on log Y
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n), 8);
  Eigen::VectorXd ly(static_cast<Eigen::Index>(d.n));
  for (std::size_t i = 0; i < d.n; ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    x.row(r) << 1, d.s[i] - d.s_mean, d.g[i], d.z[i], d.x[i] == 1, d.x[i] == 2, d.w[i] == 2, d.w[i] == 3;
    ly(r) = d.log_y[i];
  }
  const Eigen::VectorXd c = min_norm_ls(x, ly);
  const double resid_var = std::max((ly - x * c).squaredNorm() / static_cast<double>(d.n), 1e-8);
  const auto mono = [](double d1, double d2, double& scale, double& t) {
    scale = std::abs(d2) > 1e-8 ? d2 : d1;
    t = std::abs(d2) > 1e-8 ? clamp_logit(d1 / d2) : 0.0;
  };
  b.start.resize(9);
  b.start << c(0), c(1), c(2), c(3), 0, 0, 0, 0, std::log(1 / resid_var);
  mono(c(4), c(5), b.start(4), b.start(5));
  mono(c(6), c(7), b.start(6), b.start(7));
  return b;
}

// Sequential logit for X, internal: (tau1, tau2, c_z, c_s, c_g, c_w2, c_w3) with S centred.
SequentialTreatment sequential_from(const Eigen::VectorXd& p, double s_mean) {
  SequentialTreatment t;
  t.thresholds = {p(0) + p(3) * s_mean, p(1) + p(3) * s_mean};
  t.c_z = p(2);
  t.c_s = p(3);
  t.c_g = p(4);
  t.c_w2 = p(5);
  t.c_w3 = p(6);
  return t;
}

Block sequential_block(const GlmData& d) {
  Block b;
  b.name = "X sequential logit";
  b.log_lik = [&d](const Eigen::VectorXd& p) {
    double ll = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
      const double eta = p(2) * d.z[i] + p(3) * (d.s[i] - d.s_mean) + p(4) * d.g[i] + (d.w[i] == 2 ? p(5) : 0.0) +
                         (d.w[i] == 3 ? p(6) : 0.0);
      for (int k = 0; k < 2; ++k) {
        const double t = eta - p(k);
        if (k < d.x[i]) {
          ll += log_logistic(t);
        } else {
          ll += log_logistic(-t);
          break;
        }
      }
    }
    return ll;
  };
  b.log_prior = [](const Eigen::VectorXd&) { return 0.0; };
  const double n = static_cast<double>(d.n);
  const double n1 = static_cast<double>(std::count_if(d.x.begin(), d.x.end(), [](int v) { return v >= 1; }));
  const double n2 = static_cast<double>(std::count(d.x.begin(), d.x.end(), 2));
  b.start = Eigen::VectorXd::Zero(7);
  b.start(0) = -clamp_logit(n1 / n);
  b.start(1) = -clamp_logit(n2 / std::max(n1, 1.0));
  return b;
}

struct BetaLayout {
  std::vector<Feature> features;
  std::vector<double> centre;  // continuous features are centred internally
};

BetaLayout beta_layout(const Dataset& data, const VertexSet& given) {
  BetaLayout l;
  for (const auto& v : given) {
    if (!data.has_column(v)) fail(ErrorKind::Input, "trapdoor regression: no column '" + v + "'");
    std::vector<int> levels;
    if (v == "X") {
      levels.assign(std::begin(kTreatmentLevels), std::end(kTreatmentLevels));
    } else if (v == "W") {
      levels.assign(std::begin(kSesLevels), std::end(kSesLevels));
    } else if (data.type(v).kind == ColumnKind::Ordinal) {
      levels = data.type(v).levels;
    }
    if (levels.empty()) {
      const auto& c = data.column(v);
      double mean = 0;
      for (double x : c) mean += x;
      l.features.push_back({v, std::nullopt});
      l.centre.push_back(data.type(v).kind == ColumnKind::Binary ? 0.0 : mean / static_cast<double>(c.size()));
    } else {
      for (std::size_t k = 1; k < levels.size(); ++k) {
        l.features.push_back({v, levels[k]});
        l.centre.push_back(0.0);
      }
    }
  }
  return l;
}

BetaAux beta_from(const BetaLayout& l, const Eigen::VectorXd& p) {
  BetaAux a;
  a.mean.intercept = p(0);
  a.mean.features = l.features;
  for (std::size_t k = 0; k < l.features.size(); ++k) {
    a.mean.coef.push_back(p(static_cast<Eigen::Index>(k) + 1));
    a.mean.intercept -= a.mean.coef.back() * l.centre[k];
  }
  a.log_precision = p(p.size() - 1);
  return a;
}

Block beta_block(const Dataset& data, const GlmData& d, const VertexSet& given, const BetaLayout& l) {
  const auto nf = static_cast<Eigen::Index>(l.features.size());
  auto design = std::make_shared<Eigen::MatrixXd>(static_cast<Eigen::Index>(d.n), nf);
  for (Eigen::Index k = 0; k < nf; ++k) {
    const auto& f = l.features[static_cast<std::size_t>(k)];
    const auto& c = data.column(f.var);
    for (std::size_t i = 0; i < d.n; ++i) (*design)(static_cast<Eigen::Index>(i), k) = f.value(c[i]) - l.centre[static_cast<std::size_t>(k)];
  }
  for (Eigen::Index k = 0; k < nf; ++k) {
    if (design->col(k).cwiseAbs().maxCoeff() == 0) {
      fail(ErrorKind::Fit, "trapdoor regression Z | " + set_key(given) + ": indicator " +
                               feature_name(l.features[static_cast<std::size_t>(k)]) + " never observed");
    }
  }
  Block b;
  b.name = "Z | " + set_key(given) + " beta regression";
  b.log_lik = [&d, design, nf](const Eigen::VectorXd& p) {
    const double phi = std::exp(p(nf + 1));
    if (!std::isfinite(phi)) return -std::numeric_limits<double>::infinity();
    const Eigen::VectorXd eta = (*design) * p.segment(1, nf);
    const double lg_phi = std::lgamma(phi);
    double ll = 0;
    for (std::size_t i = 0; i < d.n; ++i) {
      const double mu = logistic(p(0) + eta(static_cast<Eigen::Index>(i)));
      const double a = mu * phi, bb = (1 - mu) * phi;
      if (!(a > 0 && bb > 0)) return -std::numeric_limits<double>::infinity();
      ll += lg_phi - std::lgamma(a) - std::lgamma(bb) + (a - 1) * d.log_z[i] + (bb - 1) * d.log_1mz[i];
    }
    return ll;
  };
  b.log_prior = [](const Eigen::VectorXd&) { return 0.0; };
  Eigen::MatrixXd x(static_cast<Eigen::Index>(d.n), nf + 1);
  x.col(0).setOnes();
  x.rightCols(nf) = *design;
  Eigen::VectorXd lz(static_cast<Eigen::Index>(d.n));
  double m = 0, v = 0;
  for (std::size_t i = 0; i < d.n; ++i) {
    lz(static_cast<Eigen::Index>(i)) = d.log_z[i] - d.log_1mz[i];
    m += d.z[i];
  }
  m /= static_cast<double>(d.n);
  for (double z : d.z) v += (z - m) * (z - m);
  v /= static_cast<double>(d.n);
  b.start.resize(nf + 2);
  b.start.head(nf + 1) = min_norm_ls(x, lz);
  b.start(nf + 1) = std::log(std::max(m * (1 - m) / std::max(v, 1e-12) - 1, 1.0));
  return b;
}

Eigen::VectorXd fit_block(const Block& b) {
  const auto obj = [&](const Eigen::VectorXd& p) {
    const double ll = b.log_lik(p);
    return std::isfinite(ll) ? -ll : std::numeric_limits<double>::infinity();
  };
  auto r = detail::minimize(obj, b.start, b.name);
  for (Eigen::Index k = 0; k < r.x.size(); ++k) {
    if (!std::isfinite(r.x(k)) || std::abs(r.x(k)) > 1e6) fail(ErrorKind::Fit, b.name + ": estimates diverge (separation?)");
  }
  return r.x;
}

detail::Chain sample_block(const Block& b, const Eigen::VectorXd& ml, const SamplerOptions& o, std::uint64_t seed) {
  const auto lp = [&](const Eigen::VectorXd& p) {
    const double ll = b.log_lik(p);
    return std::isfinite(ll) ? ll + b.log_prior(p) : -std::numeric_limits<double>::infinity();
  };
  Eigen::VectorXd start = ml;
  // keep simplex logits finite for the Hessian
  for (Eigen::Index k = 0; k < start.size(); ++k) start(k) = std::clamp(start(k), -1e4, 1e4);
  const auto neg = [&](const Eigen::VectorXd& p) { return -lp(p); };
  const auto factor = detail::proposal_factor(detail::numeric_hessian(neg, start));
  return detail::metropolis(lp, start, factor, o.draws, o.burn_in, o.thin, seed, b.name);
}

struct SesFit {
  std::vector<double> count{0, 0, 0}, sum{0, 0, 0};
  double rss = 0;
  double n = 0;
  std::vector<double> means{0, 0, 0};
};

SesFit ses_fit(const GlmData& d) {
  SesFit f;
  f.n = static_cast<double>(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    f.count[static_cast<std::size_t>(d.w[i] - 1)] += 1;
    f.sum[static_cast<std::size_t>(d.w[i] - 1)] += d.s[i];
  }
  for (std::size_t k = 0; k < 3; ++k) f.means[k] = f.sum[k] / f.count[k];
  for (std::size_t i = 0; i < d.n; ++i) {
    const double r = d.s[i] - f.means[static_cast<std::size_t>(d.w[i] - 1)];
    f.rss += r * r;
  }
  return f;
}

struct GlmBlocks {
  GlmData d;
  Block y, x;
  std::vector<std::pair<VertexSet, BetaLayout>> layouts;
  std::vector<Block> aux;

  GlmBlocks(const Dataset& data, const std::vector<VertexSet>& sets) : d(glm_data(data)) {
    y = gamma_block(d);
    x = sequential_block(d);
    for (const auto& s : sets) layouts.emplace_back(s, beta_layout(data, s));
    for (const auto& [s, l] : layouts) aux.push_back(beta_block(data, d, s, l));
  }
};

void fill_glm(GlmObsModel& m, const GlmBlocks& b, const Eigen::VectorXd& y, const Eigen::VectorXd& x,
              const std::vector<Eigen::VectorXd>& aux) {
  m.y = gamma_from(y, b.d.s_mean);
  m.x = sequential_from(x, b.d.s_mean);
  for (std::size_t k = 0; k < b.layouts.size(); ++k) m.z_aux[b.layouts[k].first] = beta_from(b.layouts[k].second, aux[k]);
}

}  // namespace

BetaAux fit_beta_aux(const Dataset& data, const VertexSet& given) {
  const GlmData d = glm_data(data);
  const auto layout = beta_layout(data, given);
  return beta_from(layout, fit_block(beta_block(data, d, given, layout)));
}

GlmObsModel fit_glm(const Dataset& data, const std::vector<VertexSet>& aux_sets) {
  const GlmBlocks b(data, aux_sets);
  GlmObsModel m;
  std::vector<Eigen::VectorXd> aux;
  for (const auto& blk : b.aux) aux.push_back(fit_block(blk));
  fill_glm(m, b, fit_block(b.y), fit_block(b.x), aux);
  const auto ses = ses_fit(b.d);
  m.s.means = ses.means;
  m.s.variance = ses.rss / ses.n;
  double g1 = 0;
  for (double g : b.d.g) g1 += g;
  m.p_g = g1 / ses.n;
  for (std::size_t k = 0; k < 3; ++k) m.p_w[k] = ses.count[k] / ses.n;
  return m;
}

GlmPosterior draw_glm_posterior(const Dataset& data, const SamplerOptions& opts,
                                const std::vector<VertexSet>& aux_sets) {
  if (opts.draws < 1) fail(ErrorKind::Input, "need at least one posterior draw");
  const GlmBlocks b(data, aux_sets);
  GlmPosterior post;
  post.layout = fit_glm(data, aux_sets);

  std::uint64_t stream = 0;
  const auto chain_of = [&](const Block& blk) {
    auto chain = sample_block(blk, fit_block(blk), opts, derive_seed(opts.seed, stream++));
    post.draws.acceptance[blk.name] = chain.acceptance;
    return chain.draws;
  };
  const Eigen::MatrixXd y = chain_of(b.y);
  const Eigen::MatrixXd x = chain_of(b.x);
  std::vector<Eigen::MatrixXd> aux;
  for (const auto& blk : b.aux) aux.push_back(chain_of(blk));

  const auto ses = ses_fit(b.d);
  double g1 = 0;
  for (double g : b.d.g) g1 += g;
  Rng rng = make_rng(derive_seed(opts.seed, stream++));

  GlmObsModel m = post.layout;
  post.draws.names = param_names(m);
  post.draws.values.resize(static_cast<Eigen::Index>(opts.draws), static_cast<Eigen::Index>(post.draws.names.size()));
  std::vector<Eigen::VectorXd> aux_row(aux.size());
  for (std::size_t dr = 0; dr < opts.draws; ++dr) {
    const auto r = static_cast<Eigen::Index>(dr);
    for (std::size_t k = 0; k < aux.size(); ++k) aux_row[k] = aux[k].row(r).transpose();
    fill_glm(m, b, y.row(r).transpose(), x.row(r).transpose(), aux_row);
    // conjugate blocks
    m.s.variance = ses.rss / draw_gamma(rng, (ses.n - 3) / 2, 0.5);
    for (std::size_t k = 0; k < 3; ++k) {
      m.s.means[k] = draw_normal(rng, ses.means[k], std::sqrt(m.s.variance / ses.count[k]));
    }
    m.p_g = draw_beta(rng, 1 + g1, 1 + ses.n - g1);
    double total = 0;
    for (std::size_t k = 0; k < 3; ++k) total += (m.p_w[k] = draw_gamma(rng, 1 + ses.count[k], 1));
    for (auto& p : m.p_w) p /= total;
    write_row(m, post.draws.values, r);
  }
  return post;
}

GlmObsModel glm_model_at(const GlmPosterior& post, std::size_t draw) {
  if (draw >= post.draws.draws()) fail(ErrorKind::Input, "posterior draw index out of range");
  GlmObsModel m = post.layout;
  read_row(m, post.draws.values, static_cast<Eigen::Index>(draw));
  return m;
}

// ---------------------------------------------------------------------------
// JSON

std::string to_json(const PosteriorDraws& d) {
  nlohmann::json j;
  j["names"] = d.names;
  nlohmann::json rows = nlohmann::json::array();
  for (Eigen::Index r = 0; r < d.values.rows(); ++r) {
    std::vector<double> row(static_cast<std::size_t>(d.values.cols()));
    for (Eigen::Index c = 0; c < d.values.cols(); ++c) row[static_cast<std::size_t>(c)] = d.values(r, c);
    rows.push_back(row);
  }
  j["draws"] = rows;
  j["acceptance"] = d.acceptance;
  return j.dump();
}

namespace {

template <class Model>
std::string params_json(Model& m) {
  nlohmann::json j = nlohmann::json::object();
  visit_params(m, [&](const std::string& name, double& v) { j[name] = v; });
  return j.dump(2);
}

}  // namespace

std::string to_json(GaussianObsModel m) { return params_json(m); }
std::string to_json(GlmObsModel m) { return params_json(m); }

}  // namespace trapdoor
