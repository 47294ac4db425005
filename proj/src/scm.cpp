#include "trapdoor/scm.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <json.hpp>

#include "trapdoor/error.hpp"
#include "trapdoor/rng.hpp"

namespace trapdoor {

const char* to_string(Family f) noexcept {
  switch (f) {
    case Family::Normal: return "normal";
    case Family::BernoulliLinear: return "bernoulli-linear";
    case Family::Threshold: return "threshold";
    case Family::BetaLogit: return "beta-logit";
    case Family::SequentialLogit: return "sequential-logit";
    case Family::GammaLog: return "gamma-log";
  }
  return "unknown";
}

namespace {

Family family_from_string(const std::string& s) {
  for (Family f : {Family::Normal, Family::BernoulliLinear, Family::Threshold, Family::BetaLogit,
                   Family::SequentialLogit, Family::GammaLog}) {
    if (s == to_string(f)) return f;
  }
  fail(ErrorKind::Input, "unknown mechanism family '" + s + "'");
}

ColumnKind kind_from_string(const std::string& s) {
  for (ColumnKind k : {ColumnKind::Binary, ColumnKind::Ordinal, ColumnKind::Continuous, ColumnKind::Positive,
                       ColumnKind::UnitInterval}) {
    if (s == to_string(k)) return k;
  }
  fail(ErrorKind::Input, "unknown column kind '" + s + "'");
}

}  // namespace

std::vector<Vertex> Mechanism::parents() const {
  auto out = location.variables();
  for (const auto& v : precision.variables()) {
    if (std::find(out.begin(), out.end(), v) == out.end()) out.push_back(v);
  }
  return out;
}

const Mechanism& ScmSpec::mechanism(const Vertex& v) const {
  for (const auto& m : mechanisms) {
    if (m.vertex == v) return m;
  }
  fail(ErrorKind::Input, "model '" + name + "' has no vertex '" + v + "'");
}

bool ScmSpec::has(const Vertex& v) const {
  return std::any_of(mechanisms.begin(), mechanisms.end(), [&](const Mechanism& m) { return m.vertex == v; });
}

void validate(const ScmSpec& spec) {
  std::vector<Vertex> seen;
  for (const auto& m : spec.mechanisms) {
    const std::string where = "mechanism '" + m.vertex + "'";
    if (std::find(seen.begin(), seen.end(), m.vertex) != seen.end()) fail(ErrorKind::Input, "duplicate " + where);
    for (const auto& p : m.parents()) {
      if (std::find(seen.begin(), seen.end(), p) == seen.end()) {
        fail(ErrorKind::Input, where + " references '" + p + "' before it is generated");
      }
    }
    for (const auto* lp : {&m.location, &m.precision}) {
      if (lp->features.size() != lp->coef.size()) fail(ErrorKind::Input, where + ": feature/coefficient mismatch");
    }
    switch (m.family) {
      case Family::Normal:
        if (m.params.size() != 1 || !(m.params[0] > 0)) fail(ErrorKind::Input, where + ": needs one positive variance");
        break;
      case Family::GammaLog:
        if (m.params.size() != 1 || !(m.params[0] > 0)) fail(ErrorKind::Input, where + ": needs one positive shape");
        break;
      case Family::Threshold:
      case Family::SequentialLogit:
        if (m.type.levels.size() != m.params.size() + 1) {
          fail(ErrorKind::Input, where + ": needs one more level than cut points");
        }
        break;
      case Family::BernoulliLinear:
      case Family::BetaLogit:
        break;
    }
    seen.push_back(m.vertex);
  }
  for (const auto& v : spec.observed) {
    if (std::find(seen.begin(), seen.end(), v) == seen.end()) {
      fail(ErrorKind::Input, "observed vertex '" + v + "' has no mechanism");
    }
  }
}

namespace {

nlohmann::json lp_to_json(const LinearPredictor& lp) {
  nlohmann::json terms = nlohmann::json::array();
  for (std::size_t k = 0; k < lp.features.size(); ++k) {
    nlohmann::json t{{"var", lp.features[k].var}, {"coef", lp.coef[k]}};
    if (lp.features[k].level) t["level"] = *lp.features[k].level;
    terms.push_back(t);
  }
  return {{"intercept", lp.intercept}, {"terms", terms}};
}

LinearPredictor lp_from_json(const nlohmann::json& j) {
  LinearPredictor lp;
  lp.intercept = j.value("intercept", 0.0);
  if (j.contains("terms")) {
    for (const auto& t : j.at("terms")) {
      Feature f{t.at("var").get<std::string>(), std::nullopt};
      if (t.contains("level")) f.level = t.at("level").get<int>();
      lp.features.push_back(f);
      lp.coef.push_back(t.at("coef").get<double>());
    }
  }
  return lp;
}

}  // namespace

std::string to_json(const ScmSpec& spec) {
  nlohmann::json mechs = nlohmann::json::array();
  for (const auto& m : spec.mechanisms) {
    nlohmann::json j{{"vertex", m.vertex},
                     {"family", to_string(m.family)},
                     {"location", lp_to_json(m.location)},
                     {"params", m.params},
                     {"type", {{"kind", to_string(m.type.kind)}, {"levels", m.type.levels}}}};
    if (m.family == Family::BetaLogit) j["precision"] = lp_to_json(m.precision);
    mechs.push_back(j);
  }
  nlohmann::json j{{"name", spec.name}, {"observed", spec.observed}, {"mechanisms", mechs}};
  return j.dump(2);
}

ScmSpec scm_from_json(std::string_view text) {
  try {
    const auto j = nlohmann::json::parse(text);
    ScmSpec spec;
    spec.name = j.value("name", "");
    spec.observed = j.at("observed").get<std::vector<std::string>>();
    for (const auto& mj : j.at("mechanisms")) {
      Mechanism m;
      m.vertex = mj.at("vertex").get<std::string>();
      m.family = family_from_string(mj.at("family").get<std::string>());
      m.location = lp_from_json(mj.at("location"));
      if (mj.contains("precision")) m.precision = lp_from_json(mj.at("precision"));
      m.params = mj.value("params", std::vector<double>{});
      if (mj.contains("type")) {
        m.type.kind = kind_from_string(mj.at("type").at("kind").get<std::string>());
        m.type.levels = mj.at("type").value("levels", std::vector<int>{});
      }
      spec.mechanisms.push_back(std::move(m));
    }
    validate(spec);
    return spec;
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("model JSON: ") + e.what());
  }
}

// ---------------------------------------------------------------------------
// Built-in models

namespace {

LinearPredictor lp(double intercept, std::initializer_list<std::pair<const char*, double>> terms) {
  LinearPredictor out;
  out.intercept = intercept;
  for (auto [var, coef] : terms) {
    out.features.push_back({var, std::nullopt});
    out.coef.push_back(coef);
  }
  return out;
}

LinearPredictor& with_indicator(LinearPredictor& p, const char* var, int level, double coef) {
  p.features.push_back({var, level});
  p.coef.push_back(coef);
  return p;
}

Mechanism normal(const char* v, LinearPredictor loc, double variance) {
  return {v, Family::Normal, std::move(loc), {}, {variance}, ColumnType::continuous()};
}

Mechanism bernoulli(const char* v, LinearPredictor loc) {
  return {v, Family::BernoulliLinear, std::move(loc), {}, {}, ColumnType::binary()};
}

ScmSpec binary_eq9() {
  ScmSpec s;
  s.name = "binary-eq9";
  s.mechanisms = {
      bernoulli("V", lp(0.5, {})),
      bernoulli("U", lp(0.5, {})),
      bernoulli("W", lp(0.0, {{"U", 0.4}, {"V", 0.4}})),
      bernoulli("Z", lp(0.4, {{"W", 0.4}})),
      bernoulli("X", lp(0.0, {{"Z", 0.4}, {"V", 0.4}})),
      bernoulli("Y", lp(0.0, {{"X", 0.4}, {"U", 0.4}})),
  };
  s.observed = {"W", "Z", "X", "Y"};
  return s;
}

ScmSpec gauss_eq10(double x_variance, const char* name) {
  ScmSpec s;
  s.name = name;
  s.mechanisms = {
      normal("U", lp(1.0, {}), 1.0),
      normal("V", lp(1.0, {}), 1.0),
      normal("W", lp(1.0, {{"U", 1.0}, {"V", 1.0}}), 1.0),
      normal("Z", lp(1.0, {{"W", 1.0}}), 1.0),
      normal("X", lp(1.0, {{"Z", 1.0}, {"V", 1.0}}), x_variance),
      normal("Y", lp(1.0, {{"X", 1.0}, {"U", 1.0}}), 0.01),
  };
  s.observed = {"W", "Z", "X", "Y"};
  return s;
}

}  // namespace

ScmSpec nongauss_fsd(SpreadReading s_reading) {
  ScmSpec s;
  s.name = s_reading == SpreadReading::Variance ? "nongauss-fsd" : "nongauss-fsd-sd";
  auto z_mean = lp(-1.2, {{"G", 0.4}, {"S", 0.05}});
  with_indicator(z_mean, "W", 2, 0.1);
  with_indicator(z_mean, "W", 3, 0.3);
  auto y_mean = lp(9.3, {{"S", 0.02}, {"G", -0.5}, {"U1", 0.4}});
  with_indicator(y_mean, "X", 1, 0.2);
  with_indicator(y_mean, "X", 2, 0.5);
  s.mechanisms = {
      normal("U1", lp(0.0, {}), 1.0),
      normal("U2", lp(0.0, {}), 1.0),
      normal("U3", lp(0.0, {}), 1.0),
      bernoulli("G", lp(0.5, {})),
      normal("S", lp(36.0, {{"U3", 3.0}}), s_reading == SpreadReading::Variance ? 25.0 : 625.0),
      {"W", Family::Threshold, lp(0.0, {{"U1", 1.0}, {"U2", 1.0}, {"U3", 1.0}}), {}, {-1.1, 1.9},
       ColumnType::ordinal({1, 2, 3})},
      {"Z", Family::BetaLogit, z_mean, lp(2.2, {{"G", 0.2}}), {}, ColumnType::unit_interval()},
      {"X", Family::SequentialLogit, lp(0.0, {{"G", -0.5}, {"S", 0.04}, {"Z", 13.5}, {"U2", 2.0}}), {}, {12.5, 14.0},
       ColumnType::ordinal({0, 1, 2})},
      {"Y", Family::GammaLog, y_mean, {}, {10000.0}, ColumnType::positive()},
  };
  s.observed = {"Y", "X", "Z", "W", "S", "G"};
  return s;
}

ScmSpec builtin_scm(std::string_view key) {
  if (key == "binary-eq9") return binary_eq9();
  if (key == "gauss-eq10") return gauss_eq10(1.0, "gauss-eq10");
  if (key == "gauss-eq10-smallsx") return gauss_eq10(0.01, "gauss-eq10-smallsx");
  if (key == "nongauss-fsd") return nongauss_fsd(SpreadReading::Variance);
  fail(ErrorKind::Input, "unknown model key '" + std::string(key) + "'");
}

std::vector<std::string> builtin_scm_keys() {
  return {"binary-eq9", "gauss-eq10", "gauss-eq10-smallsx", "nongauss-fsd"};
}

// ---------------------------------------------------------------------------
// Simulation

namespace {

struct CompiledTerm {
  std::size_t parent;
  std::optional<int> level;
  double coef;
};

struct CompiledLp {
  double intercept = 0;
  std::vector<CompiledTerm> terms;

  double eval(const std::vector<double>& row) const {
    double out = intercept;
    for (const auto& t : terms) {
      const double v = row[t.parent];
      out += t.coef * (t.level ? (static_cast<int>(v) == *t.level ? 1.0 : 0.0) : v);
    }
    return out;
  }
};

struct CompiledMechanism {
  const Mechanism* source;
  CompiledLp location, precision;
  bool intervened = false;
  double value = 0;
};

class Engine {
 public:
  Engine(const ScmSpec& spec, const std::vector<Intervention>& interventions) : spec_(spec) {
    validate(spec);
    std::map<Vertex, std::size_t> index;
    for (std::size_t k = 0; k < spec.mechanisms.size(); ++k) index.emplace(spec.mechanisms[k].vertex, k);
    for (const auto& m : spec.mechanisms) {
      CompiledMechanism c{&m, compile(m.location, index), compile(m.precision, index)};
      mechs_.push_back(std::move(c));
    }
    for (const auto& iv : interventions) {
      const auto it = index.find(iv.vertex);
      if (it == index.end()) fail(ErrorKind::Input, "intervention on unknown vertex '" + iv.vertex + "'");
      mechs_[it->second].intervened = true;
      mechs_[it->second].value = iv.value;
    }
    row_.assign(mechs_.size(), 0.0);
  }

  std::size_t index_of(const Vertex& v) const {
    for (std::size_t k = 0; k < mechs_.size(); ++k) {
      if (mechs_[k].source->vertex == v) return k;
    }
    fail(ErrorKind::Input, "model '" + spec_.name + "' has no vertex '" + v + "'");
  }

  const std::vector<double>& draw_row(Rng& rng) {
    for (std::size_t k = 0; k < mechs_.size(); ++k) row_[k] = draw(mechs_[k], rng);
    return row_;
  }

 private:
  static CompiledLp compile(const LinearPredictor& lp, const std::map<Vertex, std::size_t>& index) {
    CompiledLp out{lp.intercept, {}};
    for (std::size_t k = 0; k < lp.features.size(); ++k) {
      out.terms.push_back({index.at(lp.features[k].var), lp.features[k].level, lp.coef[k]});
    }
    return out;
  }

  double draw(const CompiledMechanism& c, Rng& rng) {
    if (c.intervened) return c.value;
    const Mechanism& m = *c.source;
    const double loc = c.location.eval(row_);
    switch (m.family) {
      case Family::Normal:
        return loc + std::sqrt(m.params[0]) * std_normal_(rng);
      case Family::BernoulliLinear:
        if (!(loc >= 0.0 && loc <= 1.0)) {
          fail(ErrorKind::Generation, "mechanism '" + m.vertex + "': Bernoulli mean " + format_double(loc) +
                                          " outside [0, 1]");
        }
        return draw_uniform(rng) < loc ? 1.0 : 0.0;
      case Family::Threshold: {
        std::size_t k = 0;
        for (double cut : m.params) {
          if (loc > cut) ++k;
        }
        return m.type.levels[k];
      }
      case Family::BetaLogit: {
        const double mu = logistic(loc);
        const double phi = std::exp(c.precision.eval(row_));
        if (!(mu > 0 && mu < 1) || !(phi > 0) || !std::isfinite(phi)) {
          fail(ErrorKind::Generation, "mechanism '" + m.vertex + "': invalid Beta parameters");
        }
        for (;;) {
          const double v = draw_beta(rng, mu * phi, (1.0 - mu) * phi);
          if (v > 0.0 && v < 1.0) return v;
        }
      }
      case Family::SequentialLogit: {
        std::size_t k = 0;
        while (k < m.params.size() && draw_uniform(rng) < logistic(loc - m.params[k])) ++k;
        return m.type.levels[k];
      }
      case Family::GammaLog: {
        const double mu = std::exp(loc);
        if (!(mu > 0) || !std::isfinite(mu)) {
          fail(ErrorKind::Generation, "mechanism '" + m.vertex + "': Gamma mean not finite");
        }
        return draw_gamma(rng, m.params[0], m.params[0] / mu);
      }
    }
    fail(ErrorKind::Generation, "mechanism '" + m.vertex + "': unsupported family");
  }

  const ScmSpec& spec_;
  std::vector<CompiledMechanism> mechs_;
  std::vector<double> row_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

}  // namespace

Dataset simulate(const ScmSpec& spec, std::size_t n, std::uint64_t seed) {
  if (n < 1) fail(ErrorKind::Input, "simulate: n must be at least 1");
  Engine engine(spec, {});
  std::vector<std::size_t> cols;
  std::vector<ColumnType> types;
  for (const auto& v : spec.observed) {
    cols.push_back(engine.index_of(v));
    types.push_back(spec.mechanism(v).type);
  }
  std::vector<std::vector<double>> columns(cols.size(), std::vector<double>(n));
  Rng rng = make_rng(seed);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& row = engine.draw_row(rng);
    for (std::size_t c = 0; c < cols.size(); ++c) columns[c][r] = row[cols[c]];
  }
  return Dataset(spec.observed, std::move(types), std::move(columns));
}

DistributionSummary summarize_draws(std::vector<double> values) {
  DistributionSummary s;
  s.n = values.size();
  if (values.empty()) fail(ErrorKind::Input, "cannot summarize an empty sample");
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  double m2 = 0, m4 = 0;
  for (double v : values) {
    const double d = (v - s.mean) * (v - s.mean);
    m2 += d;
    m4 += d * d;
  }
  const double nn = static_cast<double>(s.n);
  s.variance = s.n > 1 ? m2 / (nn - 1) : 0.0;
  s.mcse_mean = std::sqrt(s.variance / nn);
  const double pop_var = m2 / nn;
  s.mcse_variance = std::sqrt(std::max(0.0, m4 / nn - pop_var * pop_var) / nn);
  for (double p : {0.025, 0.25, 0.5, 0.75, 0.975}) {
    // type-7 quantile
    const double h = (nn - 1) * p;
    const auto lo = static_cast<std::size_t>(std::floor(h));
    std::nth_element(values.begin(), values.begin() + static_cast<std::ptrdiff_t>(lo), values.end());
    double q = values[lo];
    if (lo + 1 < s.n) {
      const double next = *std::min_element(values.begin() + static_cast<std::ptrdiff_t>(lo) + 1, values.end());
      q += (h - static_cast<double>(lo)) * (next - q);
    }
    s.quantiles.emplace_back(p, q);
    if (p == 0.5) s.median = q;
  }
  return s;
}

DistributionSummary oracle_effect(const ScmSpec& spec, const Intervention& x, std::size_t n_mc, std::uint64_t seed,
                                  const Vertex& outcome) {
  if (n_mc < 1) fail(ErrorKind::Input, "oracle: n_mc must be at least 1");
  if (!spec.has(x.vertex)) fail(ErrorKind::Input, "oracle: no vertex '" + x.vertex + "' to intervene on");
  Engine engine(spec, {x});
  const std::size_t y = engine.index_of(outcome);
  std::vector<double> values(n_mc);
  Rng rng = make_rng(seed);
  for (std::size_t r = 0; r < n_mc; ++r) values[r] = engine.draw_row(rng)[y];
  return summarize_draws(std::move(values));
}

// ---------------------------------------------------------------------------
// Exact enumeration for Bernoulli models

std::size_t BinaryJoint::index_of(const Vertex& v) const {
  const auto it = std::find(names.begin(), names.end(), v);
  if (it == names.end()) fail(ErrorKind::Input, "binary joint has no vertex '" + v + "'");
  return static_cast<std::size_t>(it - names.begin());
}

BinaryJoint binary_joint(const ScmSpec& spec, const std::vector<Intervention>& interventions) {
  validate(spec);
  BinaryJoint out;
  std::map<Vertex, std::size_t> index;
  for (const auto& m : spec.mechanisms) {
    if (m.family != Family::BernoulliLinear) {
      fail(ErrorKind::Input, "exact enumeration needs Bernoulli mechanisms; '" + m.vertex + "' is " +
                                 to_string(m.family));
    }
    index.emplace(m.vertex, out.names.size());
    out.names.push_back(m.vertex);
  }
  const std::size_t k = out.names.size();
  if (k > 20) fail(ErrorKind::Input, "exact enumeration limited to 20 variables");

  std::vector<std::optional<int>> fixed(k);
  for (const auto& iv : interventions) fixed.at(index.at(iv.vertex)) = static_cast<int>(iv.value);

  // rational coefficients once
  struct Exact {
    Rational intercept;
    std::vector<std::pair<std::size_t, Rational>> terms;
  };
  std::vector<Exact> exact;
  for (const auto& m : spec.mechanisms) {
    Exact e{to_rational(m.location.intercept), {}};
    for (std::size_t t = 0; t < m.location.features.size(); ++t) {
      if (m.location.features[t].level) fail(ErrorKind::Input, "exact enumeration does not support indicators");
      e.terms.emplace_back(index.at(m.location.features[t].var), to_rational(m.location.coef[t]));
    }
    exact.push_back(std::move(e));
  }

  std::vector<int> values(k);
  for (std::uint64_t bits = 0; bits < (std::uint64_t{1} << k); ++bits) {
    Rational p = 1;
    for (std::size_t v = 0; v < k && p != 0; ++v) {
      values[v] = static_cast<int>((bits >> v) & 1U);
      if (fixed[v]) {
        if (values[v] != *fixed[v]) p = 0;
        continue;
      }
      Rational mean = exact[v].intercept;
      for (const auto& [parent, coef] : exact[v].terms) mean += coef * values[parent];
      if (mean < 0 || mean > 1) {
        fail(ErrorKind::Generation, "mechanism '" + out.names[v] + "': Bernoulli mean outside [0, 1]");
      }
      p *= values[v] ? mean : Rational(1 - mean);
    }
    if (p != 0) out.atoms.emplace_back(values, p);
  }
  return out;
}

Rational exact_binary_effect(const ScmSpec& spec, const Intervention& x, const Vertex& outcome) {
  const auto joint = binary_joint(spec, {x});
  const std::size_t y = joint.index_of(outcome);
  Rational p = 0;
  for (const auto& [values, mass] : joint.atoms) {
    if (values[y] == 1) p += mass;
  }
  return p;
}

// ---------------------------------------------------------------------------
// Linear-Gaussian algebra

std::size_t GaussianJoint::index_of(const Vertex& v) const {
  const auto it = std::find(names.begin(), names.end(), v);
  if (it == names.end()) fail(ErrorKind::Input, "Gaussian joint has no vertex '" + v + "'");
  return static_cast<std::size_t>(it - names.begin());
}

std::pair<Eigen::VectorXd, double> GaussianJoint::regression(const Vertex& target,
                                                             const std::vector<Vertex>& given) const {
  const auto t = static_cast<Eigen::Index>(index_of(target));
  const auto k = static_cast<Eigen::Index>(given.size());
  Eigen::MatrixXd sgg(k, k);
  Eigen::VectorXd sgt(k), mg(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto gi = static_cast<Eigen::Index>(index_of(given[static_cast<std::size_t>(i)]));
    mg(i) = mean(gi);
    sgt(i) = cov(gi, t);
    for (Eigen::Index j = 0; j < k; ++j) {
      sgg(i, j) = cov(gi, static_cast<Eigen::Index>(index_of(given[static_cast<std::size_t>(j)])));
    }
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  if (k > 0) {
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(sgg);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive() ||
        ldlt.vectorD().minCoeff() <= 1e-12 * std::max(1.0, ldlt.vectorD().maxCoeff())) {
      fail(ErrorKind::Degeneracy, "implied covariance of the regressors of '" + target + "' is singular");
    }
    beta = ldlt.solve(sgt);
  }
  Eigen::VectorXd coef(k + 1);
  coef(0) = mean(t) - beta.dot(mg);
  coef.tail(k) = beta;
  const double resid = cov(t, t) - beta.dot(sgt);
  return {coef, resid};
}

double GaussianJoint::conditional_mean(const Vertex& target, const std::vector<Vertex>& given,
                                       const std::vector<double>& values) const {
  const auto [coef, var] = regression(target, given);
  double out = coef(0);
  for (std::size_t i = 0; i < given.size(); ++i) out += coef(static_cast<Eigen::Index>(i) + 1) * values.at(i);
  return out;
}

GaussianJoint linear_gaussian_joint(const ScmSpec& spec, const std::vector<Intervention>& interventions) {
  validate(spec);
  const auto k = static_cast<Eigen::Index>(spec.mechanisms.size());
  GaussianJoint out;
  std::map<Vertex, Eigen::Index> index;
  for (const auto& m : spec.mechanisms) {
    if (m.family != Family::Normal) {
      fail(ErrorKind::Input, "linear-Gaussian algebra needs Normal mechanisms; '" + m.vertex + "' is " +
                                 to_string(m.family));
    }
    index.emplace(m.vertex, static_cast<Eigen::Index>(out.names.size()));
    out.names.push_back(m.vertex);
  }
  // v = B v + c + e,  e ~ N(0, diag(omega))
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(k, k);
  Eigen::VectorXd c(k), omega(k);
  for (Eigen::Index i = 0; i < k; ++i) {
    const auto& m = spec.mechanisms[static_cast<std::size_t>(i)];
    const auto iv = std::find_if(interventions.begin(), interventions.end(),
                                 [&](const Intervention& x) { return x.vertex == m.vertex; });
    if (iv != interventions.end()) {
      c(i) = iv->value;
      omega(i) = 0.0;
      continue;
    }
    c(i) = m.location.intercept;
    omega(i) = m.params[0];
    for (std::size_t t = 0; t < m.location.features.size(); ++t) {
      if (m.location.features[t].level) fail(ErrorKind::Input, "linear-Gaussian algebra does not support indicators");
      b(i, index.at(m.location.features[t].var)) += m.location.coef[t];
    }
  }
  // B is strictly lower triangular in mechanism order
  const Eigen::MatrixXd a = (Eigen::MatrixXd::Identity(k, k) - b)
                                .triangularView<Eigen::UnitLower>()
                                .solve(Eigen::MatrixXd::Identity(k, k));
  out.mean = a * c;
  out.cov = a * omega.asDiagonal() * a.transpose();
  return out;
}

GaussianObsModel gaussian_true_params(const ScmSpec& spec) {
  const auto joint = linear_gaussian_joint(spec);
  GaussianObsModel m;
  const auto w = joint.index_of("W");
  m.a_w = joint.mean(static_cast<Eigen::Index>(w));
  m.s2_w = joint.cov(static_cast<Eigen::Index>(w), static_cast<Eigen::Index>(w));
  const auto [bx, s2x] = joint.regression("X", {"Z", "W"});
  m.a_x = bx(0);
  m.b_xz = bx(1);
  m.b_xw = bx(2);
  m.s2_x = s2x;
  const auto [by, s2y] = joint.regression("Y", {"X", "Z", "W"});
  m.a_y = by(0);
  m.b_yx = by(1);
  m.b_yz = by(2);
  m.b_yw = by(3);
  m.s2_y = s2y;
  if (!(m.s2_w > 0 && m.s2_x > 0 && m.s2_y > 0)) {
    fail(ErrorKind::Degeneracy, "implied observational model has a nonpositive residual variance");
  }
  return m;
}

AuxSet gaussian_true_aux(const ScmSpec& spec) {
  const auto joint = linear_gaussian_joint(spec);
  AuxSet aux;
  const auto [marg, marg_var] = joint.regression("Z", {});
  aux[{}] = NormalAux{LinearPredictor{marg(0), {}, {}}, marg_var};
  const auto [cond, cond_var] = joint.regression("Z", {"X"});
  aux[{"X"}] = NormalAux{LinearPredictor{cond(0), {{"X", std::nullopt}}, {cond(1)}}, cond_var};
  return aux;
}

}  // namespace trapdoor
