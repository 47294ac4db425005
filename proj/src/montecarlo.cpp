#include "trapdoor/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <map>
#include <numbers>

#include <json.hpp>

#include "trapdoor/error.hpp"
#include "trapdoor/rng.hpp"

namespace trapdoor {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double normal_log_pdf(double v, double mean, double variance) {
  const double d = v - mean;
  return -0.5 * (std::log(2 * std::numbers::pi * variance) + d * d / variance);
}

void check_sizes(const McOptions& o) {
  if (o.N < 1 || o.M < 1) fail(ErrorKind::Input, "Monte Carlo sizes N and M must be at least 1");
}

std::string list_values(const std::vector<double>& v) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(v.size(), 8);
  for (std::size_t k = 0; k < shown; ++k) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%.6g", k ? ", " : "", v[k]);
    out += buf;
  }
  if (shown < v.size()) out += ", ...";
  return out;
}

/// Self-normalizes `log_w` (N x M) within groups of outer draws that share
/// their (z, b) context. Outer draws with different contexts estimate
/// different ratios, so their weights cannot be pooled.
void normalize(WeightedInterventionalSample& s, const std::vector<double>& log_w) {
  std::map<std::vector<double>, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < s.N; ++i) {
    std::vector<double> key{s.z[i]};
    if (!s.b.empty()) key.insert(key.end(), s.b[i].begin(), s.b[i].end());
    groups[std::move(key)].push_back(i);
  }
  s.weights.assign(s.N * s.M, 0.0);
  double global_max = kNegInf;
  for (double l : log_w) global_max = std::max(global_max, l);
  double raw = 0;
  for (const auto& [key, members] : groups) {
    double top = kNegInf;
    for (std::size_t i : members) {
      for (std::size_t j = 0; j < s.M; ++j) top = std::max(top, log_w[i * s.M + j]);
    }
    if (!std::isfinite(top)) {
      std::vector<double> zs;
      for (std::size_t i : members) zs.push_back(s.z[i]);
      fail(ErrorKind::Degeneracy, "all importance weights are zero (effective sample size 0) for trapdoor values z = " +
                                      list_values(zs));
    }
    double total = 0;
    for (std::size_t i : members) {
      for (std::size_t j = 0; j < s.M; ++j) {
        const std::size_t k = i * s.M + j;
        s.weights[k] = std::exp(log_w[k] - top);
        total += s.weights[k];
      }
    }
    raw += total * std::exp(top - global_max);
    const double mass = static_cast<double>(members.size()) / static_cast<double>(s.N);
    for (std::size_t i : members) {
      for (std::size_t j = 0; j < s.M; ++j) s.weights[i * s.M + j] *= mass / total;
    }
  }
  s.raw_log_sum = global_max + std::log(raw);
  if (s.low_ess()) {
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "effective sample size %.1f is below 1%% of N*M = %zu; a trapdoor distribution conditional on x "
                  "usually keeps the weights well behaved",
                  s.ess(), s.N * s.M);
    s.warning = buf;
  }
}

WeightedInterventionalSample empty_sample(const McOptions& o) {
  check_sizes(o);
  WeightedInterventionalSample s;
  s.N = o.N;
  s.M = o.M;
  s.y.resize(o.N * o.M);
  s.z.resize(o.N);
  return s;
}

double weighted_quantile(const WeightedInterventionalSample& s, const std::vector<std::size_t>& order, double p) {
  double acc = 0;
  for (std::size_t k : order) {
    acc += s.weights[k];
    if (acc >= p) return s.y[k];
  }
  return s.y[order.back()];
}

}  // namespace

double WeightedInterventionalSample::ess() const {
  double sq = 0;
  for (double w : weights) sq += w * w;
  return sq > 0 ? 1.0 / sq : 0.0;
}

WeightedInterventionalSample algorithm1(const GaussianObsModel& m, const AuxSet& aux, double x,
                                        const TrapdoorStrategy& st, const McOptions& opts) {
  if (st.kind == TrapdoorStrategy::Kind::Constraint) {
    fail(ErrorKind::Config, "the constraint strategy is only available with the closed-form effect");
  }
  auto s = empty_sample(opts);
  std::vector<double> log_w(s.N * s.M);
  const double sd_w = std::sqrt(m.s2_w), sd_y = std::sqrt(m.s2_y);
  const Context ctx{{"X", x}};
  for (std::size_t i = 0; i < s.N; ++i) {
    Rng rng = make_rng(derive_seed(opts.seed, i));
    const double z = resolve_trapdoor(st, aux, ctx, &rng);
    s.z[i] = z;
    for (std::size_t j = 0; j < s.M; ++j) {
      const double w = draw_normal(rng, m.a_w, sd_w);
      const std::size_t k = i * s.M + j;
      s.y[k] = draw_normal(rng, m.a_y + m.b_yx * x + m.b_yz * z + m.b_yw * w, sd_y);
      log_w[k] = normal_log_pdf(x, m.a_x + m.b_xz * z + m.b_xw * w, m.s2_x);
    }
  }
  normalize(s, log_w);
  return s;
}

WeightedInterventionalSample algorithm1(const BinaryTables& t, int x, const TrapdoorStrategy& st,
                                        const McOptions& opts) {
  const auto z_dist = binary_trapdoor_weights(t, st, x);
  std::vector<double> z_prob;
  for (const auto& [z, p] : z_dist) z_prob.push_back(to_double(p));
  const auto pw = t.w.probability(1, {});
  if (!pw) throw UndefinedCellError("P(W) has no observations", {x});
  const double p_w1 = to_double(*pw);

  auto s = empty_sample(opts);
  std::vector<double> log_w(s.N * s.M);
  for (std::size_t i = 0; i < s.N; ++i) {
    Rng rng = make_rng(derive_seed(opts.seed, i));
    const int z = z_dist.size() == 1 ? z_dist.front().first : z_dist[draw_categorical(rng, z_prob)].first;
    s.z[i] = z;
    for (std::size_t j = 0; j < s.M; ++j) {
      const int w = draw_bernoulli(rng, p_w1) ? 1 : 0;
      const auto px = t.x_given.probability(x, {z, w});
      if (!px) throw UndefinedCellError("P(X | Z, W) undefined", {x, z, w});
      const std::size_t k = i * s.M + j;
      if (*px == 0) {
        log_w[k] = kNegInf;
        s.y[k] = 0;
        continue;
      }
      log_w[k] = std::log(to_double(*px));
      s.y[k] = draw_bernoulli(rng, to_double(*t.y_given.probability(1, {x, z, w}))) ? 1 : 0;
    }
  }
  normalize(s, log_w);
  return s;
}

WeightedInterventionalSample algorithm1(const GlmObsModel& m, int x, const TrapdoorStrategy& st,
                                        const McOptions& opts) {
  if (x < 0 || x > 2) fail(ErrorKind::Input, "treatment level must be 0, 1 or 2");
  if (st.kind == TrapdoorStrategy::Kind::Constraint) {
    fail(ErrorKind::Config, "the constraint strategy is only available with the closed-form effect");
  }
  auto s = empty_sample(opts);
  s.b_names = {"S", "G"};
  s.b.resize(s.N);
  std::vector<double> log_w(s.N * s.M);
  const double sd_s = std::sqrt(m.s.variance);
  const auto draw_w = [&](Rng& rng) { return kSesLevels[draw_categorical(rng, m.p_w)]; };
  for (std::size_t i = 0; i < s.N; ++i) {
    Rng rng = make_rng(derive_seed(opts.seed, i));
    const double g = draw_bernoulli(rng, m.p_g) ? 1.0 : 0.0;
    const double sv = draw_normal(rng, m.s.means[static_cast<std::size_t>(draw_w(rng) - 1)], sd_s);
    const double log_pg = std::log(g > 0 ? m.p_g : 1 - m.p_g);
    const double z = resolve_trapdoor(st, m.z_aux, Context{{"X", x}, {"S", sv}, {"G", g}}, &rng);
    s.z[i] = z;
    s.b[i] = {sv, g};
    for (std::size_t j = 0; j < s.M; ++j) {
      const int w = draw_w(rng);
      const std::size_t k = i * s.M + j;
      const double mu = std::exp(m.y.log_mean(x, w, z, sv, g));
      s.y[k] = draw_gamma(rng, m.y.shape, m.y.shape / mu);
      log_w[k] = m.x.log_prob(x, z, w, sv, g) + m.s.log_density(sv, w) + log_pg;
    }
  }
  normalize(s, log_w);
  return s;
}

double weighted_mean(const WeightedInterventionalSample& s) {
  double out = 0;
  for (std::size_t k = 0; k < s.y.size(); ++k) out += s.weights[k] * s.y[k];
  return out;
}

double mcse(const WeightedInterventionalSample& s) {
  const double mean = weighted_mean(s);
  double acc = 0;
  for (std::size_t k = 0; k < s.y.size(); ++k) {
    const double t = s.weights[k] * (s.y[k] - mean);
    acc += t * t;
  }
  return std::sqrt(acc);
}

std::vector<double> resample(const WeightedInterventionalSample& s, std::size_t k, std::uint64_t seed) {
  if (s.y.empty()) fail(ErrorKind::Input, "cannot resample an empty sample");
  std::vector<double> cum(s.weights.size());
  double acc = 0;
  for (std::size_t i = 0; i < cum.size(); ++i) cum[i] = acc += s.weights[i];
  Rng rng = make_rng(seed);
  std::vector<double> out(k);
  for (auto& v : out) {
    const auto it = std::upper_bound(cum.begin(), cum.end(), draw_uniform(rng) * acc);
    v = s.y[std::min<std::size_t>(static_cast<std::size_t>(it - cum.begin()), cum.size() - 1)];
  }
  return out;
}

// ---------------------------------------------------------------------------
// Posterior

namespace {

template <class SampleAt>
BayesEffect collect(std::size_t draws, std::uint64_t seed, SampleAt&& sample_at) {
  BayesEffect out;
  std::vector<double> predictive;
  double mcse_total = 0;
  out.min_ess = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < draws; ++k) {
    const std::uint64_t draw_seed = derive_seed(seed, k);
    try {
      const auto s = sample_at(k, draw_seed);
      out.draw_means.push_back(weighted_mean(s));
      mcse_total += mcse(s);
      out.min_ess = std::min(out.min_ess, s.ess());
      if (s.low_ess()) ++out.low_ess_draws;
      predictive.push_back(resample(s, 1, derive_seed(draw_seed, 1)).front());
    } catch (const Error& e) {
      fail(e.kind(), "posterior draw " + std::to_string(k) + ": " + e.what());
    }
  }
  out.average_mcse = mcse_total / static_cast<double>(draws);
  out.mean = summarize_draws(out.draw_means);
  out.predictive = summarize_draws(std::move(predictive));
  return out;
}

std::vector<VertexSet> with_strategy_set(std::vector<VertexSet> sets, const TrapdoorStrategy& s) {
  if (s.aux_set() && std::find(sets.begin(), sets.end(), *s.aux_set()) == sets.end()) sets.push_back(*s.aux_set());
  return sets;
}

}  // namespace

BayesEffect bayes_effect(const GaussianPosterior& post, double x, const TrapdoorStrategy& s,
                         const BayesOptions& opts) {
  const std::size_t draws = post.draws.draws();
  if (draws == 0) fail(ErrorKind::Input, "posterior has no draws");
  if (opts.method == EffectMethod::Analytic) {
    BayesEffect out;
    std::vector<double> predictive;
    for (std::size_t k = 0; k < draws; ++k) {
      const auto m = gaussian_model_at(post, k);
      const double mean = effect_gaussian(m, gaussian_aux_at(post, k), x, s);
      Rng rng = make_rng(derive_seed(opts.mc.seed, k));
      out.draw_means.push_back(mean);
      predictive.push_back(draw_normal(rng, mean, std::sqrt(effect_gaussian_variance(m))));
    }
    out.min_ess = 0;
    out.mean = summarize_draws(out.draw_means);
    out.predictive = summarize_draws(std::move(predictive));
    return out;
  }
  return collect(draws, opts.mc.seed, [&](std::size_t k, std::uint64_t seed) {
    return algorithm1(gaussian_model_at(post, k), gaussian_aux_at(post, k), x, s, {opts.mc.N, opts.mc.M, seed});
  });
}

BayesEffect bayes_effect(const GlmPosterior& post, int x, const TrapdoorStrategy& s, const BayesOptions& opts) {
  if (opts.method == EffectMethod::Analytic) {
    fail(ErrorKind::Config, "no closed form exists for this functional; use the Monte Carlo method");
  }
  const std::size_t draws = post.draws.draws();
  if (draws == 0) fail(ErrorKind::Input, "posterior has no draws");
  return collect(draws, opts.mc.seed, [&](std::size_t k, std::uint64_t seed) {
    return algorithm1(glm_model_at(post, k), x, s, {opts.mc.N, opts.mc.M, seed});
  });
}

BayesEffect bayes_effect(const Dataset& data, const FunctionalCatalogEntry& entry, const TrapdoorStrategy& s,
                         double x, const BayesOptions& opts) {
  if (opts.draws < 1) fail(ErrorKind::Input, "need at least one posterior draw");
  const std::uint64_t fit_seed = derive_seed(opts.mc.seed, 0xf17);
  if (entry.kind == EvaluationKind::GaussianClosedForm) {
    const auto sets = with_strategy_set(default_gaussian_aux_sets(), s);
    const auto post = s.kind == TrapdoorStrategy::Kind::Constraint
                          ? draw_gaussian_constrained_posterior(data, opts.draws, opts.burn_in, fit_seed, sets)
                          : draw_gaussian_posterior(data, opts.draws, fit_seed, sets);
    return bayes_effect(post, x, s, opts);
  }
  if (entry.kind == EvaluationKind::MonteCarloRequired && entry.key == "fsd") {
    const int level = static_cast<int>(std::lround(x));
    if (static_cast<double>(level) != x) fail(ErrorKind::Input, "treatment level must be an integer");
    SamplerOptions so;
    so.draws = opts.draws;
    so.burn_in = opts.burn_in;
    so.seed = fit_seed;
    const auto post = draw_glm_posterior(data, so, with_strategy_set(default_glm_aux_sets(), s));
    return bayes_effect(post, level, s, opts);
  }
  fail(ErrorKind::Config, "no Bayesian model family is available for functional '" + entry.key + "'");
}

std::string to_json(const WeightedInterventionalSample& s, double x, const TrapdoorStrategy& strategy,
                    std::uint64_t seed) {
  std::vector<std::size_t> order(s.y.size());
  for (std::size_t k = 0; k < order.size(); ++k) order[k] = k;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.y[a] < s.y[b]; });
  nlohmann::json q = nlohmann::json::object();
  for (double p : {0.025, 0.25, 0.5, 0.75, 0.975}) {
    char key[16];
    std::snprintf(key, sizeof key, "%g", p);
    q[key] = weighted_quantile(s, order, p);
  }
  nlohmann::json j{{"x", x},
                   {"strategy", strategy.to_string()},
                   {"N", s.N},
                   {"M", s.M},
                   {"seed", seed},
                   {"weighted_mean", weighted_mean(s)},
                   {"mcse", mcse(s)},
                   {"ess", s.ess()},
                   {"raw_log_weight_sum", s.raw_log_sum},
                   {"quantiles", q}};
  if (!s.warning.empty()) j["warning"] = s.warning;
  return j.dump(2);
}

}  // namespace trapdoor
