#include "trapdoor/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "trapdoor/error.hpp"
#include "trapdoor/fit.hpp"

namespace trapdoor {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_binary_level(double x) { return x == 0.0 || x == 1.0; }

int as_level(double x) {
  const auto v = static_cast<int>(std::lround(x));
  if (static_cast<double>(v) != x) fail(ErrorKind::Input, "treatment value must be an integer level");
  return v;
}

}  // namespace

const char* to_string(EstimatorKind k) noexcept {
  switch (k) {
    case EstimatorKind::Nonparametric: return "nonparametric";
    case EstimatorKind::GaussianAnalytic: return "gaussian-analytic";
    case EstimatorKind::MonteCarlo: return "monte-carlo";
    case EstimatorKind::Bayes: return "bayes";
  }
  return "unknown";
}

EstimatorKind parse_estimator(std::string_view text) {
  for (auto k : {EstimatorKind::Nonparametric, EstimatorKind::GaussianAnalytic, EstimatorKind::MonteCarlo,
                 EstimatorKind::Bayes}) {
    if (text == to_string(k)) return k;
  }
  fail(ErrorKind::Input, "unknown estimator '" + std::string(text) +
                             "' (expected nonparametric, gaussian-analytic, monte-carlo or bayes)");
}

void check_compatible(const FunctionalCatalogEntry& entry, EstimatorKind est, const TrapdoorStrategy& s) {
  using Kind = TrapdoorStrategy::Kind;
  const auto refuse = [&](const std::string& why) {
    fail(ErrorKind::Config, "functional '" + entry.key + "' with estimator '" + to_string(est) + "' and strategy '" +
                                s.to_string() + "': " + why);
  };
  switch (entry.kind) {
    case EvaluationKind::DiscreteSum:
      if (est != EstimatorKind::Nonparametric && est != EstimatorKind::MonteCarlo) {
        refuse("binary functionals use the nonparametric or monte-carlo estimator");
      }
      if (s.kind == Kind::Constraint || s.kind == Kind::MarginalMean || s.kind == Kind::ConditionalMean) {
        refuse("a binary trapdoor takes fixed values or draws");
      }
      if (s.kind == Kind::Fixed && !is_binary_level(s.value)) refuse("a binary trapdoor takes values 0 or 1");
      if (s.kind == Kind::ConditionalDraw && s.on != VertexSet{"X"}) refuse("the binary trapdoor conditions on X only");
      return;
    case EvaluationKind::GaussianClosedForm:
      if (est == EstimatorKind::Nonparametric) refuse("continuous data need a parametric estimator");
      if (s.kind == Kind::Constraint && est != EstimatorKind::GaussianAnalytic) {
        refuse("the constraint strategy only exists for the closed form");
      }
      return;
    case EvaluationKind::MonteCarloRequired:
      if (entry.key != "fsd") refuse("no model family is available for this functional");
      if (est != EstimatorKind::MonteCarlo && est != EstimatorKind::Bayes) {
        refuse("this functional has no closed form; use monte-carlo or bayes");
      }
      if (s.kind == Kind::Constraint) refuse("the constraint strategy only exists for the linear-Gaussian closed form");
      return;
    case EvaluationKind::BackdoorGaussian:
      if (est != EstimatorKind::GaussianAnalytic) refuse("the back-door formula uses the gaussian-analytic estimator");
      return;
  }
}

// ---------------------------------------------------------------------------
// Estimation on one dataset

struct EffectEstimator::Cache {
  std::optional<BinaryTables> tables;
  std::optional<GaussianObsModel> gauss, gauss_constrained;
  std::optional<AuxSet> gauss_aux;
  std::optional<GaussianPosterior> gauss_post, gauss_post_constrained;
  std::optional<GlmObsModel> glm;
  std::optional<GlmPosterior> glm_post;
  std::optional<BackdoorGaussianModel> backdoor;
};

EffectEstimator::EffectEstimator(Dataset data, const FunctionalCatalogEntry& entry, EstimateOptions opts,
                                 const std::vector<TrapdoorStrategy>& planned)
    : data_(std::move(data)), entry_(&entry), opts_(opts), cache_(std::make_unique<Cache>()) {
  aux_sets_ = entry.kind == EvaluationKind::MonteCarloRequired ? default_glm_aux_sets() : default_gaussian_aux_sets();
  for (const auto& s : planned) {
    if (s.aux_set() && std::find(aux_sets_.begin(), aux_sets_.end(), *s.aux_set()) == aux_sets_.end()) {
      aux_sets_.push_back(*s.aux_set());
    }
  }
}

EffectEstimator::~EffectEstimator() = default;
EffectEstimator::EffectEstimator(EffectEstimator&&) noexcept = default;
EffectEstimator& EffectEstimator::operator=(EffectEstimator&&) noexcept = default;

EffectEstimate EffectEstimator::operator()(double x, const TrapdoorStrategy& s, std::uint64_t seed) {
  check_compatible(*entry_, opts_.estimator, s);
  if (s.aux_set() && std::find(aux_sets_.begin(), aux_sets_.end(), *s.aux_set()) == aux_sets_.end()) {
    // an unplanned conditioning set invalidates the fitted trapdoor models
    aux_sets_.push_back(*s.aux_set());
    cache_ = std::make_unique<Cache>();
  }
  auto& c = *cache_;
  const McOptions mc{opts_.N, opts_.M, seed};
  const std::uint64_t posterior_seed = derive_seed(opts_.seed, 0);
  EffectEstimate out;
  const auto from_sample = [&](const WeightedInterventionalSample& w) {
    out.value = weighted_mean(w);
    out.mcse = mcse(w);
    out.ess = w.ess();
    out.warning = w.warning;
  };
  const auto from_bayes = [&](const BayesEffect& b) {
    out.value = b.mean.mean;
    out.posterior_sd = std::sqrt(b.mean.variance);
    out.mcse = b.average_mcse;
    out.ess = b.min_ess;
    out.predictive = b.predictive;
    if (b.low_ess_draws > 0) {
      out.warning = std::to_string(b.low_ess_draws) + " posterior draws had an effective sample size below 1% of N*M";
    }
  };
  BayesOptions bo{mc, opts_.draws, opts_.burn_in, EffectMethod::MonteCarlo};

  switch (entry_->kind) {
    case EvaluationKind::DiscreteSum: {
      if (!c.tables) c.tables = fit_binary_tables(data_, opts_.pseudocount);
      const int level = as_level(x);
      if (!is_binary_level(x)) fail(ErrorKind::Input, "binary treatment takes values 0 or 1");
      if (opts_.estimator == EstimatorKind::Nonparametric) {
        out.value = to_double(effect_binary(*c.tables, level, s));
      } else {
        from_sample(algorithm1(*c.tables, level, s, mc));
      }
      return out;
    }
    case EvaluationKind::GaussianClosedForm: {
      const bool constrained = s.kind == TrapdoorStrategy::Kind::Constraint;
      if (opts_.draws > 0) {
        auto& post = constrained ? c.gauss_post_constrained : c.gauss_post;
        if (!post) {
          post = constrained ? draw_gaussian_constrained_posterior(data_, opts_.draws, opts_.burn_in, posterior_seed,
                                                                   aux_sets_)
                             : draw_gaussian_posterior(data_, opts_.draws, posterior_seed, aux_sets_);
        }
        if (opts_.estimator == EstimatorKind::GaussianAnalytic) bo.method = EffectMethod::Analytic;
        from_bayes(bayes_effect(*post, x, s, bo));
        return out;
      }
      if (opts_.estimator == EstimatorKind::Bayes) fail(ErrorKind::Input, "the bayes estimator needs draws > 0");
      auto& model = constrained ? c.gauss_constrained : c.gauss;
      if (!model) model = constrained ? fit_gaussian_constrained(data_) : fit_gaussian(data_);
      if (!c.gauss_aux) c.gauss_aux = fit_gaussian_aux(data_, aux_sets_);
      if (opts_.estimator == EstimatorKind::GaussianAnalytic) {
        out.value = effect_gaussian(*model, *c.gauss_aux, x, s);
      } else {
        from_sample(algorithm1(*model, *c.gauss_aux, x, s, mc));
      }
      return out;
    }
    case EvaluationKind::MonteCarloRequired: {
      const int level = as_level(x);
      if (opts_.draws > 0) {
        if (!c.glm_post) {
          SamplerOptions so;
          so.draws = opts_.draws;
          so.burn_in = opts_.burn_in;
          so.seed = posterior_seed;
          c.glm_post = draw_glm_posterior(data_, so, aux_sets_);
        }
        from_bayes(bayes_effect(*c.glm_post, level, s, bo));
        return out;
      }
      if (opts_.estimator == EstimatorKind::Bayes) fail(ErrorKind::Input, "the bayes estimator needs draws > 0");
      if (!c.glm) c.glm = fit_glm(data_, aux_sets_);
      from_sample(algorithm1(*c.glm, level, s, mc));
      return out;
    }
    case EvaluationKind::BackdoorGaussian: {
      if (!c.backdoor) c.backdoor = fit_backdoor_gaussian(data_);
      out.value = effect_backdoor_gaussian(*c.backdoor, x).mean;
      return out;
    }
  }
  fail(ErrorKind::Config, "unsupported functional");
}

EffectEstimate estimate_effect(const Dataset& data, const FunctionalCatalogEntry& entry, double x,
                               const TrapdoorStrategy& s, const EstimateOptions& opts) {
  EffectEstimator est(data, entry, opts, {s});
  return est(x, s, derive_seed(opts.seed, 1));
}

const FunctionalCatalogEntry& entry_for_scm(std::string_view scm_key) {
  if (scm_key == "binary-eq9") return catalog_entry("fig2c-binary");
  if (scm_key.starts_with("gauss-eq10")) return catalog_entry("fig2c-gaussian");
  if (scm_key == "nongauss-fsd") return catalog_entry("fsd");
  fail(ErrorKind::Input, "no functional is registered for model '" + std::string(scm_key) + "'");
}

const FunctionalCatalogEntry& entry_for_graph(std::string_view graph_key, const Dataset& data) {
  if (graph_key == "fig2c") {
    const bool binary = std::all_of(data.names().begin(), data.names().end(),
                                    [&](const std::string& v) { return data.type(v).kind == ColumnKind::Binary; });
    return catalog_entry(binary ? "fig2c-binary" : "fig2c-gaussian");
  }
  if (graph_key == "fsd" || graph_key == "fig3b") return catalog_entry("fsd");
  if (graph_key == "fig2a") return catalog_entry("fig2a-backdoor");
  if (graph_key == "fig3a") return catalog_entry("fig3a");
  fail(ErrorKind::Input, "no identifying functional is registered for graph '" + std::string(graph_key) +
                             "' (known: fig2a, fig2c, fig3a, fsd)");
}

// ---------------------------------------------------------------------------
// Configuration

void validate(const ExperimentConfig& cfg) {
  if (cfg.reps < 1) fail(ErrorKind::Input, "replication count must be at least 1");
  if (cfg.x_grid.empty()) fail(ErrorKind::Input, "x grid is empty");
  if (cfg.sample_sizes.empty()) fail(ErrorKind::Input, "no sample sizes given");
  for (auto n : cfg.sample_sizes) {
    if (n < 2) fail(ErrorKind::Input, "sample sizes must be at least 2");
  }
  if (cfg.strategies.empty()) fail(ErrorKind::Input, "no trapdoor strategies given");
  if (cfg.workers < 1) fail(ErrorKind::Input, "worker count must be at least 1");
  validate(builtin_scm(cfg.scm));
  const auto& entry = entry_for_scm(cfg.scm);
  for (const auto& text : cfg.strategies) check_compatible(entry, cfg.estimate.estimator, TrapdoorStrategy::parse(text));
  if (cfg.estimate.estimator == EstimatorKind::Bayes && cfg.estimate.draws == 0) {
    fail(ErrorKind::Input, "the bayes estimator needs draws > 0");
  }
}

std::string to_json(const ExperimentConfig& cfg) {
  const auto& e = cfg.estimate;
  nlohmann::ordered_json j{{"name", cfg.name},
                           {"scm", cfg.scm},
                           {"sample_sizes", cfg.sample_sizes},
                           {"reps", cfg.reps},
                           {"x_grid", cfg.x_grid},
                           {"strategies", cfg.strategies},
                           {"estimator", to_string(e.estimator)},
                           {"N", e.N},
                           {"M", e.M},
                           {"draws", e.draws},
                           {"burn_in", e.burn_in},
                           {"pseudocount", e.pseudocount},
                           {"base_seed", cfg.base_seed},
                           {"workers", cfg.workers},
                           {"oracle_draws", cfg.oracle_draws}};
  return j.dump(2);
}

ExperimentConfig experiment_from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::Input, std::string("experiment config: ") + e.what());
  }
  if (!j.is_object()) fail(ErrorKind::Input, "experiment config must be a JSON object");
  ExperimentConfig c;
  auto& e = c.estimate;
  try {
    for (const auto& [key, v] : j.items()) {
      if (key == "name") c.name = v.get<std::string>();
      else if (key == "scm") c.scm = v.get<std::string>();
      else if (key == "sample_sizes") c.sample_sizes = v.get<std::vector<std::size_t>>();
      else if (key == "reps") c.reps = v.get<std::size_t>();
      else if (key == "x_grid") c.x_grid = v.get<std::vector<double>>();
      else if (key == "strategies") c.strategies = v.get<std::vector<std::string>>();
      else if (key == "estimator") e.estimator = parse_estimator(v.get<std::string>());
      else if (key == "N") e.N = v.get<std::size_t>();
      else if (key == "M") e.M = v.get<std::size_t>();
      else if (key == "draws") e.draws = v.get<std::size_t>();
      else if (key == "burn_in") e.burn_in = v.get<std::size_t>();
      else if (key == "pseudocount") e.pseudocount = v.get<double>();
      else if (key == "base_seed") c.base_seed = v.get<std::uint64_t>();
      else if (key == "workers") c.workers = v.get<std::size_t>();
      else if (key == "oracle_draws") c.oracle_draws = v.get<std::size_t>();
      else fail(ErrorKind::Input, "experiment config: unknown key '" + key + "'");
    }
  } catch (const nlohmann::json::exception& ex) {
    fail(ErrorKind::Input, std::string("experiment config: ") + ex.what());
  }
  return c;
}

// ---------------------------------------------------------------------------
// Truth and summaries

Truth truth_for(const ScmSpec& spec, double x, std::size_t oracle_draws, std::uint64_t seed) {
  const auto all = [&](Family f) {
    return std::all_of(spec.mechanisms.begin(), spec.mechanisms.end(), [f](const Mechanism& m) { return m.family == f; });
  };
  const Intervention iv{"X", x};
  if (all(Family::BernoulliLinear)) return {to_double(exact_binary_effect(spec, iv)), 0.0};
  if (all(Family::Normal)) {
    const auto joint = linear_gaussian_joint(spec, {iv});
    return {joint.mean(static_cast<Eigen::Index>(joint.index_of("Y"))), 0.0};
  }
  const auto d = oracle_effect(spec, iv, oracle_draws, seed);
  return {d.mean, d.mcse_mean};
}

EstimateSummary summarize(const std::vector<double>& est, const Truth& truth) {
  EstimateSummary s;
  s.truth = truth.value;
  s.truth_mcse = truth.mcse;
  s.used = est.size();
  const double k = static_cast<double>(est.size());
  if (est.empty()) {
    s.mean = s.se = s.bias = s.bias_mcse = s.rmse = s.rmse_mcse = kNaN;
    return s;
  }
  double sum = 0, sq_err = 0;
  for (double e : est) {
    sum += e;
    sq_err += (e - truth.value) * (e - truth.value);
  }
  s.mean = sum / k;
  s.bias = s.mean - truth.value;
  s.rmse = std::sqrt(sq_err / k);
  if (est.size() < 2) {
    s.se = s.bias_mcse = s.rmse_mcse = kNaN;
    return s;
  }
  double ss = 0;
  for (double e : est) ss += (e - s.mean) * (e - s.mean);
  s.se = std::sqrt(ss / (k - 1) / k);
  // jackknife over replications
  double jb_mean = 0, jr_mean = 0;
  std::vector<double> jb(est.size()), jr(est.size());
  for (std::size_t i = 0; i < est.size(); ++i) {
    const double e2 = (est[i] - truth.value) * (est[i] - truth.value);
    jb[i] = (sum - est[i]) / (k - 1) - truth.value;
    jr[i] = std::sqrt(std::max(0.0, (sq_err - e2) / (k - 1)));
    jb_mean += jb[i] / k;
    jr_mean += jr[i] / k;
  }
  double vb = 0, vr = 0;
  for (std::size_t i = 0; i < est.size(); ++i) {
    vb += (jb[i] - jb_mean) * (jb[i] - jb_mean);
    vr += (jr[i] - jr_mean) * (jr[i] - jr_mean);
  }
  s.bias_mcse = std::sqrt((k - 1) / k * vb);
  s.rmse_mcse = std::sqrt((k - 1) / k * vr);
  return s;
}

// ---------------------------------------------------------------------------
// Running

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  const auto spec = builtin_scm(cfg.scm);
  const auto& entry = entry_for_scm(cfg.scm);
  std::vector<TrapdoorStrategy> strategies;
  for (const auto& t : cfg.strategies) strategies.push_back(TrapdoorStrategy::parse(t));

  std::vector<Truth> truths;
  for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
    truths.push_back(truth_for(spec, cfg.x_grid[xi], cfg.oracle_draws, derive_seed(cfg.base_seed, 0x5eed0 + xi)));
  }

  struct Task {
    std::size_t n, rep;
  };
  std::vector<Task> tasks;
  for (auto n : cfg.sample_sizes) {
    for (std::size_t r = 0; r < cfg.reps; ++r) tasks.push_back({n, r});
  }
  std::vector<std::vector<ReplicationRecord>> results(tasks.size());

  const auto run_task = [&](const Task& t) {
    const std::uint64_t rep_seed = cfg.base_seed + t.rep;
    const std::uint64_t data_seed = derive_seed(rep_seed, t.n);
    std::vector<ReplicationRecord> out;
    std::optional<EffectEstimator> est;
    std::string data_error, data_status;
    try {
      EstimateOptions eo = cfg.estimate;
      eo.seed = derive_seed(data_seed, 1);
      est.emplace(simulate(spec, t.n, data_seed), entry, eo, strategies);
    } catch (const Error& e) {
      data_status = to_string(e.kind());
      data_error = e.what();
    }
    for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
      for (std::size_t si = 0; si < strategies.size(); ++si) {
        ReplicationRecord rec{t.n, t.rep, rep_seed, cfg.x_grid[xi], strategies[si].to_string(), "ok", 0, 0, ""};
        if (!est) {
          rec.status = data_status;
          rec.message = data_error;
        } else {
          try {
            const auto e = (*est)(cfg.x_grid[xi], strategies[si], derive_seed(data_seed, 2 + xi * strategies.size() + si));
            rec.estimate = e.value;
            rec.mcse = e.mcse;
          } catch (const Error& e) {
            rec.status = to_string(e.kind());
            rec.message = e.what();
          } catch (const std::exception& e) {
            rec.status = "error";
            rec.message = e.what();
          }
        }
        out.push_back(std::move(rec));
      }
    }
    return out;
  };

  std::atomic<std::size_t> next{0};
  const auto worker = [&] {
    for (std::size_t k = next++; k < tasks.size(); k = next++) results[k] = run_task(tasks[k]);
  };
  const std::size_t n_threads = std::min(cfg.workers, tasks.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t k = 0; k < n_threads; ++k) pool.emplace_back(worker);
  }

  std::map<std::size_t, std::size_t> failed_reps;
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    failed_reps[tasks[k].n] += std::any_of(results[k].begin(), results[k].end(),
                                           [](const ReplicationRecord& r) { return r.status != "ok"; });
  }
  ExperimentResult res;
  res.config = cfg;
  for (auto& r : results) {
    for (auto& rec : r) res.records.push_back(std::move(rec));
  }

  for (auto n : cfg.sample_sizes) {
    for (std::size_t xi = 0; xi < cfg.x_grid.size(); ++xi) {
      for (const auto& st : strategies) {
        const auto key = st.to_string();
        std::vector<double> est;
        double mcse_sum = 0;
        std::size_t discarded = 0;
        for (const auto& rec : res.records) {
          if (rec.n != n || rec.x != cfg.x_grid[xi] || rec.strategy != key) continue;
          if (rec.status == "ok") {
            est.push_back(rec.estimate);
            mcse_sum += rec.mcse;
          } else {
            ++discarded;
          }
        }
        auto s = summarize(est, truths[xi]);
        s.n = n;
        s.x = cfg.x_grid[xi];
        s.strategy = key;
        s.discarded = discarded;
        s.discard_fraction = static_cast<double>(discarded) / static_cast<double>(cfg.reps);
        s.replication_discard_fraction = static_cast<double>(failed_reps[n]) / static_cast<double>(cfg.reps);
        s.average_mcse = est.empty() ? kNaN : mcse_sum / static_cast<double>(est.size());
        res.summary.push_back(std::move(s));
      }
    }
  }
  return res;
}

const EstimateSummary& ExperimentResult::at(std::size_t n, double x, const std::string& strategy) const {
  const auto key = TrapdoorStrategy::parse(strategy).to_string();
  for (const auto& s : summary) {
    if (s.n == n && s.x == x && s.strategy == key) return s;
  }
  fail(ErrorKind::Input, "no summary cell for n=" + std::to_string(n) + ", strategy " + strategy);
}

namespace {

std::string num(double v) { return std::isfinite(v) ? format_double(v) : "NA"; }

std::string quoted(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c == '\n' ? ' ' : c;
  }
  return out + "\"";
}

}  // namespace

std::string ExperimentResult::records_csv() const {
  std::ostringstream os;
  os << "n,rep,seed,x,strategy,status,estimate,mcse,message\n";
  for (const auto& r : records) {
    os << r.n << ',' << r.rep << ',' << r.seed << ',' << num(r.x) << ',' << quoted(r.strategy) << ',' << r.status
       << ',' << (r.status == "ok" ? num(r.estimate) : "NA") << ',' << (r.status == "ok" ? num(r.mcse) : "NA") << ','
       << quoted(r.message) << '\n';
  }
  return os.str();
}

std::string ExperimentResult::summary_csv() const {
  std::ostringstream os;
  os << "n,x,strategy,truth,truth_mcse,used,discarded,discard_fraction,replication_discard_fraction,mean,se,bias,"
        "bias_mcse,rmse,rmse_mcse,average_mcse\n";
  for (const auto& s : summary) {
    os << s.n << ',' << num(s.x) << ',' << quoted(s.strategy) << ',' << num(s.truth) << ',' << num(s.truth_mcse)
       << ',' << s.used << ',' << s.discarded << ',' << num(s.discard_fraction) << ','
       << num(s.replication_discard_fraction) << ',' << num(s.mean) << ',' << num(s.se) << ',' << num(s.bias) << ','
       << num(s.bias_mcse) << ',' << num(s.rmse) << ',' << num(s.rmse_mcse) << ',' << num(s.average_mcse) << '\n';
  }
  return os.str();
}

std::string ExperimentResult::summary_json() const {
  const auto val = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& s : summary) {
    rows.push_back({{"n", s.n},
                    {"x", s.x},
                    {"strategy", s.strategy},
                    {"truth", val(s.truth)},
                    {"truth_mcse", val(s.truth_mcse)},
                    {"used", s.used},
                    {"discarded", s.discarded},
                    {"discard_fraction", val(s.discard_fraction)},
                    {"replication_discard_fraction", val(s.replication_discard_fraction)},
                    {"mean", val(s.mean)},
                    {"se", val(s.se)},
                    {"bias", val(s.bias)},
                    {"bias_mcse", val(s.bias_mcse)},
                    {"rmse", val(s.rmse)},
                    {"rmse_mcse", val(s.rmse_mcse)},
                    {"average_mcse", val(s.average_mcse)}});
  }
  nlohmann::ordered_json j{{"config", nlohmann::json::parse(to_json(config))}, {"summary", rows}};
  return j.dump(2);
}

void write_outputs(const ExperimentResult& r, const std::string& dir) {
  namespace fs = std::filesystem;
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) fail(ErrorKind::Io, "cannot create directory '" + dir + "': " + ec.message());
  const auto put = [&](const std::string& name, const std::string& text) {
    const auto path = fs::path(dir) / name;
    std::ofstream f(path, std::ios::binary);
    f << text;
    if (!f) fail(ErrorKind::Io, "cannot write '" + path.string() + "'");
  };
  put(r.config.name + "-config.json", to_json(r.config) + "\n");
  put(r.config.name + "-replications.csv", r.records_csv());
  put(r.config.name + "-summary.csv", r.summary_csv());
}

// ---------------------------------------------------------------------------
// Recipes

std::vector<std::string> recipe_names() {
  return {"repro:fig-bernoulli", "repro:fig-gaussian", "repro:sec4.3", "repro:table1"};
}

ExperimentConfig recipe(std::string_view name) {
  ExperimentConfig c;
  if (name == "repro:fig-bernoulli") {
    c.name = "fig-bernoulli";
    c.scm = "binary-eq9";
    c.sample_sizes = {100, 300, 500};
    c.reps = 2000;
    c.x_grid = {0, 1};
    c.strategies = {"fixed:0", "fixed:1", "marg-draw", "cond-draw:X"};
    c.estimate.estimator = EstimatorKind::Nonparametric;
    return c;
  }
  if (name == "repro:fig-gaussian") {
    c.name = "fig-gaussian";
    c.scm = "gauss-eq10";
    c.sample_sizes = {100, 500};
    c.reps = 200;
    c.x_grid = {0, 3, 6, 9};
    c.strategies = {"fixed:0", "marg-mean", "cond-mean:X", "constraint"};
    c.estimate.estimator = EstimatorKind::GaussianAnalytic;
    c.estimate.draws = 2000;
    c.estimate.burn_in = 1000;
    return c;
  }
  if (name == "repro:table1") {
    c.name = "table1";
    c.scm = "nongauss-fsd";
    c.sample_sizes = {500};
    c.reps = 100;
    c.x_grid = {0, 1, 2};
    c.strategies = {"cond-draw:G,S,X", "cond-draw:X", "cond-draw:G,S", "marg-draw"};
    c.estimate.estimator = EstimatorKind::Bayes;
    c.estimate.N = 50;
    c.estimate.M = 50;
    c.estimate.draws = 200;
    c.estimate.burn_in = 300;
    c.oracle_draws = 2'000'000;
    return c;
  }
  if (name == "repro:sec4.3") {
    fail(ErrorKind::Input, "repro:sec4.3 is a single-dataset study, not a replication grid");
  }
  fail(ErrorKind::Input, "unknown recipe '" + std::string(name) + "'");
}

std::vector<McVsAnalyticRow> run_mc_vs_analytic(const McVsAnalyticOptions& o) {
  const auto data = simulate(builtin_scm("gauss-eq10-smallsx"), o.n, o.seed);
  const auto post = draw_gaussian_posterior(data, o.draws, derive_seed(o.seed, 1));
  std::vector<McVsAnalyticRow> rows;
  for (const auto method : {EffectMethod::Analytic, EffectMethod::MonteCarlo}) {
    for (const char* text : {"cond-mean:X", "marg-mean"}) {
      BayesOptions bo{{o.N, o.M, derive_seed(o.seed, 2)}, o.draws, 0, method};
      rows.push_back({method == EffectMethod::Analytic ? "analytic" : "monte-carlo", text,
                      bayes_effect(post, o.x, TrapdoorStrategy::parse(text), bo)});
    }
  }
  return rows;
}

std::string mc_vs_analytic_csv(const std::vector<McVsAnalyticRow>& rows) {
  std::ostringstream os;
  os << "method,strategy,posterior_mean,posterior_sd,q025,q975,predictive_mean,predictive_sd,average_mcse,min_ess\n";
  for (const auto& r : rows) {
    const auto& m = r.effect.mean;
    os << r.method << ',' << r.strategy << ',' << num(m.mean) << ',' << num(std::sqrt(m.variance)) << ','
       << num(m.quantiles.front().second) << ',' << num(m.quantiles.back().second) << ','
       << num(r.effect.predictive.mean) << ',' << num(std::sqrt(r.effect.predictive.variance)) << ','
       << num(r.effect.average_mcse) << ',' << num(r.effect.min_ess) << '\n';
  }
  return os.str();
}

}  // namespace trapdoor
