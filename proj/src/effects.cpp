#include "trapdoor/effects.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "trapdoor/error.hpp"
#include "trapdoor/fit.hpp"

namespace trapdoor {

const char* to_string(EvaluationKind k) noexcept {
  switch (k) {
    case EvaluationKind::DiscreteSum: return "discrete-sum";
    case EvaluationKind::GaussianClosedForm: return "gaussian-closed-form";
    case EvaluationKind::MonteCarloRequired: return "monte-carlo-required";
    case EvaluationKind::BackdoorGaussian: return "backdoor-gaussian";
  }
  return "unknown";
}

const std::vector<FunctionalCatalogEntry>& functional_catalog() {
  static const std::vector<FunctionalCatalogEntry> entries = [] {
    const std::string ratio = "sum_w P(y|x,z,w) P(x|z,w) P(w) / sum_w P(x|z,w) P(w)";
    const std::string with_b =
        "sum_b P(b) [sum_w P(y|x,z,w,b) P(x|z,w,b) P(b|w) P(w)] / [sum_w P(x|z,w,b) P(b|w) P(w)]";
    return std::vector<FunctionalCatalogEntry>{
        {"fig2c-binary", "fig2c", "X", "Y", {"Z"}, {}, {}, EvaluationKind::DiscreteSum, ratio},
        {"fig2c-gaussian", "fig2c", "X", "Y", {"Z"}, {}, {}, EvaluationKind::GaussianClosedForm, ratio},
        {"fig3a", "fig3a", "X", "Y", {"Z"}, {"B"}, {}, EvaluationKind::MonteCarloRequired, with_b},
        {"fsd", "fsd", "X", "Y", {"Z"}, {"S", "G"}, {}, EvaluationKind::MonteCarloRequired, with_b},
        {"fig2a-backdoor", "fig2a", "X", "Y", {}, {}, {"W"}, EvaluationKind::BackdoorGaussian,
         "sum_w P(y|x,w) P(w)"},
    };
  }();
  return entries;
}

const FunctionalCatalogEntry& catalog_entry(std::string_view key) {
  for (const auto& e : functional_catalog()) {
    if (e.key == key) return e;
  }
  fail(ErrorKind::Input, "unknown functional '" + std::string(key) + "'");
}

EntryCheck verify_entry(const FunctionalCatalogEntry& e) {
  EntryCheck out;
  const auto check = [&](bool cond, const std::string& msg) {
    if (!cond) {
      out.ok = false;
      out.failures.push_back(msg);
    }
  };
  const CausalGraph g = builtin_graph(e.graph_key);
  const auto& v = g.vertices();
  for (const auto& role : {e.intervention, e.outcome}) check(v.count(role) == 1, "role '" + role + "' not in graph");
  for (const auto* set : {&e.trapdoor, &e.covariates, &e.adjustment}) {
    for (const auto& u : *set) check(v.count(u) == 1, "vertex '" + u + "' not in graph");
  }
  if (!out.ok) return out;
  for (const auto& z : e.trapdoor) {
    check(z != e.intervention && z != e.outcome, "trapdoor overlaps treatment or outcome");
    check(e.covariates.count(z) == 0, "trapdoor overlaps covariates");
  }
  if (!e.trapdoor.empty()) {
    const auto anc = g.ancestors({e.intervention});
    for (const auto& z : e.trapdoor) check(z != e.intervention && anc.count(z) == 1, "trapdoor '" + z + "' is not an ancestor of the treatment");
    // no subset of the remaining vertices satisfies the back-door criterion
    std::vector<Vertex> rest;
    for (const auto& u : v) {
      if (u != e.intervention && u != e.outcome) rest.push_back(u);
    }
    for (std::uint32_t mask = 0; mask < (1U << rest.size()); ++mask) {
      VertexSet s;
      for (std::size_t k = 0; k < rest.size(); ++k) {
        if (mask & (1U << k)) s.insert(rest[k]);
      }
      if (is_backdoor_admissible(g, {e.intervention}, {e.outcome}, s)) {
        check(false, "back-door admissible set {" + set_key(s) + "} exists");
        break;
      }
    }
  }
  if (e.kind == EvaluationKind::BackdoorGaussian) {
    check(is_backdoor_admissible(g, {e.intervention}, {e.outcome}, e.adjustment), "adjustment set is not admissible");
  }
  return out;
}

// ---------------------------------------------------------------------------
// Strategies

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  return s;
}

VertexSet parse_set(std::string_view text, std::string_view whole) {
  VertexSet out;
  while (!text.empty()) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    if (item.empty()) fail(ErrorKind::Input, "strategy '" + std::string(whole) + "': empty variable name");
    out.insert(std::string(item));
    if (comma == std::string_view::npos) break;
    text.remove_prefix(comma + 1);
  }
  if (out.empty()) fail(ErrorKind::Input, "strategy '" + std::string(whole) + "' needs conditioning variables");
  return out;
}

}  // namespace

TrapdoorStrategy TrapdoorStrategy::parse(std::string_view text) {
  const auto t = trim(text);
  const auto colon = t.find(':');
  const auto head = t.substr(0, colon);
  const auto tail = colon == std::string_view::npos ? std::string_view{} : t.substr(colon + 1);
  TrapdoorStrategy s;
  const auto no_arg = [&](Kind k) {
    if (colon != std::string_view::npos) fail(ErrorKind::Input, "strategy '" + std::string(t) + "' takes no argument");
    s.kind = k;
  };
  if (head == "fixed") {
    s.kind = Kind::Fixed;
    const std::string arg(trim(tail));
    char* end = nullptr;
    s.value = std::strtod(arg.c_str(), &end);
    if (arg.empty() || end != arg.c_str() + arg.size() || !std::isfinite(s.value)) {
      fail(ErrorKind::Input, "strategy '" + std::string(t) + "': fixed needs a numeric value");
    }
  } else if (head == "marg-mean") {
    no_arg(Kind::MarginalMean);
  } else if (head == "marg-draw") {
    no_arg(Kind::MarginalDraw);
  } else if (head == "constraint") {
    no_arg(Kind::Constraint);
  } else if (head == "cond-mean" || head == "cond-draw") {
    s.kind = head == "cond-mean" ? Kind::ConditionalMean : Kind::ConditionalDraw;
    s.on = parse_set(tail, t);
  } else {
    fail(ErrorKind::Input, "unknown trapdoor strategy '" + std::string(t) + "'");
  }
  return s;
}

std::string TrapdoorStrategy::to_string() const {
  switch (kind) {
    case Kind::Fixed: {
      char buf[40];
      std::snprintf(buf, sizeof buf, "fixed:%.10g", value);
      return buf;
    }
    case Kind::MarginalMean: return "marg-mean";
    case Kind::MarginalDraw: return "marg-draw";
    case Kind::ConditionalMean: return "cond-mean:" + set_key(on);
    case Kind::ConditionalDraw: return "cond-draw:" + set_key(on);
    case Kind::Constraint: return "constraint";
  }
  return "unknown";
}

std::optional<VertexSet> TrapdoorStrategy::aux_set() const {
  switch (kind) {
    case Kind::MarginalMean:
    case Kind::MarginalDraw: return VertexSet{};
    case Kind::ConditionalMean:
    case Kind::ConditionalDraw: return on;
    default: return std::nullopt;
  }
}

// ---------------------------------------------------------------------------
// Binary

BinaryTables binary_tables_from_joint(const BinaryJoint& joint) {
  const auto w = joint.index_of("W"), z = joint.index_of("Z"), x = joint.index_of("X"), y = joint.index_of("Y");
  BinaryTables t;
  t.w = FreqTable("W", {0, 1}, {});
  t.x_given = FreqTable("X", {0, 1}, {"Z", "W"});
  t.y_given = FreqTable("Y", {0, 1}, {"X", "Z", "W"});
  FreqTable z_marg("Z", {0, 1}, {});
  FreqTable z_x("Z", {0, 1}, {"X"});
  for (const auto& [v, p] : joint.atoms) {
    t.w.add({}, v[w], p);
    t.x_given.add({v[z], v[w]}, v[x], p);
    t.y_given.add({v[x], v[z], v[w]}, v[y], p);
    z_marg.add({}, v[z], p);
    z_x.add({v[x]}, v[z], p);
  }
  t.z_aux[{}] = DiscreteAux{std::move(z_marg)};
  t.z_aux[{"X"}] = DiscreteAux{std::move(z_x)};
  return t;
}

Rational effect_binary_fixed_z(const BinaryTables& t, int x, int z) {
  Rational num = 0, den = 0;
  for (int w : t.w.target_levels()) {
    const auto pw = t.w.probability(w, {});
    if (!pw) throw UndefinedCellError("P(W) has no observations", {x, z, w});
    if (*pw == 0) continue;
    if (!t.y_given.defined({x, z, w})) {
      char buf[96];
      std::snprintf(buf, sizeof buf, "no observations with X=%d, Z=%d, W=%d", x, z, w);
      throw UndefinedCellError(buf, {x, z, w});
    }
    const Rational px = *t.x_given.probability(x, {z, w});
    const Rational py = *t.y_given.probability(1, {x, z, w});
    num += py * px * *pw;
    den += px * *pw;
  }
  if (den == 0) throw UndefinedCellError("treatment level never observed", {x, z});
  return num / den;
}

Rational effect_binary_weighted(const BinaryTables& t, int x, const std::vector<std::pair<int, Rational>>& weights) {
  Rational out = 0;
  for (const auto& [z, w] : weights) {
    if (w != 0) out += w * effect_binary_fixed_z(t, x, z);
  }
  return out;
}

std::vector<std::pair<int, Rational>> binary_trapdoor_weights(const BinaryTables& t, const TrapdoorStrategy& s,
                                                              int x) {
  using Kind = TrapdoorStrategy::Kind;
  if (s.kind == Kind::Fixed) {
    if (s.value != 0 && s.value != 1) fail(ErrorKind::Config, "binary trapdoor takes values 0 or 1");
    return {{static_cast<int>(s.value), Rational(1)}};
  }
  if (s.kind != Kind::MarginalDraw && s.kind != Kind::ConditionalDraw) {
    fail(ErrorKind::Config, "strategy '" + s.to_string() + "' is not available for a binary trapdoor");
  }
  const auto it = t.z_aux.find(*s.aux_set());
  if (it == t.z_aux.end()) fail(ErrorKind::Config, "no fitted trapdoor distribution for '" + s.to_string() + "'");
  const auto& table = std::get<DiscreteAux>(it->second).table;
  std::vector<int> cell;
  for (const auto& g : table.given()) {
    if (g != "X") fail(ErrorKind::Config, "binary trapdoor can only condition on X");
    cell.push_back(x);
  }
  std::vector<std::pair<int, Rational>> out;
  for (int z : table.target_levels()) {
    const auto p = table.probability(z, cell);
    if (!p) throw UndefinedCellError("no observations with X=" + std::to_string(x), {x});
    out.emplace_back(z, *p);
  }
  return out;
}

Rational effect_binary(const BinaryTables& t, int x, const TrapdoorStrategy& s) {
  return effect_binary_weighted(t, x, binary_trapdoor_weights(t, s, x));
}

// ---------------------------------------------------------------------------
// Gaussian

namespace {

double adjustment_fraction(const GaussianObsModel& m) {
  return m.b_yw * m.b_xw * m.s2_w / (m.b_xw * m.b_xw * m.s2_w + m.s2_x);
}

}  // namespace

double effect_gaussian_mean(const GaussianObsModel& m, double x, double z) {
  const double den = m.b_xw * m.b_xw * m.s2_w + m.s2_x;
  const double frac = adjustment_fraction(m);
  return m.a_y + m.b_yw * m.s2_x / den * m.a_w - frac * m.a_x + (m.b_yx + frac) * x +
         (m.b_yz - frac * m.b_xz) * z;
}

double effect_gaussian_z_coefficient(const GaussianObsModel& m) { return m.b_yz - adjustment_fraction(m) * m.b_xz; }

double effect_gaussian_variance(const GaussianObsModel& m) {
  const double den = m.b_xw * m.b_xw * m.s2_w + m.s2_x;
  return (m.b_xw * m.b_xw * m.s2_y * m.s2_w + m.s2_x * (m.b_yw * m.b_yw * m.s2_w + m.s2_y)) / den;
}

BackdoorGaussianModel fit_backdoor_gaussian(const Dataset& data) {
  for (const char* v : {"W", "X", "Y"}) {
    if (!data.has_column(v)) fail(ErrorKind::Input, std::string("back-door model needs column '") + v + "'");
  }
  const auto n = static_cast<Eigen::Index>(data.rows());
  const auto col = [&](const char* v) {
    return Eigen::Map<const Eigen::VectorXd>(data.column(v).data(), n);
  };
  const auto w = least_squares(Eigen::MatrixXd(n, 0), col("W"), "W");
  Eigen::MatrixXd d(n, 2);
  d.col(0) = col("X");
  d.col(1) = col("W");
  const auto y = least_squares(d, col("Y"), "Y | X, W");
  const double nn = static_cast<double>(n);
  return {w.coef(0), w.rss / nn, y.coef(0), y.coef(1), y.coef(2), y.rss / nn};
}

NormalSummary effect_backdoor_gaussian(const BackdoorGaussianModel& m, double x) {
  return {m.a_y + m.b_yw * m.a_w + m.b_yx * x, m.s2_y + m.b_yw * m.b_yw * m.s2_w};
}

// ---------------------------------------------------------------------------
// Trapdoor values

namespace {

std::vector<int> discrete_cell(const FreqTable& t, const Context& ctx) {
  std::vector<int> cell;
  for (const auto& g : t.given()) cell.push_back(static_cast<int>(ctx.at(g)));
  return cell;
}

}  // namespace

double aux_mean(const TrapdoorAux& aux, const Context& ctx) {
  if (const auto* n = std::get_if<NormalAux>(&aux)) return n->mean.eval(ctx);
  if (const auto* b = std::get_if<BetaAux>(&aux)) return logistic(b->mean.eval(ctx));
  const auto& t = std::get<DiscreteAux>(aux).table;
  const auto cell = discrete_cell(t, ctx);
  if (!t.defined(cell)) throw UndefinedCellError("trapdoor distribution undefined in this cell", cell);
  Rational m = 0;
  for (int z : t.target_levels()) m += z * *t.probability(z, cell);
  return to_double(m);
}

double aux_draw(const TrapdoorAux& aux, const Context& ctx, Rng& rng) {
  if (const auto* n = std::get_if<NormalAux>(&aux)) return draw_normal(rng, n->mean.eval(ctx), std::sqrt(n->variance));
  if (const auto* b = std::get_if<BetaAux>(&aux)) {
    const double mu = logistic(b->mean.eval(ctx));
    const double phi = std::exp(b->log_precision);
    for (;;) {
      const double z = draw_beta(rng, mu * phi, (1 - mu) * phi);
      if (z > 0 && z < 1) return z;
    }
  }
  const auto& t = std::get<DiscreteAux>(aux).table;
  const auto cell = discrete_cell(t, ctx);
  if (!t.defined(cell)) throw UndefinedCellError("trapdoor distribution undefined in this cell", cell);
  std::vector<double> p;
  for (int z : t.target_levels()) p.push_back(to_double(*t.probability(z, cell)));
  return t.target_levels()[draw_categorical(rng, p)];
}

double resolve_trapdoor(const TrapdoorStrategy& s, const AuxSet& aux, const Context& ctx, Rng* rng) {
  using Kind = TrapdoorStrategy::Kind;
  if (s.kind == Kind::Fixed) return s.value;
  if (s.kind == Kind::Constraint) return 0.0;
  const auto it = aux.find(*s.aux_set());
  if (it == aux.end()) {
    fail(ErrorKind::Config, "strategy '" + s.to_string() + "' needs a fitted trapdoor distribution given {" +
                                set_key(*s.aux_set()) + "}");
  }
  if (!s.is_draw()) return aux_mean(it->second, ctx);
  if (rng == nullptr) fail(ErrorKind::Config, "strategy '" + s.to_string() + "' needs a random stream");
  return aux_draw(it->second, ctx, *rng);
}

double effect_gaussian(const GaussianObsModel& m, const AuxSet& aux, double x, const TrapdoorStrategy& s) {
  using Kind = TrapdoorStrategy::Kind;
  if (s.kind == Kind::Constraint && std::abs(constraint_residual(m)) > 1e-8) {
    fail(ErrorKind::Config, "constraint strategy needs a constrained fit");
  }
  double z = 0;
  if (s.kind == Kind::Fixed) {
    z = s.value;
  } else if (s.kind != Kind::Constraint) {
    const auto it = aux.find(*s.aux_set());
    if (it == aux.end()) fail(ErrorKind::Config, "no fitted trapdoor distribution for '" + s.to_string() + "'");
    z = aux_mean(it->second, Context{{"X", x}});
  }
  return effect_gaussian_mean(m, x, z);
}

}  // namespace trapdoor
