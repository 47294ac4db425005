#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "trapdoor/graph.hpp"
#include "trapdoor/model_types.hpp"
#include "trapdoor/rng.hpp"
#include "trapdoor/scm.hpp"

namespace trapdoor {

enum class EvaluationKind { DiscreteSum, GaussianClosedForm, MonteCarloRequired, BackdoorGaussian };

const char* to_string(EvaluationKind k) noexcept;

/// An identifying functional bound to one of the built-in graphs.
struct FunctionalCatalogEntry {
  std::string key;
  std::string graph_key;
  Vertex intervention;
  Vertex outcome;
  VertexSet trapdoor;
  VertexSet covariates;  // sampled outside the trapdoor (B)
  VertexSet adjustment;  // back-door set, for adjustment entries
  EvaluationKind kind = EvaluationKind::DiscreteSum;
  std::string formula;
};

const std::vector<FunctionalCatalogEntry>& functional_catalog();
const FunctionalCatalogEntry& catalog_entry(std::string_view key);

struct EntryCheck {
  bool ok = true;
  std::vector<std::string> failures;
};

/// Structural checks of an entry against its graph: roles are vertices, the
/// trapdoor is disjoint from treatment and outcome and lies among the
/// treatment's ancestors, trapdoor entries admit no back-door set among the
/// observed vertices, and adjustment entries use an admissible set.
EntryCheck verify_entry(const FunctionalCatalogEntry& e);

struct TrapdoorStrategy {
  enum class Kind { Fixed, MarginalMean, ConditionalMean, MarginalDraw, ConditionalDraw, Constraint };

  Kind kind = Kind::MarginalMean;
  double value = 0.0;  // Fixed
  VertexSet on;        // Conditional*

  /// `fixed:<v>`, `marg-mean`, `cond-mean:X`, `marg-draw`, `cond-draw:X,S,G`, `constraint`.
  static TrapdoorStrategy parse(std::string_view text);
  std::string to_string() const;

  bool is_draw() const noexcept { return kind == Kind::MarginalDraw || kind == Kind::ConditionalDraw; }
  /// Conditioning set of the trapdoor distribution it needs; nullopt for
  /// Fixed and Constraint.
  std::optional<VertexSet> aux_set() const;

  friend bool operator==(const TrapdoorStrategy&, const TrapdoorStrategy&) = default;
};

// ---------------------------------------------------------------------------
// Binary plug-in

/// Frequency tables holding the exact probabilities of a Bernoulli model.
BinaryTables binary_tables_from_joint(const BinaryJoint& joint);

/// P(Y = 1 | do(X = x)) from the plug-in functional at a fixed trapdoor value.
/// Throws UndefinedCellError with (x, z, w) when a needed cell is empty.
Rational effect_binary_fixed_z(const BinaryTables& t, int x, int z);

/// Sum over z of weight(z) times the fixed-z value.
Rational effect_binary_weighted(const BinaryTables& t, int x, const std::vector<std::pair<int, Rational>>& weights);

/// Trapdoor weights for a strategy: a point mass for Fixed, P(Z) for the
/// marginal draw, P(Z | on) for the conditional draw. Mean strategies have no
/// meaning for a binary trapdoor and raise a configuration error.
std::vector<std::pair<int, Rational>> binary_trapdoor_weights(const BinaryTables& t, const TrapdoorStrategy& s,
                                                              int x);

Rational effect_binary(const BinaryTables& t, int x, const TrapdoorStrategy& s);

// ---------------------------------------------------------------------------
// Linear-Gaussian closed forms

double effect_gaussian_mean(const GaussianObsModel& m, double x, double z);
/// Coefficient of z in the closed-form mean.
double effect_gaussian_z_coefficient(const GaussianObsModel& m);
double effect_gaussian_variance(const GaussianObsModel& m);

/// W; Y | X, W for the back-door graph.
struct BackdoorGaussianModel {
  double a_w = 0, s2_w = 1;
  double a_y = 0, b_yx = 0, b_yw = 0, s2_y = 1;
};

BackdoorGaussianModel fit_backdoor_gaussian(const Dataset& data);

struct NormalSummary {
  double mean = 0, variance = 0;
};

NormalSummary effect_backdoor_gaussian(const BackdoorGaussianModel& m, double x);

// ---------------------------------------------------------------------------
// Trapdoor values

double aux_mean(const TrapdoorAux& aux, const Context& ctx);
double aux_draw(const TrapdoorAux& aux, const Context& ctx, Rng& rng);

/// Value of the trapdoor under `s`. Draw strategies need `rng`; Constraint
/// returns 0 since the constrained model carries no trapdoor coefficient.
double resolve_trapdoor(const TrapdoorStrategy& s, const AuxSet& aux, const Context& ctx, Rng* rng = nullptr);

/// Closed-form mean under a strategy. Draw strategies use the mean of the
/// trapdoor distribution, which is exact because the formula is linear in z.
double effect_gaussian(const GaussianObsModel& m, const AuxSet& aux, double x, const TrapdoorStrategy& s);

}  // namespace trapdoor
