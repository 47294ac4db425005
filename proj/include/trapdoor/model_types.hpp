#pragma once

#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "trapdoor/graph.hpp"

namespace trapdoor {

using Rational = boost::multiprecision::cpp_rational;

/// Nearest rational on a 1e-12 grid; 0.4 becomes exactly 2/5.
Rational to_rational(double v);
inline double to_double(const Rational& r) { return r.convert_to<double>(); }

/// Values of named variables at one evaluation point.
class Context {
 public:
  Context() = default;
  Context(std::initializer_list<std::pair<Vertex, double>> values) : values_(values) {}

  void set(const Vertex& name, double value);
  /// Throws a config error when `name` is absent.
  double at(const Vertex& name) const;
  bool has(const Vertex& name) const;

 private:
  std::vector<std::pair<Vertex, double>> values_;
};

/// A regressor: the variable itself, or the indicator I(var == level).
struct Feature {
  Vertex var;
  std::optional<int> level;

  double value(double v) const { return level ? (static_cast<int>(v) == *level ? 1.0 : 0.0) : v; }
  friend bool operator==(const Feature&, const Feature&) = default;
};

struct LinearPredictor {
  double intercept = 0.0;
  std::vector<Feature> features;
  std::vector<double> coef;

  double eval(const Context& ctx) const;
  std::vector<Vertex> variables() const;
};

/// Conditional distribution of one discrete target given discrete
/// conditioning variables, stored as nonnegative masses per cell. Cells with
/// zero total mass are undefined rather than zero.
class FreqTable {
 public:
  FreqTable() = default;
  FreqTable(Vertex target, std::vector<int> target_levels, std::vector<Vertex> given);

  const Vertex& target() const noexcept { return target_; }
  const std::vector<int>& target_levels() const noexcept { return levels_; }
  const std::vector<Vertex>& given() const noexcept { return given_; }

  void add(const std::vector<int>& given_values, int target_value, const Rational& mass);

  Rational mass(const std::vector<int>& given_values, int target_value) const;
  Rational cell_total(const std::vector<int>& given_values) const;
  bool defined(const std::vector<int>& given_values) const { return cell_total(given_values) > 0; }
  std::optional<Rational> probability(int target_value, const std::vector<int>& given_values) const;
  /// Conditioning cells that have been touched, in lexicographic order.
  std::vector<std::vector<int>> cells() const;

 private:
  Vertex target_;
  std::vector<int> levels_;
  std::vector<Vertex> given_;
  std::map<std::vector<int>, std::map<int, Rational>> mass_;
};

/// Trapdoor distributions P(Z | T) for the strategies that need one.
struct NormalAux {
  LinearPredictor mean;
  double variance = 1.0;
};

/// Beta regression: logit link on the mean, log link on the precision.
struct BetaAux {
  LinearPredictor mean;
  double log_precision = 0.0;
};

/// Discrete Z given discrete covariates (the table's `given()`).
struct DiscreteAux {
  FreqTable table;
};

using TrapdoorAux = std::variant<NormalAux, BetaAux, DiscreteAux>;
/// Keyed by conditioning set; the empty set is the marginal.
using AuxSet = std::map<VertexSet, TrapdoorAux>;

/// Observational terms of the binary functional on W, Z, X, Y.
struct BinaryTables {
  FreqTable w;         // P(W)
  FreqTable x_given;   // P(X | Z, W)
  FreqTable y_given;   // P(Y | X, Z, W)
  AuxSet z_aux;        // P(Z), P(Z | X)
};

/// Linear-Gaussian observational model on W, X | Z, W and Y | X, Z, W.
struct GaussianObsModel {
  double a_w = 0, s2_w = 1;
  double a_x = 0, b_xz = 0, b_xw = 0, s2_x = 1;
  double a_y = 0, b_yx = 0, b_yz = 0, b_yw = 0, s2_y = 1;

  friend bool operator==(const GaussianObsModel&, const GaussianObsModel&) = default;
};

/// Ordinal effect as scale times a cumulative simplex; level k (0-based)
/// contributes scale * (simplex[0] + ... + simplex[k-1]).
struct MonotonicEffect {
  double scale = 0.0;
  std::vector<double> simplex;

  double at(std::size_t level_index) const;
};

// Fixed level coding of the education/income schema.
inline constexpr int kTreatmentLevels[] = {0, 1, 2};
inline constexpr int kSesLevels[] = {1, 2, 3};

struct GammaOutcome {
  double intercept = 0, b_s = 0, b_g = 0, b_z = 0;
  MonotonicEffect x, w;
  double shape = 1.0;

  double log_mean(int x_level, int w_level, double z, double s, double g) const;
  double log_density(double y, int x_level, int w_level, double z, double s, double g) const;
};

/// Sequential (continuation-ratio) logit for X on {0,1,2}: level k is passed
/// with probability logistic(eta - thresholds[k]).
struct SequentialTreatment {
  std::vector<double> thresholds{0.0, 0.0};
  double c_z = 0, c_s = 0, c_g = 0, c_w2 = 0, c_w3 = 0;

  double eta(double z, int w_level, double s, double g) const;
  double log_prob(int x_level, double z, int w_level, double s, double g) const;
};

struct NormalByLevel {
  std::vector<double> means{0.0, 0.0, 0.0};  // indexed by W level - 1
  double variance = 1.0;

  double log_density(double s, int w_level) const;
};

/// Fitted terms of the education/income functional.
struct GlmObsModel {
  GammaOutcome y;
  SequentialTreatment x;
  NormalByLevel s;
  double p_g = 0.5;
  std::vector<double> p_w{1.0 / 3, 1.0 / 3, 1.0 / 3};
  AuxSet z_aux;
};

/// Canonical text for a conditioning set: "" or "X,S,G" style, sorted.
std::string set_key(const VertexSet& s);

}  // namespace trapdoor
