#include "trapdoor/model_types.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "trapdoor/error.hpp"
#include "trapdoor/rng.hpp"

namespace trapdoor {

Rational to_rational(double v) {
  if (!std::isfinite(v)) fail(ErrorKind::Input, "cannot represent a non-finite value as a rational");
  const double scaled = std::round(v * 1e12);
  using boost::multiprecision::cpp_int;
  return Rational(cpp_int(static_cast<long long>(scaled)), cpp_int(1'000'000'000'000LL));
}

void Context::set(const Vertex& name, double value) {
  for (auto& [k, v] : values_) {
    if (k == name) {
      v = value;
      return;
    }
  }
  values_.emplace_back(name, value);
}

double Context::at(const Vertex& name) const {
  for (const auto& [k, v] : values_) {
    if (k == name) return v;
  }
  fail(ErrorKind::Config, "no value available for '" + name + "'");
}

bool Context::has(const Vertex& name) const {
  for (const auto& kv : values_) {
    if (kv.first == name) return true;
  }
  return false;
}

double LinearPredictor::eval(const Context& ctx) const {
  double out = intercept;
  for (std::size_t k = 0; k < features.size(); ++k) out += coef[k] * features[k].value(ctx.at(features[k].var));
  return out;
}

std::vector<Vertex> LinearPredictor::variables() const {
  std::vector<Vertex> out;
  for (const auto& f : features) {
    if (std::find(out.begin(), out.end(), f.var) == out.end()) out.push_back(f.var);
  }
  return out;
}

FreqTable::FreqTable(Vertex target, std::vector<int> target_levels, std::vector<Vertex> given)
    : target_(std::move(target)), levels_(std::move(target_levels)), given_(std::move(given)) {}

void FreqTable::add(const std::vector<int>& given_values, int target_value, const Rational& mass) {
  if (given_values.size() != given_.size()) fail(ErrorKind::Input, "frequency table: conditioning arity mismatch");
  if (std::find(levels_.begin(), levels_.end(), target_value) == levels_.end()) {
    fail(ErrorKind::Input, "frequency table: level " + std::to_string(target_value) + " not declared for '" +
                               target_ + "'");
  }
  if (mass < 0) fail(ErrorKind::Input, "frequency table: negative mass");
  mass_[given_values][target_value] += mass;
}

Rational FreqTable::mass(const std::vector<int>& given_values, int target_value) const {
  const auto cell = mass_.find(given_values);
  if (cell == mass_.end()) return 0;
  const auto it = cell->second.find(target_value);
  return it == cell->second.end() ? Rational(0) : it->second;
}

Rational FreqTable::cell_total(const std::vector<int>& given_values) const {
  const auto cell = mass_.find(given_values);
  Rational total = 0;
  if (cell == mass_.end()) return total;
  for (const auto& [level, m] : cell->second) total += m;
  return total;
}

std::optional<Rational> FreqTable::probability(int target_value, const std::vector<int>& given_values) const {
  const Rational total = cell_total(given_values);
  if (total == 0) return std::nullopt;
  return mass(given_values, target_value) / total;
}

std::vector<std::vector<int>> FreqTable::cells() const {
  std::vector<std::vector<int>> out;
  for (const auto& kv : mass_) out.push_back(kv.first);
  return out;
}

double MonotonicEffect::at(std::size_t level_index) const {
  double cum = 0.0;
  for (std::size_t i = 0; i < level_index && i < simplex.size(); ++i) cum += simplex[i];
  return scale * cum;
}

double GammaOutcome::log_mean(int x_level, int w_level, double z, double s, double g) const {
  return intercept + b_s * s + b_g * g + b_z * z + x.at(static_cast<std::size_t>(x_level)) +
         w.at(static_cast<std::size_t>(w_level - 1));
}

double GammaOutcome::log_density(double y, int x_level, int w_level, double z, double s, double g) const {
  const double lm = log_mean(x_level, w_level, z, s, g);
  const double log_rate = std::log(shape) - lm;
  return shape * log_rate - std::lgamma(shape) + (shape - 1.0) * std::log(y) - std::exp(log_rate) * y;
}

double SequentialTreatment::eta(double z, int w_level, double s, double g) const {
  return c_z * z + c_s * s + c_g * g + (w_level == 2 ? c_w2 : 0.0) + (w_level == 3 ? c_w3 : 0.0);
}

double SequentialTreatment::log_prob(int x_level, double z, int w_level, double s, double g) const {
  const double e = eta(z, w_level, s, g);
  double out = 0.0;
  for (int k = 0; k < static_cast<int>(thresholds.size()); ++k) {
    const double t = e - thresholds[static_cast<std::size_t>(k)];
    if (k < x_level) {
      out += log_logistic(t);
    } else {
      out += log_logistic(-t);
      break;
    }
  }
  return out;
}

double NormalByLevel::log_density(double s, int w_level) const {
  const double d = s - means[static_cast<std::size_t>(w_level - 1)];
  return -0.5 * (std::log(2.0 * std::numbers::pi * variance) + d * d / variance);
}

std::string set_key(const VertexSet& s) {
  std::string out;
  for (const auto& v : s) {
    if (!out.empty()) out += ',';
    out += v;
  }
  return out;
}

}  // namespace trapdoor
