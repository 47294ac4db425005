#pragma once

#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "trapdoor/rng.hpp"
#include "trapdoor/scm.hpp"

namespace testing {

using namespace trapdoor;

inline LinearPredictor lin(double intercept, std::vector<std::pair<std::string, double>> terms) {
  LinearPredictor p;
  p.intercept = intercept;
  for (auto& [v, c] : terms) {
    p.features.push_back({v, std::nullopt});
    p.coef.push_back(c);
  }
  return p;
}

inline Mechanism gauss(const std::string& v, LinearPredictor mean, double variance) {
  return {v, Family::Normal, std::move(mean), {}, {variance}, ColumnType::continuous()};
}

/// Linear-Gaussian trapdoor model on U, V, W, Z, X, Y with U confounding W
/// and Y, V confounding W and X.
struct LinearParams {
  double mu_u = 1, s2_u = 1, mu_v = 1, s2_v = 1;
  double a_w = 1, b_wu = 1, b_wv = 1, s2_w = 1;
  double a_z = 1, b_zw = 1, s2_z = 1;
  double a_x = 1, b_xz = 1, b_xv = 1, s2_x = 1;
  double a_y = 1, b_yx = 1, b_yu = 1, s2_y = 0.01;

  double effect(double x) const { return a_y + b_yu * mu_u + b_yx * x; }
};

inline ScmSpec linear_scm(const LinearParams& p) {
  ScmSpec s;
  s.name = "linear";
  s.mechanisms = {
      gauss("U", lin(p.mu_u, {}), p.s2_u),
      gauss("V", lin(p.mu_v, {}), p.s2_v),
      gauss("W", lin(p.a_w, {{"U", p.b_wu}, {"V", p.b_wv}}), p.s2_w),
      gauss("Z", lin(p.a_z, {{"W", p.b_zw}}), p.s2_z),
      gauss("X", lin(p.a_x, {{"Z", p.b_xz}, {"V", p.b_xv}}), p.s2_x),
      gauss("Y", lin(p.a_y, {{"X", p.b_yx}, {"U", p.b_yu}}), p.s2_y),
  };
  s.observed = {"W", "Z", "X", "Y"};
  return s;
}

inline LinearParams random_linear_params(Rng& rng) {
  auto coef = [&] { return -2.0 + 4.0 * draw_uniform(rng); };
  auto var = [&] { return 0.2 + 2.0 * draw_uniform(rng); };
  LinearParams p;
  p.mu_u = coef(), p.s2_u = var(), p.mu_v = coef(), p.s2_v = var();
  p.a_w = coef(), p.b_wu = coef(), p.b_wv = coef(), p.s2_w = var();
  p.a_z = coef(), p.b_zw = coef(), p.s2_z = var();
  p.a_x = coef(), p.b_xz = coef(), p.b_xv = coef(), p.s2_x = var();
  p.a_y = coef(), p.b_yx = coef(), p.b_yu = coef(), p.s2_y = var();
  return p;
}

/// Rows of a CSV document with RFC 4180 quoting.
inline std::vector<std::vector<std::string>> parse_csv(const std::string& text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string cell;
  bool quoted = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        cell += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cell += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      row.push_back(std::move(cell));
      cell.clear();
    } else if (c == '\n') {
      row.push_back(std::move(cell));
      cell.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      cell += c;
    }
  }
  if (!cell.empty() || !row.empty()) {
    row.push_back(std::move(cell));
    rows.push_back(std::move(row));
  }
  return rows;
}

}  // namespace testing
