#include <doctest.h>

#include <cmath>

#include "support.hpp"
#include "trapdoor/error.hpp"
#include "trapdoor/fit.hpp"
#include "trapdoor/scm.hpp"

using namespace trapdoor;
using testing::LinearParams;

namespace {

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Eigen::MatrixXd columns(const Dataset& d, const std::vector<std::string>& names) {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(d.rows()), static_cast<Eigen::Index>(names.size()));
  for (std::size_t j = 0; j < names.size(); ++j) {
    const auto& c = d.column(names[j]);
    for (std::size_t i = 0; i < c.size(); ++i) m(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = c[i];
  }
  return m;
}

Eigen::VectorXd column(const Dataset& d, const std::string& name) {
  const auto& c = d.column(name);
  return Eigen::Map<const Eigen::VectorXd>(c.data(), static_cast<Eigen::Index>(c.size()));
}

/// Coefficient standard errors of an OLS fit.
Eigen::VectorXd standard_errors(const LinearFit& f) {
  const double s2 = f.rss / static_cast<double>(f.n - static_cast<std::size_t>(f.coef.size()));
  return (s2 * f.xtx_inv.diagonal().array()).sqrt();
}

// Exact P(Y = 1 | do(X = x)) for the Bernoulli model by summing over the
// sixteen (V, U, W, Z) configurations, written out from the mechanisms.
Rational enumerate_binary_effect(int x) {
  const Rational h(1, 2), k(2, 5);
  auto bern = [](const Rational& p, int v) { return v == 1 ? p : 1 - p; };
  Rational total = 0;
  for (int v = 0; v < 2; ++v) {
    for (int u = 0; u < 2; ++u) {
      for (int w = 0; w < 2; ++w) {
        for (int z = 0; z < 2; ++z) {
          const Rational p = bern(h, v) * bern(h, u) * bern(k * u + k * v, w) * bern(k + k * w, z);
          total += p * (k * x + k * u);
        }
      }
    }
  }
  return total;
}

}  // namespace

TEST_SUITE("scm") {
  TEST_CASE("built-in models validate and round-trip through JSON") {
    for (const auto& key : builtin_scm_keys()) {
      const auto spec = builtin_scm(key);
      CHECK_NOTHROW(validate(spec));
      const auto back = scm_from_json(to_json(spec));
      CHECK(to_json(back) == to_json(spec));
    }
    CHECK_THROWS_AS(builtin_scm("nope"), Error);
  }

  TEST_CASE("simulation is deterministic and prefix-stable") {
    for (const auto& key : builtin_scm_keys()) {
      const auto spec = builtin_scm(key);
      CHECK(simulate(spec, 1, 99).to_csv() == simulate(spec, 1, 99).to_csv());
      CHECK(simulate(spec, 1, 99).to_csv() != simulate(spec, 1, 100).to_csv());
      const auto big = simulate(spec, 50, 5);
      const auto small = simulate(spec, 10, 5);
      for (const auto& name : small.names()) {
        const auto& a = small.column(name);
        const auto& b = big.column(name);
        CHECK(std::equal(a.begin(), a.end(), b.begin()));
      }
    }
    CHECK_THROWS_AS(simulate(builtin_scm("gauss-eq10"), 0, 1), Error);
  }

  TEST_CASE("observed columns and types") {
    const auto d = simulate(builtin_scm("nongauss-fsd"), 2000, 3);
    CHECK(d.type("X").levels == std::vector<int>{0, 1, 2});
    CHECK(d.type("W").levels == std::vector<int>{1, 2, 3});
    for (double z : d.column("Z")) CHECK((z > 0 && z < 1));
    for (double y : d.column("Y")) CHECK(y > 0);
    CHECK_FALSE(d.has_column("U1"));
  }

  TEST_CASE("simulated moments match the mechanisms") {
    const auto b = simulate(builtin_scm("binary-eq9"), 1'000'000, 11);
    CHECK(std::abs(mean_of(b.column("W")) - 0.4) < 0.002);
    const auto g = simulate(builtin_scm("gauss-eq10"), 1'000'000, 12);
    CHECK(std::abs(mean_of(g.column("X")) - 6.0) < 0.01);
  }

  TEST_CASE("out-of-range Bernoulli mean is a generation error naming the mechanism") {
    ScmSpec s;
    s.name = "bad";
    s.mechanisms = {
        {"A", Family::BernoulliLinear, testing::lin(0.5, {}), {}, {}, ColumnType::binary()},
        {"B", Family::BernoulliLinear, testing::lin(0.8, {{"A", 0.4}}), {}, {}, ColumnType::binary()},
    };
    s.observed = {"A", "B"};
    try {
      (void)simulate(s, 200, 1);
      FAIL("expected a generation error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Generation);
      CHECK(std::string(e.what()).find("'B'") != std::string::npos);
    }
  }

  TEST_CASE("Bernoulli model: exact enumeration") {
    const auto spec = builtin_scm("binary-eq9");
    CHECK(exact_binary_effect(spec, {"X", 1}) == Rational(3, 5));
    CHECK(exact_binary_effect(spec, {"X", 0}) == Rational(1, 5));
    CHECK(exact_binary_effect(spec, {"X", 1}) == enumerate_binary_effect(1));
    CHECK(exact_binary_effect(spec, {"X", 0}) == enumerate_binary_effect(0));
    const auto joint = binary_joint(spec);
    CHECK(joint.atoms.size() <= 64);
    Rational total = 0;
    for (const auto& [v, p] : joint.atoms) total += p;
    CHECK(total == 1);
  }

  TEST_CASE("Bernoulli oracle") {
    const auto spec = builtin_scm("binary-eq9");
    const auto d = oracle_effect(spec, {"X", 1}, 1'000'000, 4);
    CHECK(std::abs(d.mean - 0.6) < 0.002);
  }

  TEST_CASE("Gaussian oracle matches the closed form") {
    const auto d = oracle_effect(builtin_scm("gauss-eq10"), {"X", 3}, 1'000'000, 8);
    CHECK(std::abs(d.mean - 5.0) < 3 * d.mcse_mean);

    Rng rng = make_rng(31);
    for (int r = 0; r < 5; ++r) {
      const auto p = testing::random_linear_params(rng);
      const double x = -3 + 6 * draw_uniform(rng);
      const auto o = oracle_effect(testing::linear_scm(p), {"X", x}, 200'000, derive_seed(31, r));
      INFO("parameterization ", r, " x=", x);
      CHECK(std::abs(o.mean - p.effect(x)) < 3 * o.mcse_mean);
    }
  }

  TEST_CASE("interventional variance") {
    const LinearParams p;  // unit parameters
    const double oracle_form = p.b_yu * p.b_yu * p.s2_u + p.s2_y;
    const double printed = p.b_yu * p.b_yu * p.s2_u - 2 * p.b_wu * p.b_zw * p.b_xz * p.b_yx * p.b_yu * p.s2_u + p.s2_y;
    MESSAGE("printed interventional variance expression evaluates to ", printed, "; simulation oracle targets ",
            oracle_form);
    CHECK(printed == doctest::Approx(-0.99));
    const auto d = oracle_effect(builtin_scm("gauss-eq10"), {"X", 2}, 1'000'000, 77);
    CHECK(std::abs(d.variance - oracle_form) < 3 * d.mcse_variance);
    CHECK(std::abs(d.variance - printed) > 100 * d.mcse_variance);
  }

  TEST_CASE("implied joint moments") {
    const auto j = linear_gaussian_joint(builtin_scm("gauss-eq10"));
    // By hand: E(Z) = 4, E(X) = 6, Var(X) = 8, Cov(Z, X) = 5.
    CHECK(j.mean(static_cast<Eigen::Index>(j.index_of("Z"))) == doctest::Approx(4.0).epsilon(1e-12));
    CHECK(j.mean(static_cast<Eigen::Index>(j.index_of("X"))) == doctest::Approx(6.0).epsilon(1e-12));
    for (double x : {0.0, 3.0, 6.0, 9.0}) {
      const double by_hand = 4.0 + 5.0 / 8.0 * (x - 6.0);
      CHECK(j.conditional_mean("Z", {"X"}, {x}) == doctest::Approx(by_hand).epsilon(1e-12));
    }
    CHECK(std::abs(j.conditional_mean("Z", {"X"}, {3}) - 2.1255) < 1e-3);
  }

  TEST_CASE("observational parameters implied by the model") {
    const auto m = gaussian_true_params(builtin_scm("gauss-eq10"));
    CHECK(m.b_xz == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(m.s2_w == doctest::Approx(3.0).epsilon(1e-12));

    LinearParams p;
    p.b_wu = p.b_wv = 0;
    p.a_w = 0.7;
    p.s2_w = 1.3;
    const auto n = gaussian_true_params(testing::linear_scm(p));
    CHECK(n.a_w == doctest::Approx(0.7).epsilon(1e-12));
    CHECK(n.s2_w == doctest::Approx(1.3).epsilon(1e-12));
    CHECK(std::abs(n.b_yw) < 1e-12);
  }

  TEST_CASE("implied parameters agree with least squares on large samples") {
    Rng rng = make_rng(2718);
    int outside = 0, total = 0;
    for (int r = 0; r < 20; ++r) {
      const auto p = testing::random_linear_params(rng);
      const auto spec = testing::linear_scm(p);
      const auto truth = gaussian_true_params(spec);
      const auto d = simulate(spec, 1'000'000, derive_seed(2718, r));
      const auto fx = least_squares(columns(d, {"Z", "W"}), column(d, "X"), "X");
      const auto fy = least_squares(columns(d, {"X", "Z", "W"}), column(d, "Y"), "Y");
      const auto sx = standard_errors(fx), sy = standard_errors(fy);
      const std::vector<std::pair<double, double>> est{{fx.coef(0), sx(0)}, {fx.coef(1), sx(1)}, {fx.coef(2), sx(2)},
                                                       {fy.coef(0), sy(0)}, {fy.coef(1), sy(1)}, {fy.coef(2), sy(2)},
                                                       {fy.coef(3), sy(3)}};
      const std::vector<double> want{truth.a_x, truth.b_xz, truth.b_xw, truth.a_y, truth.b_yx, truth.b_yz, truth.b_yw};
      for (std::size_t k = 0; k < want.size(); ++k) {
        ++total;
        if (std::abs(est[k].first - want[k]) > 3 * est[k].second) {
          ++outside;
          MESSAGE("parameterization ", r, " coefficient ", k, ": ", est[k].first, " vs ", want[k], " (SE ",
                  est[k].second, ")");
        }
      }
    }
    // 140 comparisons at the 3-SE level: a handful of exceedances is the
    // expected 0.27% rate; a systematic error would fail almost all of them.
    MESSAGE(outside, " of ", total, " coefficients outside 3 SE");
    CHECK(outside <= 3);
  }

  TEST_CASE("implied trapdoor marginal") {
    const auto spec = builtin_scm("gauss-eq10");
    const auto aux = gaussian_true_aux(spec);
    CHECK(std::get<NormalAux>(aux.at({})).mean.intercept == doctest::Approx(4.0));
  }

  TEST_CASE("fsd model: spread reading variants differ only in S") {
    const auto a = nongauss_fsd(SpreadReading::Variance);
    const auto b = nongauss_fsd(SpreadReading::StandardDeviation);
    CHECK(a.mechanism("S").params[0] == 25.0);
    CHECK(b.mechanism("S").params[0] == 625.0);
    CHECK(a.mechanism("Y").params[0] == 10000.0);
  }
}
