#include <doctest.h>

#include <array>
#include <cmath>

#include "support.hpp"
#include "trapdoor/effects.hpp"
#include "trapdoor/error.hpp"
#include "trapdoor/fit.hpp"
#include "trapdoor/scm.hpp"

using namespace trapdoor;
using Kind = TrapdoorStrategy::Kind;

namespace {

Dataset binary_rows(const std::vector<std::array<int, 4>>& rows) {
  std::vector<std::vector<double>> cols(4);
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < 4; ++k) cols[k].push_back(r[k]);
  }
  const auto b = ColumnType::binary();
  return Dataset({"W", "Z", "X", "Y"}, {b, b, b, b}, cols);
}

BinaryTables exact_tables() { return binary_tables_from_joint(binary_joint(builtin_scm("binary-eq9"))); }

ScmSpec backdoor_scm() {
  using testing::gauss;
  using testing::lin;
  ScmSpec s;
  s.name = "backdoor";
  s.mechanisms = {
      gauss("U", lin(0, {}), 1),
      gauss("W", lin(0, {{"U", 1}}), 1),
      gauss("X", lin(0, {{"W", 1}}), 1),
      gauss("Y", lin(0, {{"X", 1}, {"U", 1}}), 1),
  };
  s.observed = {"W", "X", "Y"};
  return s;
}

}  // namespace

TEST_SUITE("effects") {
  TEST_CASE("catalog entries pass the structural checks") {
    for (const auto& e : functional_catalog()) {
      const auto c = verify_entry(e);
      INFO(e.key);
      CHECK(c.ok);
      CHECK_FALSE(e.trapdoor.contains(e.intervention));
      CHECK_FALSE(e.trapdoor.contains(e.outcome));
    }
    auto bad = catalog_entry("fig2c-binary");
    bad.trapdoor = {"Y"};
    CHECK_FALSE(verify_entry(bad).ok);
    auto adj = catalog_entry("fig2a-backdoor");
    adj.graph_key = "fig2b";
    CHECK_FALSE(verify_entry(adj).ok);
    CHECK_THROWS_AS(catalog_entry("nope"), Error);
  }

  TEST_CASE("strategy grammar") {
    for (const char* text : {"fixed:0", "fixed:1", "fixed:-2.5", "marg-mean", "marg-draw", "cond-mean:X",
                             "cond-draw:X", "cond-draw:G,S", "constraint"}) {
      CHECK(TrapdoorStrategy::parse(text).to_string() == text);
    }
    const auto s = TrapdoorStrategy::parse("cond-draw:X,S,G");
    CHECK(s.kind == Kind::ConditionalDraw);
    CHECK(s.on == VertexSet{"G", "S", "X"});
    CHECK(s.to_string() == "cond-draw:G,S,X");
    CHECK(TrapdoorStrategy::parse(s.to_string()) == s);
    CHECK(TrapdoorStrategy::parse("fixed:0").aux_set() == std::nullopt);
    CHECK(TrapdoorStrategy::parse("marg-draw").aux_set() == VertexSet{});
    CHECK(TrapdoorStrategy::parse("cond-mean:X").aux_set() == VertexSet{"X"});
    for (const char* bad : {"", "fixed", "fixed:", "fixed:abc", "marg-mean:X", "cond-mean", "cond-mean:", "bogus",
                            "constraint:1"}) {
      INFO("'", bad, "'");
      CHECK_THROWS_AS(TrapdoorStrategy::parse(bad), Error);
    }
  }

  TEST_CASE("binary functional at the true tables") {
    const auto t = exact_tables();
    for (int z : {0, 1}) {
      CHECK(effect_binary_fixed_z(t, 1, z) == Rational(3, 5));
      CHECK(effect_binary_fixed_z(t, 0, z) == Rational(1, 5));
    }
    for (const char* s : {"fixed:0", "fixed:1", "marg-draw", "cond-draw:X"}) {
      CHECK(effect_binary(t, 1, TrapdoorStrategy::parse(s)) == Rational(3, 5));
      CHECK(effect_binary(t, 0, TrapdoorStrategy::parse(s)) == Rational(1, 5));
    }
  }

  TEST_CASE("binary weights") {
    const auto t = exact_tables();
    const auto w = binary_trapdoor_weights(t, TrapdoorStrategy::parse("cond-draw:X"), 1);
    Rational total = 0;
    for (const auto& [z, p] : w) total += p;
    CHECK(total == 1);
    // Degenerate weight reproduces the fixed-z value on any tables.
    const auto d = simulate(builtin_scm("binary-eq9"), 300, 4);
    const auto f = fit_binary_tables(d);
    CHECK(effect_binary_weighted(f, 1, {{1, Rational(1)}}) == effect_binary_fixed_z(f, 1, 1));
    CHECK_THROWS_AS(binary_trapdoor_weights(t, TrapdoorStrategy::parse("marg-mean"), 1), Error);
    CHECK_THROWS_AS(binary_trapdoor_weights(t, TrapdoorStrategy::parse("fixed:0.5"), 1), Error);
    try {
      (void)effect_binary(t, 1, TrapdoorStrategy::parse("cond-mean:X"));
      FAIL("expected a configuration error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
  }

  TEST_CASE("single-valued W collapses the sum") {
    const auto d = binary_rows({{0, 0, 0, 0}, {0, 0, 1, 1}, {0, 0, 1, 0}, {0, 0, 1, 1}, {0, 1, 0, 1}, {0, 1, 1, 0}});
    const auto t = fit_binary_tables(d);
    CHECK(effect_binary_fixed_z(t, 1, 0) == Rational(2, 3));
    CHECK(effect_binary_fixed_z(t, 1, 0) == *t.y_given.probability(1, {1, 0, 0}));
  }

  TEST_CASE("undefined cell carries its index") {
    const auto d =
        binary_rows({{0, 0, 0, 0}, {0, 0, 1, 1}, {0, 1, 0, 0}, {0, 1, 1, 1}, {1, 1, 0, 1}, {1, 1, 1, 0}});
    const auto t = fit_binary_tables(d);
    try {
      (void)effect_binary_fixed_z(t, 1, 0);
      FAIL("expected an undefined cell");
    } catch (const UndefinedCellError& e) {
      CHECK(e.kind() == ErrorKind::UndefinedCell);
      CHECK(e.index() == std::vector<int>{1, 0, 1});
    }
    CHECK_NOTHROW((void)effect_binary_fixed_z(t, 1, 1));
  }

  TEST_CASE("finite-sample fixed-z values differ") {
    const auto d = simulate(builtin_scm("binary-eq9"), 200, 12);
    const auto t = fit_binary_tables(d);
    CHECK(effect_binary_fixed_z(t, 1, 0) != effect_binary_fixed_z(t, 1, 1));
  }

  TEST_CASE("trapdoor bias at n = 100") {
    // Fixed z = 0 and z = 1 carry different finite-sample biases. The gap is
    // about 1e-3, so the two are compared on the same datasets and the
    // replication count is set by a power calculation.
    const std::size_t reps = 250'000;
    double sum = 0, sq = 0;
    std::size_t used = 0;
    const auto spec = builtin_scm("binary-eq9");
    for (std::size_t r = 0; r < reps; ++r) {
      const auto t = fit_binary_tables(simulate(spec, 100, derive_seed(99, r)));
      try {
        const double d = to_double(effect_binary_fixed_z(t, 0, 0)) - to_double(effect_binary_fixed_z(t, 0, 1));
        sum += d;
        sq += d * d;
        ++used;
      } catch (const UndefinedCellError&) {
      }
    }
    const double k = static_cast<double>(used);
    const double gap = sum / k;
    const double se = std::sqrt((sq / k - gap * gap) / (k - 1));
    MESSAGE("x=0 bias gap z=0 minus z=1: ", gap, " (SE ", se, ", ", used, " datasets)");
    CHECK(std::abs(gap) > 3 * se);
  }

  TEST_CASE("Gaussian closed form is free of the trapdoor at the truth") {
    const auto spec = builtin_scm("gauss-eq10");
    const auto m = gaussian_true_params(spec);
    CHECK(effect_gaussian_mean(m, 3, 0) == doctest::Approx(5).epsilon(1e-10));
    for (int k = 0; k <= 20; ++k) {
      const double z = -10 + k;
      CHECK(std::abs(effect_gaussian_mean(m, 3, z) - 5) < 1e-9);
    }
    CHECK(std::abs(effect_gaussian_z_coefficient(m)) < 1e-12);
  }

  TEST_CASE("random parameterizations cancel the trapdoor exactly") {
    Rng rng = make_rng(606);
    for (int r = 0; r < 20; ++r) {
      const auto p = testing::random_linear_params(rng);
      const auto m = gaussian_true_params(testing::linear_scm(p));
      for (int k = 0; k < 10; ++k) {
        const double x = -5 + 10 * draw_uniform(rng), z = -5 + 10 * draw_uniform(rng);
        INFO("parameterization ", r, " x=", x, " z=", z);
        CHECK(std::abs(effect_gaussian_mean(m, x, z) - p.effect(x)) < 1e-8);
      }
    }
  }

  TEST_CASE("differences in x do not depend on z") {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto m = fit_gaussian(simulate(builtin_scm("gauss-eq10"), 100, seed));
      CHECK(std::abs(effect_gaussian_z_coefficient(m)) > 1e-6);
      const double ref = effect_gaussian_mean(m, 4, 0) - effect_gaussian_mean(m, 3, 0);
      for (double z : {-7.0, -1.0, 0.5, 3.0, 12.0}) {
        CHECK(std::abs(effect_gaussian_mean(m, 4, z) - effect_gaussian_mean(m, 3, z) - ref) < 1e-9);
      }
    }
  }

  TEST_CASE("closed-form special cases") {
    GaussianObsModel m{0.3, 2.0, 0.1, 0.7, 0.4, 1.5, 0.2, 1.1, 0.6, 0.0, 0.8};
    // no W loading: plain regression on x and z
    CHECK(effect_gaussian_mean(m, 1.5, 2.0) == doctest::Approx(0.2 + 1.1 * 1.5 + 0.6 * 2.0).epsilon(1e-12));
    GaussianObsModel v{0.3, 2.0, 0.1, 0.7, 0.0, 1.5, 0.2, 1.1, 0.6, 0.9, 0.8};
    CHECK(effect_gaussian_variance(v) == doctest::Approx(0.9 * 0.9 * 2.0 + 0.8).epsilon(1e-12));
    GaussianObsModel tiny = v;
    tiny.b_xw = 0.5;
    tiny.s2_w = 1e-12;
    CHECK(std::abs(effect_gaussian_variance(tiny) - tiny.s2_y) < 1e-9);
    const auto t = gaussian_true_params(builtin_scm("gauss-eq10"));
    CHECK(std::abs(effect_gaussian_variance(t) - 1.01) < 1e-6);
  }

  TEST_CASE("back-door Gaussian effect") {
    BackdoorGaussianModel zero{1.0, 2.0, 0.5, 1.2, 0.0, 0.7};
    const auto a = effect_backdoor_gaussian(zero, 2.0);
    CHECK(a.mean == doctest::Approx(0.5 + 1.2 * 2.0));
    CHECK(a.variance == doctest::Approx(0.7));
    BackdoorGaussianModel m{1.0, 2.0, 0.5, 1.2, 0.3, 0.7};
    CHECK(effect_backdoor_gaussian(m, 0).mean == doctest::Approx(0.5 + 0.3 * 1.0));

    // Worked by hand for U, W = U + e, X = W + e, Y = X + U + e with unit
    // variances: Y | X, W has slopes (1, 1/2) and variance 3/2; W ~ N(0, 2).
    const BackdoorGaussianModel hand{0.0, 2.0, 0.0, 1.0, 0.5, 1.5};
    const auto spec = backdoor_scm();
    for (double x : {-1.0, 2.0}) {
      const auto o = oracle_effect(spec, {"X", x}, 400'000, 3);
      const auto e = effect_backdoor_gaussian(hand, x);
      CHECK(std::abs(o.mean - e.mean) < 3 * o.mcse_mean);
      CHECK(std::abs(o.variance - e.variance) < 3 * o.mcse_variance);
    }
    const auto fit = fit_backdoor_gaussian(simulate(spec, 200'000, 5));
    CHECK(fit.b_yw == doctest::Approx(0.5).epsilon(0.02));
    CHECK(fit.s2_y == doctest::Approx(1.5).epsilon(0.02));
  }

  TEST_CASE("trapdoor values") {
    const auto aux = gaussian_true_aux(builtin_scm("gauss-eq10"));
    const Context at0{{"X", 0.0}};
    CHECK(std::abs(resolve_trapdoor(TrapdoorStrategy::parse("cond-mean:X"), aux, at0) - 0.25) < 1e-3);
    CHECK(std::abs(resolve_trapdoor(TrapdoorStrategy::parse("marg-mean"), aux, at0) - 4.0) < 1e-12);
    CHECK(resolve_trapdoor(TrapdoorStrategy::parse("fixed:0"), aux, at0) == 0);
    CHECK(std::abs(resolve_trapdoor(TrapdoorStrategy::parse("cond-mean:X"), aux, {{"X", 9.0}}) - 5.875) < 1e-12);
    CHECK_THROWS_AS(resolve_trapdoor(TrapdoorStrategy::parse("marg-draw"), aux, at0), Error);
    try {
      (void)resolve_trapdoor(TrapdoorStrategy::parse("cond-mean:S"), aux, at0);
      FAIL("expected a configuration error");
    } catch (const Error& e) {
      CHECK(e.kind() == ErrorKind::Config);
    }
    Rng rng = make_rng(1);
    double s = 0;
    const int k = 200'000;
    for (int i = 0; i < k; ++i) s += resolve_trapdoor(TrapdoorStrategy::parse("cond-draw:X"), aux, at0, &rng);
    // Var(Z | X) = 4 - 25/8
    CHECK(std::abs(s / k - 0.25) < 3 * std::sqrt(0.875 / k));
  }

  TEST_CASE("every Gaussian strategy gives 2 + x at the truth") {
    const auto spec = builtin_scm("gauss-eq10");
    const auto m = gaussian_true_params(spec);
    const auto aux = gaussian_true_aux(spec);
    for (const char* s : {"fixed:0", "fixed:7", "marg-mean", "cond-mean:X", "marg-draw", "cond-draw:X", "constraint"}) {
      for (double x : {0.0, 3.0, 9.0}) {
        INFO(s, " x=", x);
        CHECK(std::abs(effect_gaussian(m, aux, x, TrapdoorStrategy::parse(s)) - (2 + x)) < 1e-9);
      }
    }
    const auto fitted = fit_gaussian(simulate(spec, 100, 3));
    CHECK_THROWS_AS(effect_gaussian(fitted, aux, 0, TrapdoorStrategy::parse("constraint")), Error);
  }
}
