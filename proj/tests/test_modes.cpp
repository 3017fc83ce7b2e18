#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "renormfock/errors.hpp"
#include "renormfock/modes.hpp"

using namespace renormfock;

namespace {

ModeSet points(const std::vector<double>& k, double mass = 0.0,
               std::vector<double> w = {}) {
  std::vector<Eigen::Vector3d> nodes;
  for (double x : k) nodes.emplace_back(x, 0.0, 0.0);
  if (w.empty()) w.assign(k.size(), 1.0);
  return custom_grid(1, nodes, w, mass);
}

// Composite Simpson rule, used as an independent quadrature.
template <class F>
double simpson(F f, double a, double b, int n = 20000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

}  // namespace

TEST_CASE("grid invariants") {
  const ModeSet lin = signed_grid_1d(GridKind::linear, 5, 0.0, 2.0, 0.3);
  CHECK(lin.size() == 10);
  for (int i = 0; i < lin.size(); ++i) {
    CHECK(lin.weights[i] > 0.0);
    CHECK(lin.omega(i) >= lin.mass);
    for (int j = 0; j < i; ++j) CHECK(lin.nodes[i] != lin.nodes[j]);
  }
  // Negative side first, ascending.
  for (int i = 1; i < lin.size(); ++i) CHECK(lin.nodes[i][0] > lin.nodes[i - 1][0]);

  const ModeSet rad = radial_grid(GridKind::logarithmic, 6, 0.1, 10.0, 0.0);
  double total = 0.0;
  for (double w : rad.weights) total += w;
  const double ball = 4.0 * std::numbers::pi * (1000.0 - 0.001) / 3.0;
  CHECK(total == doctest::Approx(ball).epsilon(1e-12));
  CHECK(rad.radial);
  CHECK_THROWS_AS(rad.momentum_component(0), ShapeError);

  const ModeSet cube = product_grid_3d(4, 1.0, 0.0);
  CHECK(cube.size() == 64);
  for (int i = 0; i < cube.size(); ++i) CHECK(cube.knorm(i) > 0.0);
  CHECK(cube.momentum_component(2).sum() == doctest::Approx(0.0).epsilon(1e-14));

  CHECK_THROWS_AS(points({1.0, 1.0}), ConfigError);
  CHECK_THROWS_AS(points({1.0}, 0.0, {0.0}), ConfigError);
  CHECK_THROWS_AS(points({1.0}, -1.0), ConfigError);
  CHECK_THROWS_AS(product_grid_3d(3, 1.0, 0.0), ConfigError);
}

TEST_CASE("sample_form_factor") {
  FormFactorSpec nelson;
  nelson.sigma = 2.0;
  SUBCASE("nelson sharp at k = 1") {
    const auto c = sample_form_factor(nelson, points({1.0}));
    CHECK(std::abs(c[0] - 1.0 / std::sqrt(2.0)) < 1e-15);
  }
  SUBCASE("outside the cutoff") {
    const auto c = sample_form_factor(nelson, points({2.5, -3.0}));
    CHECK(c.norm() == 0.0);
  }
  SUBCASE("weisskopf-wigner against pointwise evaluation") {
    FormFactorSpec ww;
    ww.kind = FormFactorKind::weisskopf_wigner;
    const ModeSet m = radial_grid(GridKind::logarithmic, 4, 0.1, 4.0, 0.5);
    const auto c = sample_form_factor(ww, m);
    for (int i = 0; i < 4; ++i) {
      const double k = m.nodes[i][0];
      const double expect = std::sqrt(m.weights[i]) / std::pow(k * k + 0.25, 0.25);
      CHECK(std::abs(c[i] - expect) <= 1e-14 * expect);
    }
  }
  SUBCASE("custom table length") {
    FormFactorSpec t;
    t.kind = FormFactorKind::custom_table;
    t.table = {1.0, 2.0};
    CHECK_THROWS_AS(sample_form_factor(t, points({1.0})), ConfigError);
    t.table = {3.0};
    CHECK(sample_form_factor(t, points({1.0}, 0.0, {4.0}))[0] == cplx(6.0));
  }
  CHECK(infrared_norm2(sample_form_factor(nelson, points({0.5})), points({0.5})) ==
        doctest::Approx(1.0 / (2.0 * 0.5 * 0.5)));
}

TEST_CASE("vhm_ground_config") {
  const ModeSet one = points({2.0});
  CHECK(vhm_ground_config(OneParticleVector::Zero(1), one).norm() == 0.0);
  OneParticleVector v(1);
  v << 1.0;
  CHECK(vhm_ground_config(v, one)[0] == cplx(-0.5));

  // ||g||² on a μ = 0 grid against the same sum built from pointwise values.
  FormFactorSpec spec;
  spec.sigma = 5.0;
  spec.sigma0 = 0.3;
  const ModeSet grid = signed_grid_1d(GridKind::logarithmic, 8, 0.3, 5.0, 0.0);
  const auto g = vhm_ground_config(sample_form_factor(spec, grid), grid);
  double oracle = 0.0;
  for (int i = 0; i < grid.size(); ++i) {
    const double k = std::abs(grid.nodes[i][0]);
    oracle += grid.weights[i] * (1.0 / (2.0 * k)) / (k * k);
  }
  CHECK(g.squaredNorm() == doctest::Approx(oracle).epsilon(1e-13));

  const ModeSet zero = points({0.0, 1.0});
  OneParticleVector v2(2);
  v2 << 1.0, 1.0;
  CHECK_THROWS_AS(vhm_ground_config(v2, zero), SingularConfigError);
  v2[0] = 0.0;
  CHECK_NOTHROW(vhm_ground_config(v2, zero));
}

TEST_CASE("gross_config") {
  const ModeSet one = points({1.0});
  CHECK(gross_config(OneParticleVector::Zero(1), one).norm() == 0.0);
  OneParticleVector v(1);
  v << 0.8;
  CHECK(gross_config(v, one)[0] == cplx(-0.4));

  FormFactorSpec spec;
  spec.sigma = 4.0;
  const ModeSet grid = signed_grid_1d(GridKind::linear, 6, 0.1, 4.0, 0.2);
  const auto vs = sample_form_factor(spec, grid);
  const auto gg = gross_config(vs, grid);
  const auto gv = vhm_ground_config(vs, grid);
  for (int i = 0; i < grid.size(); ++i) CHECK(std::abs(gg[i]) <= std::abs(gv[i]));

  CHECK_THROWS_AS(gross_config(OneParticleVector::Ones(2), points({0.0, 1.0})),
                  SingularConfigError);
}

TEST_CASE("self_energy") {
  FormFactorSpec spec;
  spec.sigma = 2.0;
  spec.sigma0 = 2.0;
  CHECK(self_energy(spec, 3, 0.0) == 0.0);

  for (auto [s, s0] : {std::pair{3.0, 1.0}, std::pair{10.0, 0.1}, std::pair{5.0, 0.0}}) {
    spec.sigma = s;
    spec.sigma0 = s0;
    const double exact = -2.0 * std::numbers::pi * std::log((1.0 + s) / (1.0 + s0));
    CHECK(self_energy(spec, 3, 0.0) == doctest::Approx(exact).epsilon(1e-10));
  }

  spec.sigma0 = 0.5;
  for (double s : {1.0, 3.0, 7.0}) {
    spec.sigma = s;
    const double e1 = self_energy(spec, 3, 0.0);
    spec.sigma = 2 * s;
    const double e2 = self_energy(spec, 3, 0.0);
    CHECK(e2 < e1);
    CHECK(e1 < 0.0);
  }

  // Massive d = 1 against an independent Simpson rule.
  spec.sigma = 3.0;
  spec.sigma0 = 0.0;
  spec.coupling = 0.7;
  const double mu = 0.4;
  const double simpson_value = -2.0 * simpson([&](double k) {
    const double w = std::sqrt(k * k + mu * mu);
    return 0.49 / (2.0 * w) / (w + k * k);
  }, 0.0, 3.0);
  CHECK(self_energy(spec, 1, mu) == doctest::Approx(simpson_value).epsilon(1e-9));

  spec.sigma = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(self_energy(spec, 3, 0.0), CountertermDivergenceError);
  spec.sigma = 3.0;
  CHECK_THROWS_AS(self_energy(spec, 1, 0.0), CountertermDivergenceError);
  spec.kind = FormFactorKind::custom_table;
  CHECK_THROWS_AS(self_energy(spec, 3, 0.0), ConfigError);

  FormFactorSpec grid_spec;
  grid_spec.sigma = 3.0;
  grid_spec.sigma0 = 1.0;
  const ModeSet rad = radial_grid(GridKind::logarithmic, 4, 0.5, 4.0, 0.0);
  CHECK(self_energy(grid_spec, rad) == doctest::Approx(-2.0 * std::numbers::pi * std::log(2.0)));
}
