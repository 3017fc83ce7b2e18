#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>
#include <string>

#include "renormfock/errors.hpp"
#include "renormfock/nelson.hpp"

using namespace renormfock;

namespace {

Eigen::VectorXd momentum(double p) {
  Eigen::VectorXd v(1);
  v << p;
  return v;
}

ModeSet points(const std::vector<double>& k) {
  std::vector<Eigen::Vector3d> nodes;
  for (double x : k) nodes.emplace_back(x, 0.0, 0.0);
  return custom_grid(1, nodes, std::vector<double>(k.size(), 1.0), 0.0);
}

FormFactorSpec nelson(double sigma, double sigma0, double coupling = 1.0) {
  FormFactorSpec s;
  s.sigma = sigma;
  s.sigma0 = sigma0;
  s.coupling = coupling;
  return s;
}

// Row-sum norm, an upper bound on the spectral norm.
double row_sum_norm(const SpMat& m) {
  double best = 0.0;
  for (Eigen::Index r = 0; r < m.outerSize(); ++r) {
    double s = 0.0;
    for (SpMat::InnerIterator it(m, r); it; ++it) s += std::abs(it.value());
    best = std::max(best, s);
  }
  return best;
}

}  // namespace

TEST_CASE("assemble_fiber") {
  SUBCASE("no coupling, zero momentum") {
    const ModeSet m = signed_grid_1d(GridKind::linear, 2, 0.5, 2.0, 0.0);
    const BasisPtr b = enumerate_basis(m.size(), 3);
    const FiberModel f = assemble_fiber(momentum(0.0), nelson(2.0, 0.5, 0.0), m, b);
    const Eigenpairs e = lowest_eigenpairs(f.K, 1);
    CHECK(std::abs(e.values[0]) < 1e-12);
    CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-12);
    CHECK(f.E_counterterm == 0.0);
  }
  SUBCASE("single mode diagonal") {
    const ModeSet m = points({1.0});
    const BasisPtr b = enumerate_basis(1, 6);
    const FiberModel f = assemble_fiber(momentum(0.0), nelson(0.5, 0.1), m, b);
    REQUIRE(f.v.norm() == 0.0);  // k = 1 lies above σ
    for (int n = 0; n <= 6; ++n) CHECK(f.K.coeff(n, n) == cplx(n * n + n));
    CHECK(f.K.nonZeros() == 7);
  }
  SUBCASE("free part against occupations") {
    const ModeSet m = signed_grid_1d(GridKind::linear, 2, 0.5, 2.0, 0.0);
    const BasisPtr b = enumerate_basis(m.size(), 3);
    const Eigen::Vector3d p(0.3, 0.0, 0.0);
    const RVec d = free_fiber_diagonal(p, m, *b);
    for (std::size_t j = 0; j < b->dim(); ++j) {
      const auto o = b->occupation(j);
      double total_k = 0.0, energy = 0.0;
      for (int i = 0; i < m.size(); ++i) {
        total_k += o[i] * m.nodes[i][0];
        energy += o[i] * std::abs(m.nodes[i][0]);
      }
      CHECK(std::abs(d[static_cast<Eigen::Index>(j)] - ((0.3 - total_k) * (0.3 - total_k) + energy)) <
            1e-13);
    }
  }
  SUBCASE("sparse against dense") {
    const ModeSet m = signed_grid_1d(GridKind::logarithmic, 2, 0.4, 2.0, 0.0);
    const BasisPtr b = enumerate_basis(4, 6);
    const FiberModel f = assemble_fiber(momentum(0.2), nelson(2.0, 0.4, 0.3), m, b);
    CHECK(hermiticity_defect(f.K) == 0.0);
    const Eigenpairs e = lowest_eigenpairs(f.K, 2);
    const RVec dense = hermitian_spectrum(CMat(f.K));
    CHECK(std::abs(e.values[0] - dense[0]) < 1e-10);
    CHECK(std::abs(e.values[1] - dense[1]) < 1e-10);
  }
  SUBCASE("three dimensions") {
    const ModeSet cube = product_grid_3d(2, 1.0, 0.0);
    const BasisPtr b = enumerate_basis(cube.size(), 2);
    Eigen::VectorXd p(3);
    p << 0.1, 0.0, -0.2;
    const FiberModel f = assemble_fiber(p, nelson(3.0, 1.0), cube, b);
    const double exact = -2.0 * std::numbers::pi * std::log(4.0 / 2.0);
    CHECK(std::abs(f.E_counterterm - exact) < 1e-6);
  }
  const ModeSet m = points({1.0});
  const BasisPtr b = enumerate_basis(1, 2);
  Eigen::VectorXd p3(3);
  p3.setZero();
  CHECK_THROWS_AS(assemble_fiber(p3, nelson(2.0, 0.0), m, b), ShapeError);
  const ModeSet rad = radial_grid(GridKind::logarithmic, 2, 0.1, 1.0, 0.0);
  CHECK_THROWS_AS(assemble_fiber(p3, nelson(1.0, 0.1), rad, enumerate_basis(2, 2)), ShapeError);
}

TEST_CASE("dressed_fiber") {
  const ModeSet m = signed_grid_1d(GridKind::logarithmic, 2, 0.5, 2.0, 0.0);
  const FormFactorSpec spec = nelson(2.0, 0.5, 0.5);

  SUBCASE("no dressing") {
    const BasisPtr b = enumerate_basis(m.size(), 4);
    const FiberModel f = assemble_fiber(momentum(0.0), spec, m, b);
    const DressedFiber d = dressed_fiber(f, 2.0);
    CHECK(d.h.norm() == 0.0);
    CHECK(d.spectra_gap == 0.0);
    SpMat id(f.K.rows(), f.K.cols());
    id.setIdentity();
    CHECK(CMat(d.op - (f.K - f.E_counterterm * id)).cwiseAbs().maxCoeff() == 0.0);
  }

  SUBCASE("dressing preserves the low spectrum up to truncation") {
    double prev = 1.0;
    for (int n : {6, 8, 10}) {
      const BasisPtr b = enumerate_basis(m.size(), n);
      const FiberModel f = assemble_fiber(momentum(0.0), spec, m, b);
      const DressedFiber d = dressed_fiber(f, 0.5, 4, 1e-4);
      CHECK(d.h.norm() > 0.0);
      // A truncated displacement leaks a vector of norm √tail, so the shift of
      // each low eigenvalue is at most that leak times the operator scale.
      const double scale = row_sum_norm(f.K) + std::abs(f.E_counterterm);
      CHECK(d.spectra_gap <= 2.0 * scale * std::sqrt(d.tail_bound));
      CHECK(d.spectra_gap < prev);
      prev = d.spectra_gap;
    }
    CHECK(prev < 1e-8);
  }

  SUBCASE("precondition names the required cap") {
    const BasisPtr b = enumerate_basis(m.size(), 3);
    const FiberModel f = assemble_fiber(momentum(0.0), nelson(2.0, 0.5, 3.0), m, b);
    const double x = gross_config(f.v, m).squaredNorm();
    try {
      dressed_fiber(f, 0.5);
      FAIL("expected a precondition error");
    } catch (const PreconditionError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("N_max = " + std::to_string(required_cap(x, 1e-8))) != std::string::npos);
    }
  }
}

TEST_CASE("required_cap") {
  CHECK(required_cap(0.0, 1e-8) == 0);
  for (double x : {0.3, 1.0, 4.0}) {
    const int n = required_cap(x, 1e-8);
    CHECK(poisson_tail(x, n) <= 1e-8);
    CHECK(poisson_tail(x, n - 1) > 1e-8);
  }
}

TEST_CASE("fiber_ir_sweep") {
  SUBCASE("constant sequence") {
    const ModeSet m = signed_grid_1d(GridKind::logarithmic, 2, 0.5, 2.0, 0.0);
    const FormFactorSpec s = nelson(2.0, 0.5, 0.5);
    const auto pts = fiber_ir_sweep(momentum(0.1), {s, s, s}, {m, m, m}, 4);
    REQUIRE(pts.size() == 3);
    for (const auto& p : pts) {
      CHECK(p.resolvent_gap == 0.0);
      CHECK(p.lambda0 == pts[0].lambda0);
      CHECK(p.lambda0 == doctest::Approx(p.raw_lambda0 - p.counterterm));
      CHECK(p.gap > 0.0);
    }
    CHECK(std::isnan(pts[0].overlap_prev));
    CHECK(pts[1].overlap_prev == doctest::Approx(1.0));
  }

  SUBCASE("ultraviolet refinement on a fixed grid") {
    const ModeSet m = signed_grid_1d(GridKind::logarithmic, 3, 1.0, 8.0, 0.0);
    std::vector<FormFactorSpec> specs;
    for (double s : {2.0, 4.0, 8.0}) specs.push_back(nelson(s, 1.0));
    const auto pts = fiber_ir_sweep(momentum(0.0), specs, {m, m, m}, 5);
    const double d1 = std::abs(pts[0].lambda0 - pts[1].lambda0);
    const double d2 = std::abs(pts[1].lambda0 - pts[2].lambda0);
    CHECK(d2 < d1);
    // The raw energy keeps falling by far more than the subtracted one moves.
    CHECK(pts[2].raw_lambda0 < pts[1].raw_lambda0);
    CHECK(pts[1].raw_lambda0 < pts[0].raw_lambda0);
    CHECK(pts[0].raw_lambda0 - pts[2].raw_lambda0 > 10.0 * std::max(d1, d2));
    CHECK(pts[2].resolvent_gap == 0.0);
    CHECK(pts[0].resolvent_gap > pts[1].resolvent_gap);
  }

  SUBCASE("infrared refinement at nonzero momentum") {
    std::vector<FormFactorSpec> specs;
    std::vector<ModeSet> grids;
    for (double s0 : {0.2, 0.1, 0.05}) {
      specs.push_back(nelson(2.0, s0));
      grids.push_back(signed_grid_1d(GridKind::logarithmic, 2, s0, 2.0, 0.0));
    }
    const auto pts = fiber_ir_sweep(momentum(0.4), specs, grids, 6);
    CHECK(pts[1].num_expect >= pts[0].num_expect);
    CHECK(pts[2].num_expect >= pts[1].num_expect);
    CHECK(pts[2].vac_overlap <= pts[0].vac_overlap);
    // Grids differ, so no embedded comparisons are reported.
    CHECK(std::isnan(pts[1].overlap_prev));
    CHECK(std::isnan(pts[0].resolvent_gap));
  }

  CHECK_THROWS_AS(fiber_ir_sweep(momentum(0.0), {}, {}, 2), PreconditionError);
}
