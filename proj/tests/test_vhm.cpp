#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "renormfock/errors.hpp"
#include "renormfock/vhm.hpp"

using namespace renormfock;

namespace {

ModeSet points(const std::vector<double>& k) {
  std::vector<Eigen::Vector3d> nodes;
  for (double x : k) nodes.emplace_back(x, 0.0, 0.0);
  return custom_grid(1, nodes, std::vector<double>(k.size(), 1.0), 0.0);
}

OneParticleVector values(std::initializer_list<cplx> xs) {
  OneParticleVector v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (cplx x : xs) v[i++] = x;
  return v;
}

}  // namespace

TEST_CASE("free field") {
  const ModeSet m = points({1.0, 1.5, 2.0});
  const BasisPtr b = enumerate_basis(3, 4);
  const VhmModel model = assemble_vhm(OneParticleVector::Zero(3), m, b);
  CHECK(model.ground_energy_formula == 0.0);
  const Eigenpairs e = ground_state(model, 1, 1e-12);
  CHECK(std::abs(e.values[0]) < 1e-12);
  CHECK(std::abs(std::abs(e.vectors(0, 0)) - 1.0) < 1e-12);
}

TEST_CASE("degenerate one-boson states") {
  // Two modes with the same |k| share ω.
  const ModeSet m = points({-1.5, 1.5});
  const BasisPtr b = enumerate_basis(2, 3);
  const VhmModel model = assemble_vhm(OneParticleVector::Zero(2), m, b);
  const Eigenpairs e = ground_state(model, 3, 1e-12);
  CHECK(e.values[1] == doctest::Approx(1.5));
  CHECK(e.values[2] == doctest::Approx(1.5));
  const double weight = e.vectors.col(1).segment(1, 2).squaredNorm() +
                        e.vectors.col(2).segment(1, 2).squaredNorm();
  CHECK(weight == doctest::Approx(2.0));
}

TEST_CASE("single mode ground state") {
  const ModeSet m = points({2.0});
  const BasisPtr b = enumerate_basis(1, 20);
  const VhmModel model = assemble_vhm(values({1.0}), m, b);
  CHECK(model.ground_energy_formula == doctest::Approx(-0.5));
  const Eigenpairs e = ground_state(model, 2, 1e-12);
  CHECK(std::abs(e.values[0] + 0.5) < 1e-10);
  CHECK(e.values[1] == doctest::Approx(1.5));
  const CVec c = coherent_state(vhm_ground_config(model.v, m), b);
  CHECK(std::abs(c.dot(e.vectors.col(0))) >= 1.0 - 1e-6);
}

TEST_CASE("mode additivity") {
  const ModeSet m = points({1.0, 2.5});
  const BasisPtr b = enumerate_basis(2, 18);
  const OneParticleVector v = values({0.6, cplx(0.3, 0.4)});
  const VhmModel model = assemble_vhm(v, m, b);
  const double oracle = -(0.36 / 1.0 + 0.25 / 2.5);
  CHECK(model.ground_energy_formula == doctest::Approx(oracle));
  const Eigenpairs e = ground_state(model, 1, 1e-12);
  CHECK(std::abs(e.values[0] - oracle) < 1e-9);
  CHECK_THROWS_AS(assemble_vhm(values({1.0}), m, b), ShapeError);
}

TEST_CASE("check_diagonalization") {
  const ModeSet m = points({2.0});
  const auto zero = check_diagonalization(assemble_vhm(values({0.0}), m, enumerate_basis(1, 8)));
  CHECK(zero.defect == 0.0);

  // ||g||² = 0.25 with ω = 2 means v = 1.
  double prev = 1.0;
  for (int n : {8, 12, 16}) {
    const auto c = check_diagonalization(assemble_vhm(values({1.0}), m, enumerate_basis(1, n)));
    CHECK(c.defect <= c.bound);
    CHECK(c.defect < prev);
    if (n == 12) CHECK(c.defect <= 1e-8);
    prev = c.defect;
  }
}

TEST_CASE("renormalized vhm") {
  const ModeSet m = radial_grid(GridKind::logarithmic, 3, 0.2, 3.0, 0.0);
  const BasisPtr b = enumerate_basis(3, 5);
  const RVec free = hermitian_spectrum(CMat(second_quantization(m.omegas(), b).matrix));

  const RenormalizedOperator zero = renormalized_vhm(OneParticleVector::Zero(3), m, b);
  CHECK((zero.op - CMat(second_quantization(m.omegas(), b).matrix)).cwiseAbs().maxCoeff() == 0.0);

  std::mt19937_64 rng(8);
  std::normal_distribution<double> d;
  OneParticleVector g(3);
  for (auto& x : g) x = cplx(d(rng), d(rng));
  g *= 2.0 / g.norm();  // ||g||² = 4
  const RenormalizedOperator r = renormalized_vhm(g, m, b);
  const RVec ren = hermitian_spectrum(r.whitened());
  CHECK((ren - free).cwiseAbs().maxCoeff() < 1e-9);
  const CMat t = r.transported();
  CHECK((t - CMat(second_quantization(m.omegas(), b).matrix)).cwiseAbs().maxCoeff() < 1e-9);

  // Ω is an eigenvector with eigenvalue 0 and unit renormalized norm.
  const CVec omega = vacuum(b);
  CHECK((r.op * omega).norm() < 1e-12);
  CHECK(r.metric.norm(omega) == doctest::Approx(1.0));
}
