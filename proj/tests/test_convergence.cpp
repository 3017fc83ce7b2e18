#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include <Eigen/QR>

#include "renormfock/convergence.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/spinboson.hpp"
#include "renormfock/vhm.hpp"

using namespace renormfock;

namespace {

CMat scalar(double x) {
  CMat m(1, 1);
  m << x;
  return m;
}

CMat random_hermitian(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> d;
  CMat m(n, n);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = cplx(d(rng), d(rng));
  return 0.5 * (m + m.adjoint());
}

}  // namespace

TEST_CASE("resolvent_distance basics") {
  EmbeddedOperatorFamily same(4);
  const CMat h = random_hermitian(4, 1);
  same.add(h);
  same.add(h);
  same.add(h);
  for (double d : resolvent_distance(same, kI)) CHECK(d == 0.0);

  for (double eps : {0.5, 0.1, 1e-3}) {
    EmbeddedOperatorFamily f(1);
    f.add(scalar(1.0 + eps));
    f.add(scalar(1.0));
    const auto d = resolvent_distance(f, kI);
    const double exact = std::abs(1.0 / cplx(1.0 + eps, 1.0) - 1.0 / cplx(1.0, 1.0));
    CHECK(d[0] == doctest::Approx(exact).epsilon(1e-12));
    CHECK(d[1] == 0.0);
  }

  // Conjugate shifts give the same norm distance for Hermitian members.
  EmbeddedOperatorFamily g(5);
  for (std::uint64_t s : {2u, 3u, 4u}) g.add(random_hermitian(5, s));
  const auto up = resolvent_distance(g, cplx(0.3, 1.2));
  const auto down = resolvent_distance(g, cplx(0.3, -1.2));
  for (std::size_t i = 0; i < up.size(); ++i) CHECK(std::abs(up[i] - down[i]) < 1e-10);

  // Strong mode never exceeds norm mode; with a full basis of probes it is
  // at least the largest column norm.
  std::vector<CVec> probes;
  for (int i = 0; i < 5; ++i) probes.push_back(CVec::Unit(5, i));
  const auto strong = resolvent_distance(g, kI, DistanceMode::strong, probes);
  for (std::size_t i = 0; i < up.size(); ++i) {
    const CMat diff = g.embedded_resolvent(i, kI) - g.embedded_resolvent(g.limit(), kI);
    CHECK(strong[i] <= resolvent_distance(g, kI)[i] + 1e-14);
    CHECK(strong[i] == doctest::Approx(diff.colwise().norm().maxCoeff()));
  }

  // A real shift on the spectrum is singular.
  EmbeddedOperatorFamily r(1);
  r.add(scalar(2.0));
  CHECK_THROWS_AS(resolvent_distance(r, cplx(-2.0, 0.0)), ShiftError);
  CHECK_NOTHROW(resolvent_distance(r, cplx(-1.0, 0.0)));
}

TEST_CASE("embeddings") {
  EmbeddedOperatorFamily f(4);
  CMat not_iso = CMat::Zero(4, 2);
  not_iso(0, 0) = 1.0;
  not_iso(1, 1) = 2.0;
  CHECK_THROWS_AS(f.add(random_hermitian(2, 1), not_iso), PreconditionError);
  CHECK_THROWS_AS(f.add(random_hermitian(5, 1)), ShapeError);
  CMat non_herm = random_hermitian(4, 2);
  non_herm(0, 1) += 1.0;
  CHECK_THROWS_AS(f.add(non_herm), PreconditionError);
  REQUIRE(f.size() == 0);

  // Smaller members default to the prefix embedding of nested bases.
  EmbeddedOperatorFamily prefix(4);
  prefix.add(random_hermitian(3, 1));
  CHECK((prefix.embedding(0) - CMat::Identity(4, 3)).cwiseAbs().maxCoeff() == 0.0);

  // A two-dimensional member placed into a corner of the parent.
  CMat iota = CMat::Zero(4, 2);
  iota(0, 0) = 1.0;
  iota(1, 1) = 1.0;
  const CMat small = random_hermitian(2, 5);
  f.add(small, iota);
  CMat big = CMat::Zero(4, 4);
  big.topLeftCorner(2, 2) = small;
  big(2, 2) = 7.0;
  big(3, 3) = 9.0;
  f.add(big);
  const CMat r0 = f.embedded_resolvent(0, kI);
  const CMat expect = (small + kI * CMat::Identity(2, 2)).inverse();
  CHECK((r0.topLeftCorner(2, 2) - expect).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(r0.bottomRightCorner(2, 2).cwiseAbs().maxCoeff() == 0.0);
  CHECK(resolvent_distance(f, kI)[0] ==
        doctest::Approx(std::max(1.0 / std::abs(cplx(7, 1)), 1.0 / std::abs(cplx(9, 1)))));

  f.set_limit(0);
  CHECK(f.limit() == 0);
  CHECK(resolvent_distance(f, kI)[0] == 0.0);
}

TEST_CASE("fock_embedding") {
  // J maps two coarse modes isometrically into three fine modes.
  CMat j = CMat::Zero(3, 2);
  j(0, 0) = 1.0 / std::sqrt(2.0);
  j(1, 0) = 1.0 / std::sqrt(2.0);
  j(2, 1) = 1.0;
  const BasisPtr coarse = enumerate_basis(2, 4);
  const BasisPtr fine = enumerate_basis(3, 4);
  const CMat g = fock_embedding(*coarse, *fine, j);
  CHECK(g.rows() == static_cast<Eigen::Index>(fine->dim()));
  CHECK(g.cols() == static_cast<Eigen::Index>(coarse->dim()));
  const auto n = static_cast<Eigen::Index>(coarse->dim());
  CHECK((g.adjoint() * g - CMat::Identity(n, n)).cwiseAbs().maxCoeff() < 1e-13);
  CHECK((g.col(0) - vacuum(fine)).norm() < 1e-15);
  // One-boson states follow J.
  CHECK((g.col(1).segment(1, 3) - j.col(0)).norm() < 1e-15);
  CHECK((g.col(2).segment(1, 3) - j.col(1)).norm() < 1e-15);
  // Γ(J) intertwines the creation operators: Γ(J) a†(f) = a†(Jf) Γ(J).
  const OneParticleVector f = OneParticleVector::Ones(2) * cplx(0.3, -0.4);
  const CMat lhs = g * CMat(creator(f, coarse).matrix);
  const CMat rhs = CMat(creator(j * f, fine).matrix) * g;
  const auto interior = static_cast<Eigen::Index>(coarse->dim_up_to(3));
  CHECK((lhs.leftCols(interior) - rhs.leftCols(interior)).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("rate_fit") {
  const std::vector<double> h{0.5, 0.25, 0.125, 0.0625};
  std::vector<double> d;
  for (double x : h) d.push_back(3.0 * std::pow(x, 1.7));
  const RateFit r = rate_fit(d, h);
  CHECK(std::abs(r.exponent - 1.7) < 1e-10);
  CHECK(r.prefactor == doctest::Approx(3.0));
  CHECK(r.residual < 1e-12);
  CHECK(r.points == 4);

  const RateFit c = rate_fit({0.2, 0.2, 0.2}, {1.0, 0.5, 0.25});
  CHECK(std::abs(c.exponent) < 1e-12);

  // Nonpositive distances are dropped before fitting.
  const RateFit drop = rate_fit({3.0 * std::pow(0.5, 1.7), 0.0, 3.0 * std::pow(0.125, 1.7),
                                 3.0 * std::pow(0.0625, 1.7)},
                                h);
  CHECK(drop.points == 3);
  CHECK(std::abs(drop.exponent - 1.7) < 1e-10);
  CHECK_THROWS_AS(rate_fit({1.0, 0.0, 0.5}, {1.0, 0.5, 0.25}), FitError);
}

TEST_CASE("renormalized families") {
  SUBCASE("vHM transports to the free field") {
    const ModeSet m = radial_grid(GridKind::logarithmic, 3, 0.2, 2.0, 0.0);
    const BasisPtr b = enumerate_basis(3, 4);
    EmbeddedOperatorFamily family(static_cast<Eigen::Index>(b->dim()));
    for (double s0 : {1.0, 0.4, 0.0}) {
      FormFactorSpec spec;
      spec.sigma = 2.0;
      spec.sigma0 = s0;
      spec.coupling = 0.3;
      const auto g = vhm_ground_config(sample_form_factor(spec, m), m);
      const CMat t = renormalized_vhm(g, m, b).transported();
      family.add(0.5 * (t + t.adjoint()));
    }
    for (double d : resolvent_distance(family, kI)) CHECK(d <= 1e-8);
    for (double d : resolvent_distance(family, 2.0 * kI)) CHECK(d <= 1e-8);
    const auto probes = default_probes(b);
    CHECK(probes.size() == 4);
    for (double d : resolvent_distance(family, kI, DistanceMode::strong, probes)) CHECK(d <= 1e-8);
  }

  SUBCASE("spin-boson infrared refinement") {
    const ModeSet m = radial_grid(GridKind::logarithmic, 4, 0.05, 2.0, 0.0);
    const BasisPtr b = enumerate_basis(4, 3);
    const SpinSpace spin = make_spin_space(pauli_z(), pauli_x());
    const RVec k = m.knorms();
    EmbeddedOperatorFamily family(2 * static_cast<Eigen::Index>(b->dim()));
    std::vector<double> cutoffs;
    for (int active = 1; active <= 4; ++active) {
      FormFactorSpec spec;
      spec.kind = FormFactorKind::weisskopf_wigner;
      spec.coupling = 0.3;
      spec.sigma = 2.0;
      spec.sigma0 = active == 4 ? 0.0 : 0.5 * (k[3 - active] + k[4 - active]);
      cutoffs.push_back(spec.sigma0);
      const auto g = vhm_ground_config(sample_form_factor(spec, m), m);
      family.add(renormalized_sb(spin, m, g, ChiKind::regular, b).dressed);
    }
    const auto d = resolvent_distance(family, kI);
    for (std::size_t i = 0; i + 1 < d.size(); ++i) CHECK(d[i] > d[i + 1]);
    CHECK(d.back() == 0.0);
    const RateFit fit = rate_fit(d, cutoffs);
    CHECK(fit.points == 3);
    CHECK(std::isfinite(fit.exponent));
    MESSAGE("spin-boson refinement exponent " << fit.exponent);

    OneParticleVector g(4);
    g << 0.1, 0.2, 0.3, 0.4;
    const auto probes = default_probes(b, g);
    CHECK(probes.size() == 6);
    CHECK(std::abs(probes.back().norm() - 1.0) < 1e-12);
  }
}
