#include "renormfock/suite.hpp"

#include <chrono>
#include <cmath>
#include <functional>
#include <iomanip>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "renormfock/convergence.hpp"
#include "renormfock/doi.hpp"
#include "renormfock/dressing.hpp"
#include "renormfock/errors.hpp"
#include "renormfock/fock.hpp"
#include "renormfock/nelson.hpp"
#include "renormfock/spinboson.hpp"
#include "renormfock/vhm.hpp"

namespace renormfock {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string sci(double x) {
  std::ostringstream os;
  os << std::scientific << std::setprecision(3) << x;
  return os.str();
}

CVec random_vector(int n, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> d(0.0, 1.0);
  CVec v(n);
  for (int i = 0; i < n; ++i) v[i] = scale * cplx(d(rng), d(rng));
  return v;
}

CMat random_matrix(int n, std::mt19937_64& rng) {
  std::normal_distribution<double> d(0.0, 1.0);
  CMat m(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) m(i, j) = cplx(d(rng), d(rng));
  return m;
}

ModeSet line_modes(const std::vector<double>& k, double mass = 0.0) {
  std::vector<Eigen::Vector3d> nodes;
  for (double x : k) nodes.emplace_back(x, 0.0, 0.0);
  return custom_grid(1, nodes, std::vector<double>(k.size(), 1.0), mass);
}

OneParticleVector table_coupling(const ModeSet& modes, const std::vector<double>& values) {
  FormFactorSpec spec;
  spec.kind = FormFactorKind::custom_table;
  spec.table = values;
  return sample_form_factor(spec, modes);
}

// Single mode with ω = 2 and v = 1.
struct SingleMode {
  ModeSet modes = line_modes({2.0});
  BasisPtr basis = enumerate_basis(1, 20);
  VhmModel model = assemble_vhm(table_coupling(modes, {1.0}), modes, basis);
};

Outcome c01_vhm_energy() {
  constexpr double kTol = 1e-8;
  constexpr double kMaxSeconds = 1.0;
  const auto t0 = Clock::now();
  const SingleMode s;
  const Eigenpairs ep = ground_state(s.model, 1, 1e-12);
  const double secs = seconds_since(t0);
  const double err = std::abs(ep.values[0] + 0.5);
  return {err <= kTol && secs < kMaxSeconds,
          "lambda0 = " + std::to_string(ep.values[0]) + ", |err| = " + sci(err) +
              ", " + sci(secs) + " s"};
}

Outcome c02_coherent_ground_state() {
  constexpr double kTol = 1e-6;
  const SingleMode s;
  const Eigenpairs ep = ground_state(s.model, 1, 1e-12);
  const OneParticleVector g = vhm_ground_config(s.model.v, s.modes);
  const double ov = std::abs(coherent_state(g, s.basis).dot(ep.vectors.col(0)));
  return {ov >= 1.0 - kTol, "1 - |<x0, c_g>| = " + sci(std::max(0.0, 1.0 - ov))};
}

// e^{a(g)} ε_n(f) = Σ_{k≤n} ⟨g,f⟩^k/k! ε_{n−k}(f) holds exactly on the
// truncated space, one grade n at a time.
Outcome c03_exponential_eigenrelation() {
  constexpr double kTol = 1e-12;
  std::mt19937_64 rng(3);
  const BasisPtr basis = enumerate_basis(2, 6);
  const int cap = basis->cap();
  double worst = 0.0;
  for (int trial = 0; trial < 8; ++trial) {
    const OneParticleVector g = random_vector(2, rng, 0.7);
    const OneParticleVector f = random_vector(2, rng, 0.7);
    const CVec eps = exponential_vector(f, basis).vector;
    const SpMat d = dress_lower(g, basis).matrix;
    const cplx gf = g.dot(f);
    auto grade_piece = [&](int n) {
      CVec out = CVec::Zero(eps.size());
      const auto b = basis->grade_begin(n);
      const auto e = basis->grade_begin(n + 1);
      out.segment(b, e - b) = eps.segment(b, e - b);
      return out;
    };
    for (int n = 0; n <= cap; ++n) {
      const CVec lhs = d * grade_piece(n);
      CVec rhs = CVec::Zero(eps.size());
      cplx term = 1.0;
      for (int k = 0; k <= n; ++k) {
        rhs += term * grade_piece(n - k);
        term *= gf / static_cast<double>(k + 1);
      }
      worst = std::max(worst, (lhs - rhs).cwiseAbs().maxCoeff());
    }
  }
  return {worst <= kTol, "max gradewise defect " + sci(worst)};
}

Outcome c04_metric_unipotence() {
  constexpr double kDetTol = 1e-9;
  constexpr double kGroupTol = 1e-12;
  std::mt19937_64 rng(4);
  const BasisPtr basis = enumerate_basis(3, 4);
  const OneParticleVector g = random_vector(3, rng, 0.6);
  const OneParticleVector g2 = random_vector(3, rng, 0.6);
  const OneParticleVector g3 = random_vector(3, rng, 0.6);
  const RenormMetric mg = renorm_metric(g, basis);
  const RenormMetric mg2 = renorm_metric(g2, basis);
  const double det_err = std::abs(std::exp(mg.log_det()) - 1.0);

  const CMat u12 = CMat(transfer(g, g2, basis).matrix);
  const CMat u23 = CMat(transfer(g2, g3, basis).matrix);
  const CMat u13 = CMat(transfer(g, g3, basis).matrix);
  const CMat u21 = CMat(transfer(g2, g, basis).matrix);
  const CMat uid = CMat(transfer(g, g, basis).matrix);
  const CMat id = CMat::Identity(basis->dim(), basis->dim());
  const double scale = std::max(1.0, mg.G.cwiseAbs().maxCoeff());
  double group = 0.0;
  group = std::max(group, (u23 * u12 - u13).cwiseAbs().maxCoeff());
  group = std::max(group, (uid - id).cwiseAbs().maxCoeff());
  group = std::max(group, (u21 * u12 - id).cwiseAbs().maxCoeff());
  group = std::max(group, (u12.adjoint() * mg2.G * u12 - mg.G).cwiseAbs().maxCoeff() / scale);
  return {det_err <= kDetTol && group <= kGroupTol,
          "|det G - 1| = " + sci(det_err) + ", group-law defect " + sci(group)};
}

Outcome c05_mollified_identity() {
  constexpr double kGapTol = 1e-10;
  const ModeSet modes = line_modes({1.0, 2.0});
  const BasisPtr basis = enumerate_basis(2, 16);
  std::mt19937_64 rng(5);
  OneParticleVector g = random_vector(2, rng);
  g /= g.norm();
  const RenormMetric metric = renorm_metric(g, basis);
  double gap = 0.0, bound = 0.0;
  bool within = true;
  for (int trial = 0; trial < 4; ++trial) {
    CVec psi = CVec::Zero(basis->dim());
    CVec phi = CVec::Zero(basis->dim());
    const int n1 = static_cast<int>(basis->dim_up_to(1));
    psi.head(n1) = random_vector(n1, rng);
    phi.head(n1) = random_vector(n1, rng);
    psi /= psi.norm();
    phi /= phi.norm();
    const MollifiedCheck m = mollified_inner_check(psi, phi, g, metric, basis);
    within = within && m.gap <= m.bound;
    gap = std::max(gap, m.gap);
    bound = std::max(bound, m.bound);
  }
  return {within && gap <= kGapTol, "gap " + sci(gap) + ", bound " + sci(bound)};
}

Outcome c06_self_energy() {
  constexpr double kRelTol = 1e-6;
  double worst = 0.0;
  for (auto [s, s0] : {std::pair{3.0, 1.0}, std::pair{10.0, 0.1}}) {
    FormFactorSpec spec;
    spec.sigma = s;
    spec.sigma0 = s0;
    const double e = self_energy(spec, 3, 0.0);
    const double exact = -2.0 * std::numbers::pi * std::log((1.0 + s) / (1.0 + s0));
    worst = std::max(worst, std::abs(e - exact) / std::abs(exact));
  }
  return {worst <= kRelTol, "max relative error " + sci(worst)};
}

Outcome c07_doi() {
  constexpr double kRecoveryTol = 1e-12;
  std::mt19937_64 rng(7);
  double recovery = 0.0;
  bool bounded = true;
  double worst_ratio = 0.0;
  for (int trial = 0; trial < 20; ++trial) {
    // Normal matrices: U diag(λ) U† with a random unitary U.
    auto normal = [&]() {
      Eigen::HouseholderQR<CMat> qr(random_matrix(4, rng));
      const CMat u = qr.householderQ();
      const CVec lam = random_vector(4, rng);
      return CMat(u * lam.asDiagonal() * u.adjoint());
    };
    const SpectralDecomposition d1 = spectral_decompose(normal());
    const SpectralDecomposition d2 = spectral_decompose(normal());
    const CMat t = random_matrix(4, rng);
    const CMat back = doi_apply(t, d1, d2, DOIKernel::custom([](cplx, cplx) { return cplx(1.0); }));
    recovery = std::max(recovery, (back - t).cwiseAbs().maxCoeff() / t.cwiseAbs().maxCoeff());
    const DecomposabilityEstimate est = decomposability(t, d1, d2);
    const double hs = t.norm();
    bounded = bounded && est.estimate <= hs * (1.0 + 1e-12) &&
              est.estimate <= est.upper_bound * (1.0 + 1e-12);
    worst_ratio = std::max(worst_ratio, est.estimate / hs);
  }
  return {recovery <= kRecoveryTol && bounded,
          "f=1 recovery " + sci(recovery) + ", max decomposable/HS ratio " + sci(worst_ratio)};
}

Outcome c08_standard_sb() {
  constexpr double kElementTol = 1e-10;
  constexpr double kZeroTol = 1e-14;
  constexpr double kDegeneracyTol = 1e-9;
  const SpinSpace spin = make_spin_space(pauli_z(), pauli_x());
  const ModeSet modes = line_modes({1.0, 2.0});
  const BasisPtr basis = enumerate_basis(2, 4);
  const std::size_t nf = basis->dim();
  const OneParticleVector dir = table_coupling(modes, {1.0, 0.5});
  const OneParticleVector g_unit = vhm_ground_config(dir, modes);
  double element = 0.0, zero = 0.0, degeneracy = 0.0;
  for (double x : {0.5, 1.0, 2.0}) {
    const OneParticleVector g = g_unit * std::sqrt(x / g_unit.squaredNorm());
    const RenormalizedSb reg = renormalized_sb(spin, modes, g, ChiKind::regular, basis);
    const RenormalizedSb sing = renormalized_sb(spin, modes, g, ChiKind::singular, basis);
    for (int s = 0; s < 2; ++s) {
      for (int t = 0; t < 2; ++t) {
        const cplx expect = std::exp(-2.0 * x) * pauli_z()(s, t);
        element = std::max(element, std::abs(reg.form(s * nf, t * nf) - expect));
        zero = std::max(zero, std::abs(sing.form(s * nf, t * nf)));
      }
    }
    degeneracy = std::max(degeneracy, std::abs(sing.spectrum[1] - sing.spectrum[0]));
  }
  return {element <= kElementTol && zero <= kZeroTol && degeneracy <= kDegeneracyTol,
          "vacuum element " + sci(element) + ", singular " + sci(zero) + ", split " +
              sci(degeneracy)};
}

Outcome c09_energy_preserving_sb() {
  constexpr double kTol = 1e-9;
  const CMat a = pauli_z();
  const CMat b = 0.8 * pauli_z();
  const SpinSpace spin = make_spin_space(a, b);
  const ModeSet modes = line_modes({1.0, 1.7});
  const BasisPtr basis = enumerate_basis(2, 5);
  const OneParticleVector v = table_coupling(modes, {0.6, 0.4});
  const OneParticleVector g = vhm_ground_config(v, modes);
  const RenormalizedSb r = renormalized_sb(spin, modes, g, ChiKind::regular, basis);
  const RVec fock = second_quantization(modes.omegas(), basis).matrix.diagonal().real();
  std::vector<double> sums;
  for (double sa : {-1.0, 1.0})
    for (Eigen::Index j = 0; j < fock.size(); ++j) sums.push_back(sa + fock[j]);
  std::sort(sums.begin(), sums.end());
  double err = 0.0;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    err = std::max(err, std::abs(r.spectrum[i] - sums[i]));
    err = std::max(err, std::abs(r.dressed_spectrum[i] - sums[i]));
  }
  return {err <= kTol, "max spectral deviation " + sci(err)};
}

Outcome c10_identities() {
  constexpr double kTol = 1e-10;
  const SpinSpace spin = make_spin_space(pauli_z(), pauli_x());
  const ModeSet modes = line_modes({1.0, 1.5});
  const BasisPtr basis = enumerate_basis(2, 6);
  const OneParticleVector v = table_coupling(modes, {0.5, 0.3});
  const OneParticleVector g = vhm_ground_config(v, modes);
  const IdentityDefects d = sb_commutation_identities(spin, v, g, modes, basis);
  const double worst = std::max({d.number, d.coupling, d.exchange});
  return {worst <= kTol, "number " + sci(d.number) + ", coupling " + sci(d.coupling) +
                             ", exchange " + sci(d.exchange)};
}

Outcome c11_ir_catastrophe() {
  constexpr double kNumberTol = 1e-6;
  constexpr double kOverlapTol = 1e-8;
  const BasisPtr basis = enumerate_basis(1, 40);
  const FockOperator n = number_operator(basis);
  double num_err = 0.0, ov_err = 0.0;
  bool monotone = true;
  double prev_n = -1.0, prev_ov = 2.0;
  for (double x : {1.0, 2.0, 4.0, 8.0}) {
    OneParticleVector g(1);
    g[0] = std::sqrt(x);
    const CVec c = coherent_state(g, basis);
    const double nexp = c.dot(n.matrix * c).real();
    const double ov = std::abs(c[0]);
    num_err = std::max(num_err, std::abs(nexp - x));
    ov_err = std::max(ov_err, std::abs(ov - std::exp(-0.5 * x)));
    monotone = monotone && nexp > prev_n && ov < prev_ov;
    prev_n = nexp;
    prev_ov = ov;
  }
  return {num_err <= kNumberTol && ov_err <= kOverlapTol && monotone,
          "<N> error " + sci(num_err) + ", vacuum overlap error " + sci(ov_err) +
              (monotone ? ", strictly monotone" : ", NOT monotone")};
}

// Weisskopf–Wigner coupling on a fixed radial grid, switched on node by node
// as the infrared cutoff is lowered.
std::vector<double> sb_refinement_distances() {
  const ModeSet modes = radial_grid(GridKind::logarithmic, 4, 0.05, 2.0, 0.0);
  const BasisPtr basis = enumerate_basis(4, 4);
  const SpinSpace spin = make_spin_space(pauli_z(), pauli_x());
  const RVec k = modes.knorms();
  EmbeddedOperatorFamily family(2 * static_cast<Eigen::Index>(basis->dim()));
  for (int active = 1; active <= 4; ++active) {
    FormFactorSpec spec;
    spec.kind = FormFactorKind::weisskopf_wigner;
    spec.coupling = 0.3;
    spec.sigma = 2.0;
    spec.sigma0 = active == 4 ? 0.0 : 0.5 * (k[3 - active] + k[4 - active]);
    const OneParticleVector v = sample_form_factor(spec, modes);
    const OneParticleVector g = vhm_ground_config(v, modes);
    family.add(renormalized_sb(spin, modes, g, ChiKind::regular, basis).dressed);
  }
  return resolvent_distance(family, kI);
}

Outcome c12_generalized_convergence() {
  constexpr double kVhmTol = 1e-8;
  const ModeSet modes = radial_grid(GridKind::logarithmic, 3, 0.1, 3.0, 0.0);
  const BasisPtr basis = enumerate_basis(3, 5);
  EmbeddedOperatorFamily vhm(static_cast<Eigen::Index>(basis->dim()));
  for (double s0 : {1.0, 0.5, 0.2, 0.0}) {
    FormFactorSpec spec;
    spec.sigma = 3.0;
    spec.sigma0 = s0;
    spec.coupling = 0.2;
    const OneParticleVector g = vhm_ground_config(sample_form_factor(spec, modes), modes);
    const CMat t = renormalized_vhm(g, modes, basis).transported();
    vhm.add(0.5 * (t + t.adjoint()));
  }
  const std::vector<double> dv = resolvent_distance(vhm, kI);
  const double vhm_max = *std::max_element(dv.begin(), dv.end());

  const std::vector<double> ds = sb_refinement_distances();
  bool decreasing = true;
  for (std::size_t i = 0; i + 1 < ds.size(); ++i) decreasing = decreasing && ds[i] > ds[i + 1];
  std::string list;
  for (double d : ds) list += (list.empty() ? "" : ", ") + sci(d);
  return {vhm_max <= kVhmTol && decreasing,
          "vHM max distance " + sci(vhm_max) + "; SB distances [" + list + "]"};
}

Outcome c13_nelson_fiber() {
  constexpr double kMaxSeconds = 60.0;
  constexpr double kRawFactor = 10.0;
  const auto t0 = Clock::now();
  Eigen::VectorXd p0(1);
  p0 << 0.0;
  // σ refinement on a fixed grid: each doubling switches on one more cell.
  const ModeSet fixed = signed_grid_1d(GridKind::logarithmic, 3, 1.0, 8.0, 0.0);
  std::vector<FormFactorSpec> specs;
  for (double s : {2.0, 4.0, 8.0}) {
    FormFactorSpec spec;
    spec.sigma = s;
    spec.sigma0 = 1.0;
    specs.push_back(spec);
  }
  const auto uv = fiber_ir_sweep(p0, specs, {fixed, fixed, fixed}, 6);
  const double d1 = std::abs(uv[0].lambda0 - uv[1].lambda0);
  const double d2 = std::abs(uv[1].lambda0 - uv[2].lambda0);
  const double raw_drop = uv[0].raw_lambda0 - uv[2].raw_lambda0;
  const double variation = std::max(d1, d2);
  const bool uv_ok = d2 < d1 && raw_drop > kRawFactor * variation;

  Eigen::VectorXd p1(1);
  p1 << 0.4;
  std::vector<FormFactorSpec> ir_specs;
  std::vector<ModeSet> ir_modes;
  for (double s0 : {0.2, 0.1, 0.05}) {
    FormFactorSpec spec;
    spec.sigma = 2.0;
    spec.sigma0 = s0;
    ir_specs.push_back(spec);
    ir_modes.push_back(signed_grid_1d(GridKind::logarithmic, 3, s0, 2.0, 0.0));
  }
  const auto ir = fiber_ir_sweep(p1, ir_specs, ir_modes, 6);
  const bool ir_ok = ir[1].num_expect >= ir[0].num_expect && ir[2].num_expect >= ir[1].num_expect;
  const double secs = seconds_since(t0);
  return {uv_ok && ir_ok && secs < kMaxSeconds,
          "subtracted steps " + sci(d1) + ", " + sci(d2) + "; raw drop " + sci(raw_drop) +
              "; <N> " + sci(ir[0].num_expect) + ", " + sci(ir[1].num_expect) + ", " +
              sci(ir[2].num_expect) + "; " + sci(secs) + " s"};
}

Outcome c14_pull_through() {
  constexpr double kTol = 1e-6;
  const SpinSpace spin = make_spin_space(pauli_z(), pauli_x());
  const ModeSet modes = line_modes({1.0});
  const BasisPtr basis = enumerate_basis(1, 14);
  const OneParticleVector v = table_coupling(modes, {0.4});
  const SpMat h = assemble_sb(spin, v, modes, basis);
  SolverOptions opts;
  opts.tol = 1e-10;
  const Eigenpairs ep = lowest_eigenpairs(h, 1, opts);
  const PullThroughResult r =
      pull_through_residual(spin, v, modes, basis, ep.values[0], ep.vectors.col(0));
  return {r.max_residual <= kTol,
          "max residual " + sci(r.max_residual) + ", a priori bound " + sci(r.bound)};
}

}  // namespace

bool run_acceptance_suite(std::ostream& out) {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"vhm ground energy", c01_vhm_energy},
      {"coherent ground state", c02_coherent_ground_state},
      {"exponential-vector eigenrelation", c03_exponential_eigenrelation},
      {"metric unipotence and group laws", c04_metric_unipotence},
      {"mollified inner-product identity", c05_mollified_identity},
      {"self-energy closed form", c06_self_energy},
      {"DOI recovery and decomposability bound", c07_doi},
      {"standard spin-boson vanishing", c08_standard_sb},
      {"energy-preserving spin-boson spectrum", c09_energy_preserving_sb},
      {"spin-boson operator identities", c10_identities},
      {"infrared catastrophe trends", c11_ir_catastrophe},
      {"generalized resolvent convergence", c12_generalized_convergence},
      {"Nelson fiber cutoff sweeps", c13_nelson_fiber},
      {"pull-through residual", c14_pull_through},
  };
  const auto t0 = Clock::now();
  bool all = true;
  int index = 0;
  for (const auto& [name, fn] : criteria) {
    ++index;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    all = all && o.pass;
    out << (o.pass ? "PASS" : "FAIL") << " [" << std::setw(2) << index << "] " << name << ": "
        << o.detail << "\n";
    out.flush();
  }
  out << (all ? "ALL PASS" : "SOME FAILED") << " in " << std::fixed << std::setprecision(2)
      << seconds_since(t0) << " s\n";
  return all;
}

}  // namespace renormfock
