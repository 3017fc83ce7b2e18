#include "renormfock/spinboson.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "renormfock/errors.hpp"

namespace renormfock {

namespace {

using ColSp = Eigen::SparseMatrix<cplx, Eigen::ColMajor>;

CMat hermitian_expm(const CMat& h, double t) {
  Eigen::SelfAdjointEigenSolver<CMat> es(0.5 * (h + h.adjoint()));
  const RVec w = (es.eigenvalues() * t).array().exp();
  return es.eigenvectors() * w.asDiagonal() * es.eigenvectors().adjoint();
}

double op_norm(const CMat& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::JacobiSVD<CMat>(m).singularValues()(0);
}

SpMat identity(Eigen::Index n) {
  SpMat i(n, n);
  i.setIdentity();
  return i;
}

void check_spin_shapes(const SpinSpace& spin, const OneParticleVector& v,
                       const BasisPtr& basis) {
  if (v.size() != basis->modes()) {
    throw ShapeError("one-particle vector does not match the Fock basis");
  }
  if (spin.A.rows() != spin.dim || spin.B.rows() != spin.dim) {
    throw ShapeError("spin matrices do not match the spin dimension");
  }
}

// Norm of the spin ⊗ grade-n block, summed over the spin index.
std::vector<double> sb_grade_norms(const CVec& psi, int s, const FockBasis& b) {
  std::vector<double> out(b.cap() + 1, 0.0);
  const auto d = static_cast<Eigen::Index>(b.dim());
  for (int a = 0; a < s; ++a) {
    const auto g = grade_norms(psi.segment(a * d, d), b);
    for (int n = 0; n <= b.cap(); ++n) out[n] += g[n] * g[n];
  }
  for (double& x : out) x = std::sqrt(x);
  return out;
}

int sb_max_grade(const CVec& psi, int s, const FockBasis& b) {
  const auto d = static_cast<Eigen::Index>(b.dim());
  int g = -1;
  for (int a = 0; a < s; ++a) g = std::max(g, max_grade(psi.segment(a * d, d), b));
  return g;
}

// Zero every component whose Fock grade exceeds n.
CVec keep_grades(const CVec& psi, int s, const FockBasis& b, int n) {
  CVec out = psi;
  const auto d = static_cast<Eigen::Index>(b.dim());
  const auto cut = static_cast<Eigen::Index>(b.dim_up_to(n));
  for (int a = 0; a < s; ++a) out.segment(a * d + cut, d - cut).setZero();
  return out;
}

// Grades agree across caps, so lifting is zero padding per spin block.
CVec lift(const CVec& psi, int s, const FockBasis& small, const FockBasis& big) {
  const auto ds = static_cast<Eigen::Index>(small.dim());
  const auto db = static_cast<Eigen::Index>(big.dim());
  CVec out = CVec::Zero(s * db);
  for (int a = 0; a < s; ++a) out.segment(a * db, ds) = psi.segment(a * ds, ds);
  return out;
}

CVec restrict_to(const CVec& psi, int s, const FockBasis& small, const FockBasis& big) {
  const auto ds = static_cast<Eigen::Index>(small.dim());
  const auto db = static_cast<Eigen::Index>(big.dim());
  CVec out(s * ds);
  for (int a = 0; a < s; ++a) out.segment(a * ds, ds) = psi.segment(a * db, ds);
  return out;
}

// Σ_k X^k ψ / k! until the terms vanish (X nilpotent) or max_power.
CVec apply_exp(const SpMat& x, const CVec& psi, int max_power) {
  CVec sum = psi, term = psi;
  for (int k = 1; k <= max_power; ++k) {
    term = (x * term) / double(k);
    if (term.squaredNorm() == 0.0) break;
    sum += term;
  }
  return sum;
}

}  // namespace

CMat pauli_x() {
  CMat m(2, 2);
  m << 0, 1, 1, 0;
  return m;
}

CMat pauli_y() {
  CMat m(2, 2);
  m << 0, cplx(0, -1), cplx(0, 1), 0;
  return m;
}

CMat pauli_z() {
  CMat m(2, 2);
  m << 1, 0, 0, -1;
  return m;
}

SpinSpace make_spin_space(const CMat& a, const CMat& b, int spin_cap, double tol_eig) {
  if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows() ||
      a.rows() == 0) {
    throw ShapeError("spin matrices A and B must be square and of equal size");
  }
  if (a.rows() > spin_cap) {
    throw CapacityError("spin dimension " + std::to_string(a.rows()) +
                        " exceeds the cap " + std::to_string(spin_cap));
  }
  const double scale = std::max(1.0, a.cwiseAbs().maxCoeff());
  if ((a - a.adjoint()).cwiseAbs().maxCoeff() > 1e-12 * scale) {
    throw ConfigError("spin matrix A must be Hermitian");
  }
  SpinSpace s;
  s.dim = static_cast<int>(a.rows());
  s.A = a;
  s.B = b;
  s.dec_B = spectral_decompose(b, tol_eig);
  return s;
}

SpMat kron(const CMat& s, const SpMat& f) {
  std::vector<Triplet> t;
  t.reserve(static_cast<std::size_t>(f.nonZeros() * s.size()));
  for (Eigen::Index a = 0; a < s.rows(); ++a)
    for (Eigen::Index b = 0; b < s.cols(); ++b) {
      const cplx sab = s(a, b);
      if (sab == cplx(0.0)) continue;
      for (Eigen::Index r = 0; r < f.outerSize(); ++r)
        for (SpMat::InnerIterator it(f, r); it; ++it)
          t.emplace_back(a * f.rows() + it.row(), b * f.cols() + it.col(),
                         sab * it.value());
    }
  SpMat m(s.rows() * f.rows(), s.cols() * f.cols());
  m.setFromTriplets(t.begin(), t.end());
  m.makeCompressed();
  return m;
}

SpMat assemble_sb(const SpinSpace& spin, const OneParticleVector& v,
                  const ModeSet& modes, const BasisPtr& basis) {
  check_spin_shapes(spin, v, basis);
  if (modes.size() != basis->modes()) throw ShapeError("mode set does not match the basis");
  const SpMat idf = identity(static_cast<Eigen::Index>(basis->dim()));
  const CMat ids = CMat::Identity(spin.dim, spin.dim);
  SpMat h = kron(spin.A, idf);
  h += kron(ids, second_quantization(modes.omegas(), basis).matrix);
  h += kron(spin.B, creator(v, basis).matrix);
  h += kron(spin.B.adjoint(), annihilator(v, basis).matrix);
  h.makeCompressed();
  const double defect = hermiticity_defect(h);
  if (defect > 1e-12 * std::max(1.0, max_abs(h))) {
    throw Error("assembled spin-boson Hamiltonian is not Hermitian");
  }
  return h;
}

SpMat sb_dress_lower(const SpinSpace& spin, const OneParticleVector& g,
                     const BasisPtr& basis) {
  check_spin_shapes(spin, g, basis);
  const SpMat x = kron(spin.B.adjoint(), annihilator(g, basis).matrix);
  return nilpotent_exp(x, basis->cap());
}

SpMat sb_transfer(const SpinSpace& spin, const OneParticleVector& g,
                  const OneParticleVector& g2, const BasisPtr& basis) {
  if (g.size() != g2.size()) throw ShapeError("configurations differ in length");
  return sb_dress_lower(spin, g - g2, basis);
}

RenormMetric sb_metric(const SpinSpace& spin, const OneParticleVector& g,
                       const BasisPtr& basis) {
  return metric_from_dressing(sb_dress_lower(spin, g, basis), g);
}

RenormSpinMatrix renorm_spin_matrix(const SpinSpace& spin, const OneParticleVector& g,
                                    ChiKind kind, const BasisPtr& basis,
                                    const RenormMetric& metric) {
  check_spin_shapes(spin, g, basis);
  const auto& dec = spin.dec_B;
  const DOIKernel chi = kind == ChiKind::regular ? DOIKernel::chi_regular(g.squaredNorm())
                                                 : DOIKernel::chi_singular(dec);
  // E_c = e^{conj(c) a(g)} = e^{a(c g)} for every cluster value c.
  std::vector<CMat> e;
  for (cplx c : dec.eigenvalues) {
    e.push_back(CMat(dress_lower(c * g, basis).matrix));
  }
  const Eigen::Index df = static_cast<Eigen::Index>(basis->dim());
  const Eigen::Index n = spin.dim * df;
  RenormSpinMatrix out;
  out.form = CMat::Zero(n, n);
  for (int i = 0; i < dec.clusters(); ++i) {
    for (int j = 0; j < dec.clusters(); ++j) {
      const cplx w = chi(dec.eigenvalues[i], dec.eigenvalues[j]);
      if (w == cplx(0.0)) continue;
      const CMat s = dec.projections[i] * spin.A * dec.projections[j];
      if (s.cwiseAbs().maxCoeff() == 0.0) continue;
      const CMat f = e[j].adjoint() * e[i];
      for (int a = 0; a < spin.dim; ++a)
        for (int b = 0; b < spin.dim; ++b) {
          if (s(a, b) == cplx(0.0)) continue;
          out.form.block(a * df, b * df, df, df) += (w * s(a, b)) * f;
        }
    }
  }
  out.form = 0.5 * (out.form + out.form.adjoint()).eval();
  out.op = metric.solve(out.form);
  return out;
}

CMat dressed_diag(const SpinSpace& spin, const CMat& t, const OneParticleVector& g,
                  const BasisPtr& basis) {
  if (t.rows() != spin.dim || t.cols() != spin.dim) throw ShapeError("T must be s x s");
  const SpMat d = sb_dress_lower(spin, g, basis);
  const SpMat d_inv = sb_dress_lower(spin, -g, basis);
  const SpMat tt = kron(t, identity(static_cast<Eigen::Index>(basis->dim())));
  return CMat(SpMat(d_inv * tt) * d);
}

RenormalizedSb renormalized_sb(const SpinSpace& spin, const ModeSet& modes,
                               const OneParticleVector& g, ChiKind kind,
                               const BasisPtr& basis) {
  check_spin_shapes(spin, g, basis);
  RenormalizedSb r;
  r.metric = sb_metric(spin, g, basis);
  const RenormSpinMatrix a = renorm_spin_matrix(spin, g, kind, basis, r.metric);
  const SpMat dg = kron(CMat::Identity(spin.dim, spin.dim),
                        second_quantization(modes.omegas(), basis).matrix);
  const CMat d = CMat(r.metric.D);
  const CMat dgd = dg * d;
  r.form = a.form + d.adjoint() * dgd;
  r.form = 0.5 * (r.form + r.form.adjoint()).eval();
  r.op = r.metric.solve(r.form);

  const SpMat d_inv = sb_dress_lower(spin, -g, basis);
  const CMat dinv = CMat(d_inv);
  r.dressed = CMat(dg) + dinv.adjoint() * a.form * dinv;
  r.dressed = 0.5 * (r.dressed + r.dressed.adjoint()).eval();

  r.spectrum = hermitian_spectrum(r.metric.whiten(r.form));
  r.dressed_spectrum = hermitian_spectrum(r.dressed);
  return r;
}

namespace {

CMat energy_renormalized_dense(const SpinSpace& spin, const OneParticleVector& v,
                               const ModeSet& modes, const BasisPtr& basis) {
  const double shift = infrared_norm2(v, modes);
  if (!std::isfinite(shift)) {
    throw SingularConfigError("||v/sqrt(omega)|| is infinite on this grid");
  }
  SpMat h = assemble_sb(spin, v, modes, basis);
  h += shift * kron(spin.B.adjoint() * spin.B,
                    identity(static_cast<Eigen::Index>(basis->dim())));
  return CMat(h);
}

CMat resolvent(const CMat& h, cplx z) {
  const CMat m = h + z * CMat::Identity(h.rows(), h.cols());
  return m.partialPivLu().inverse();
}

}  // namespace

EnergyRenormTable energy_renorm_sb(const SpinSpace& spin,
                                   const std::vector<OneParticleVector>& v_sequence,
                                   const ModeSet& modes, const BasisPtr& basis,
                                   cplx z) {
  if (v_sequence.empty()) throw PreconditionError("empty form factor sequence");
  if (z.imag() == 0.0) throw ShiftError("resolvent shift must be nonreal");
  std::vector<CMat> h;
  for (const auto& v : v_sequence) h.push_back(energy_renormalized_dense(spin, v, modes, basis));
  const CMat r_final = resolvent(h.back(), z);
  EnergyRenormTable t;
  for (const auto& hm : h) {
    EnergyRenormRow row;
    row.lambda0 = hermitian_spectrum(hm)[0];
    row.resolvent_gap = op_norm(resolvent(hm, z) - r_final);
    t.rows.push_back(row);
  }
  for (std::size_t i = 1; i < t.rows.size(); ++i) {
    if (t.rows[i].resolvent_gap > t.rows[i - 1].resolvent_gap) t.monotone = false;
  }
  return t;
}

PerturbationBound energy_renorm_perturbation(const SpinSpace& spin,
                                             const OneParticleVector& v1,
                                             const OneParticleVector& v2,
                                             const ModeSet& modes,
                                             const BasisPtr& basis, cplx z) {
  if (z.imag() == 0.0) throw ShiftError("resolvent shift must be nonreal");
  const CMat h1 = energy_renormalized_dense(spin, v1, modes, basis);
  const CMat h2 = energy_renormalized_dense(spin, v2, modes, basis);
  PerturbationBound p;
  p.gap = op_norm(resolvent(h1, z) - resolvent(h2, z));
  p.bound = op_norm(h1 - h2) / (z.imag() * z.imag());
  const double dn = (v1 - v2).norm();
  p.constant = dn > 0.0 ? p.bound / dn : 0.0;
  return p;
}

PullThroughResult pull_through_residual(const SpinSpace& spin,
                                        const OneParticleVector& v,
                                        const ModeSet& modes, const BasisPtr& basis,
                                        double lambda0, const CVec& psi,
                                        double pair_tol) {
  const SpMat h = assemble_sb(spin, v, modes, basis);
  if (psi.size() != h.rows()) throw ShapeError("state does not match the spin-boson space");
  PullThroughResult out;
  out.pair_residual = (h * psi - lambda0 * psi).norm();
  if (out.pair_residual > pair_tol * (std::abs(lambda0) + 1.0) ||
      std::abs(psi.norm() - 1.0) > 1e-8) {
    std::ostringstream os;
    os << "pull-through test needs a converged normalized eigenpair (residual "
       << out.pair_residual << ")";
    throw PreconditionError(os.str());
  }
  const auto& b = *basis;
  const int s = spin.dim;
  const int n_cap = b.cap();
  {
    const auto norms = sb_grade_norms(psi, s, b);
    out.top_grade_weight = norms[n_cap];
  }
  const ColSp hc = h;
  ColSp id(h.rows(), h.cols());
  id.setIdentity();
  const CVec bpsi = kron(spin.B, identity(static_cast<Eigen::Index>(b.dim()))) * psi;
  const double bnorm = op_norm(spin.B);
  const double vnorm = v.norm();
  const CMat ids = CMat::Identity(s, s);
  for (int i = 0; i < b.modes(); ++i) {
    OneParticleVector e = OneParticleVector::Zero(b.modes());
    e[i] = 1.0;
    const SpMat bi = kron(ids, annihilator(e, basis).matrix);
    const double w = modes.omega(i);
    if (w <= 0.0) throw SingularConfigError("pull-through test needs omega > 0");
    Eigen::SparseLU<ColSp> lu;
    lu.compute(hc - (lambda0 - w) * id);
    if (lu.info() != Eigen::Success) throw SolverError("shifted Hamiltonian is singular");
    const CVec y = lu.solve(bpsi);
    const double r = (bi * psi + v[i] * y).norm();
    out.residuals.push_back(r);
    out.max_residual = std::max(out.max_residual, r);
    const double c_pair = std::sqrt(double(n_cap)) / w;
    const double c_trunc = bnorm * (n_cap * vnorm + std::abs(v[i])) / w;
    out.constant = std::max(out.constant, std::max(c_pair, c_trunc));
    const double rounding =
        64.0 * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(v[i]) * bnorm / w);
    out.bound = std::max(out.bound, c_pair * out.pair_residual +
                                        c_trunc * out.top_grade_weight + rounding);
  }
  return out;
}

CVec random_sb_vector(int spin_dim, const FockBasis& basis, int max_grade,
                      std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd;
  const auto d = static_cast<Eigen::Index>(basis.dim());
  const auto cut = static_cast<Eigen::Index>(basis.dim_up_to(max_grade));
  CVec psi = CVec::Zero(spin_dim * d);
  for (int a = 0; a < spin_dim; ++a)
    for (Eigen::Index j = 0; j < cut; ++j) psi[a * d + j] = cplx(nd(rng), nd(rng));
  psi.normalize();
  return psi;
}

IdentityDefects sb_commutation_identities(const SpinSpace& spin,
                                          const OneParticleVector& v,
                                          const OneParticleVector& g,
                                          const ModeSet& modes, const BasisPtr& basis,
                                          std::uint64_t seed) {
  check_spin_shapes(spin, g, basis);
  check_spin_shapes(spin, v, basis);
  const auto& b = *basis;
  const int s = spin.dim;
  const int n_cap = b.cap();
  if (n_cap < 2) throw PreconditionError("identity checks need N_max >= 2");
  const CMat ids = CMat::Identity(s, s);
  const auto df = static_cast<Eigen::Index>(b.dim());
  const CVec psi = random_sb_vector(s, b, n_cap - 2, seed);

  IdentityDefects out;
  const SpMat x = kron(spin.B, creator(g, basis).matrix);
  const SpMat dg = kron(ids, second_quantization(modes.omegas(), basis).matrix);

  {
    OneParticleVector wg = g;
    for (int i = 0; i < g.size(); ++i) wg[i] *= modes.omega(i);
    const SpMat shift = kron(spin.B, creator(wg, basis).matrix);
    const CVec lhs = dg * apply_exp(x, psi, n_cap);
    const CVec rhs = apply_exp(x, CVec(dg * psi + shift * psi), n_cap);
    out.number = (lhs - rhs).cwiseAbs().maxCoeff();
  }
  {
    const SpMat field = SpMat(kron(spin.B, creator(v, basis).matrix)) +
                        SpMat(kron(spin.B.adjoint(), annihilator(v, basis).matrix));
    const cplx c = v.dot(g);
    const SpMat btb = kron(spin.B.adjoint() * spin.B, identity(df));
    const CVec lhs = field * apply_exp(x, psi, n_cap);
    const CVec rhs = apply_exp(x, CVec(field * psi + c * (btb * psi)), n_cap);
    const CVec diff = keep_grades(lhs - rhs, s, b, n_cap - 1);
    out.coupling = diff.cwiseAbs().maxCoeff();
  }
  {
    const double bg = op_norm(spin.B) * g.norm();
    const int pad = 24 + static_cast<int>(std::ceil(8.0 * bg * bg));
    out.padding = pad;
    const BasisPtr big = enumerate_basis(b.modes(), n_cap + pad);
    const CVec p = lift(psi, s, b, *big);
    const SpMat xp = kron(spin.B, creator(g, big).matrix);
    const SpMat yp = kron(spin.B.adjoint(), annihilator(g, big).matrix);
    const int top = n_cap + pad;
    const CVec lhs = apply_exp(yp, apply_exp(xp, p, top), top);
    const CMat spin_factor = hermitian_expm(spin.B.adjoint() * spin.B, g.squaredNorm());
    const SpMat sf = kron(spin_factor, identity(static_cast<Eigen::Index>(big->dim())));
    const CVec rhs = sf * apply_exp(xp, apply_exp(yp, p, top), top);
    const CVec diff = restrict_to(lhs - rhs, s, b, *big);
    out.exchange = diff.cwiseAbs().maxCoeff();
  }
  return out;
}

CMat sb_interacting_field(const SpinSpace& spin, const OneParticleVector& g,
                          const OneParticleVector& f, FieldKind kind,
                          const BasisPtr& basis) {
  check_spin_shapes(spin, g, basis);
  const cplx gf = g.dot(f);
  const double shift = kind == FieldKind::position ? std::sqrt(2.0) * gf.real()
                                                   : std::sqrt(2.0) * gf.imag();
  const auto df = static_cast<Eigen::Index>(basis->dim());
  SpMat inner = kron(CMat::Identity(spin.dim, spin.dim), free_field(f, kind, basis).matrix);
  inner += shift * kron(spin.B.adjoint() * spin.B, identity(df));
  const SpMat d = sb_dress_lower(spin, g, basis);
  const SpMat d_inv = sb_dress_lower(spin, -g, basis);
  return CMat(SpMat(d_inv * inner) * d);
}

MollifiedCheck sb_mollified_inner_check(const CVec& psi, const CVec& phi,
                                        const SpinSpace& spin,
                                        const OneParticleVector& g,
                                        const RenormMetric& metric,
                                        const BasisPtr& basis) {
  check_spin_shapes(spin, g, basis);
  const auto& b = *basis;
  const int s = spin.dim;
  const int budget = b.cap() / 2;
  const int gp = sb_max_grade(psi, s, b), gf = sb_max_grade(phi, s, b);
  if (gp > budget || gf > budget) {
    throw PreconditionError("mollified check needs inputs on grades <= " +
                            std::to_string(budget));
  }
  MollifiedCheck out;
  out.lhs = metric.inner(psi, phi);
  const double x = g.squaredNorm();
  const SpMat xop = kron(spin.B, creator(g, basis).matrix);
  const CMat sfac = hermitian_expm(spin.B.adjoint() * spin.B, -0.5 * x);
  const SpMat smat = kron(sfac, identity(static_cast<Eigen::Index>(b.dim())));
  const CVec up_psi = smat * apply_exp(xop, psi, b.cap());
  const CVec up_phi = smat * apply_exp(xop, phi, b.cap());
  out.rhs = up_psi.dot(up_phi);
  out.gap = std::abs(out.lhs - out.rhs);

  const double c = op_norm(spin.B) * g.norm();
  const auto tp = raising_tail_norms(c, sb_grade_norms(psi, s, b), b.cap());
  const auto tf = raising_tail_norms(c, sb_grade_norms(phi, s, b), b.cap());
  double err = 0.0;
  for (std::size_t i = 0; i < std::min(tp.size(), tf.size()); ++i) err += tp[i] * tf[i];
  const double rounding = 16.0 * std::numeric_limits<double>::epsilon() *
                          (8.0 + std::sqrt(double(psi.size()))) *
                          (std::abs(out.lhs) + metric.norm(psi) * metric.norm(phi) +
                           up_psi.norm() * up_phi.norm());
  out.bound = err + rounding;
  return out;
}

}  // namespace renormfock
