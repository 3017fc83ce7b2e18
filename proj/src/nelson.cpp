#include "renormfock/nelson.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "renormfock/errors.hpp"

namespace renormfock {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double spectral_norm(const CMat& m) {
  return Eigen::BDCSVD<CMat>(m).singularValues()(0);
}

CMat shifted_inverse(const SpMat& k, double e, cplx z) {
  CMat m = CMat(k);
  m.diagonal().array() += z - e;
  return m.partialPivLu().inverse();
}

}  // namespace

bool same_modes(const ModeSet& a, const ModeSet& b) {
  if (a.size() != b.size() || a.dimension != b.dimension || a.mass != b.mass) return false;
  for (int i = 0; i < a.size(); ++i) {
    if (a.nodes[i] != b.nodes[i] || a.weights[i] != b.weights[i]) return false;
  }
  return true;
}

RVec free_fiber_diagonal(const Eigen::Vector3d& P, const ModeSet& modes,
                         const FockBasis& basis) {
  if (modes.radial) {
    throw ShapeError("fiber Hamiltonians need vector momenta; radial grids are not allowed");
  }
  RVec d(basis.dim());
  const RVec w = modes.omegas();
  for (std::size_t j = 0; j < basis.dim(); ++j) {
    const auto o = basis.occupation(j);
    Eigen::Vector3d q = P;
    double e = 0.0;
    for (int i = 0; i < modes.size(); ++i) {
      q -= modes.nodes[i] * o[i];
      e += w[i] * o[i];
    }
    d[j] = q.head(modes.dimension).squaredNorm() + e;
  }
  return d;
}

FiberModel assemble_fiber(const Eigen::VectorXd& P, const FormFactorSpec& spec,
                          const ModeSet& modes, const BasisPtr& basis) {
  if (P.size() != modes.dimension) {
    throw ShapeError("total momentum has " + std::to_string(P.size()) +
                     " components for a " + std::to_string(modes.dimension) +
                     "-dimensional mode set");
  }
  if (basis->modes() != modes.size()) throw ShapeError("mode set does not match the basis");
  FiberModel m;
  m.modes = modes;
  m.basis = basis;
  m.P.setZero();
  m.P.head(P.size()) = P;
  m.spec = spec;
  m.v = sample_form_factor(spec, modes);
  const RVec diag = free_fiber_diagonal(m.P, modes, *basis);
  SpMat k(basis->dim(), basis->dim());
  std::vector<Triplet> t;
  for (std::size_t j = 0; j < basis->dim(); ++j) t.emplace_back(j, j, diag[j]);
  k.setFromTriplets(t.begin(), t.end());
  k += creator(m.v, basis).matrix;
  k += annihilator(m.v, basis).matrix;
  k.makeCompressed();
  m.K = k;
  m.E_counterterm = self_energy(spec, modes);
  return m;
}

int required_cap(double x, double tol) {
  int n = 0;
  while (poisson_tail(x, n) > tol && n < 100000) ++n;
  return n;
}

DressedFiber dressed_fiber(const FiberModel& model, double sigma0_prime, int k_compare,
                           double tail_tolerance, const SolverOptions& opts) {
  DressedFiber out;
  const OneParticleVector g = gross_config(model.v, model.modes);
  out.h = OneParticleVector::Zero(g.size());
  for (int i = 0; i < g.size(); ++i) {
    if (model.modes.knorm(i) > sigma0_prime) out.h[i] = g[i];
  }
  const double x = out.h.squaredNorm();
  out.tail_bound = poisson_tail(x, model.basis->cap());
  if (out.tail_bound > tail_tolerance) {
    std::ostringstream os;
    os << "dressing tail " << out.tail_bound << " exceeds " << tail_tolerance
       << "; N_max = " << required_cap(x, tail_tolerance) << " is required";
    throw PreconditionError(os.str());
  }
  SpMat shifted = model.K;
  SpMat id(shifted.rows(), shifted.cols());
  id.setIdentity();
  shifted -= model.E_counterterm * id;
  const Displacement w = displacement(out.h, model.basis, 0, tail_tolerance);
  out.op = SpMat(SpMat(w.op.matrix.adjoint()) * shifted) * w.op.matrix;
  out.op = 0.5 * (out.op + SpMat(out.op.adjoint()));
  out.op.makeCompressed();

  const int k = std::min<int>(k_compare, static_cast<int>(shifted.rows()));
  const Eigenpairs a = lowest_eigenpairs(out.op, k, opts);
  const Eigenpairs b = lowest_eigenpairs(shifted, k, opts);
  for (int i = 0; i < k; ++i) {
    out.spectra_gap = std::max(out.spectra_gap, std::abs(a.values[i] - b.values[i]));
  }
  return out;
}

std::vector<FiberSweepPoint> fiber_ir_sweep(const Eigen::VectorXd& P,
                                            const std::vector<FormFactorSpec>& specs,
                                            const std::vector<ModeSet>& modes,
                                            int nmax, const SolverOptions& opts,
                                            cplx z) {
  if (specs.size() != modes.size() || specs.empty()) {
    throw PreconditionError("sweep sequences must be nonempty and aligned");
  }
  std::vector<FiberSweepPoint> out;
  std::vector<FiberModel> models;
  std::vector<CVec> ground;
  for (std::size_t a = 0; a < specs.size(); ++a) {
    const BasisPtr basis = enumerate_basis(modes[a].size(), nmax);
    FiberModel m = assemble_fiber(P, specs[a], modes[a], basis);
    const Eigenpairs ep = lowest_eigenpairs(m.K, 2, opts);
    const CVec x0 = ep.vectors.col(0);
    FiberSweepPoint p;
    p.raw_lambda0 = ep.values[0];
    p.counterterm = m.E_counterterm;
    p.lambda0 = ep.values[0] - m.E_counterterm;
    p.gap = ep.values.size() > 1 ? ep.values[1] - ep.values[0] : kNaN;
    p.num_expect = x0.dot(number_operator(basis).matrix * x0).real();
    p.vac_overlap = std::abs(x0[0]);
    p.overlap_prev = kNaN;
    if (a > 0 && same_modes(modes[a], modes[a - 1])) {
      p.overlap_prev = std::abs(ground.back().dot(x0));
    }
    p.tail_bound = poisson_tail(gross_config(m.v, m.modes).squaredNorm(), nmax);
    p.dim = static_cast<int>(basis->dim());
    out.push_back(p);
    ground.push_back(x0);
    models.push_back(std::move(m));
  }
  const FiberModel& last = models.back();
  const bool small = last.basis->dim() <= 2500;
  CMat r_last;
  if (small) r_last = shifted_inverse(last.K, last.E_counterterm, z);
  for (std::size_t a = 0; a < models.size(); ++a) {
    if (!small || !same_modes(models[a].modes, last.modes)) {
      out[a].resolvent_gap = kNaN;
      continue;
    }
    out[a].resolvent_gap = a + 1 == models.size()
        ? 0.0
        : spectral_norm(shifted_inverse(models[a].K, models[a].E_counterterm, z) - r_last);
  }
  return out;
}

}  // namespace renormfock
