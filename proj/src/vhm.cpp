#include "renormfock/vhm.hpp"

#include <cmath>
#include <limits>

#include "renormfock/errors.hpp"

namespace renormfock {

VhmModel assemble_vhm(const OneParticleVector& v, const ModeSet& modes,
                      const BasisPtr& basis) {
  if (v.size() != modes.size() || basis->modes() != modes.size()) {
    throw ShapeError("vHM inputs disagree on the number of modes");
  }
  VhmModel m;
  m.modes = modes;
  m.basis = basis;
  m.v = v;
  SpMat h = second_quantization(modes.omegas(), basis).matrix;
  h += creator(v, basis).matrix;
  h += annihilator(v, basis).matrix;
  h.makeCompressed();
  m.H = {basis, h, std::nullopt, true};
  m.ground_energy_formula = -infrared_norm2(v, modes);
  return m;
}

Eigenpairs ground_state(const VhmModel& model, int k_lowest, double tol,
                        SolverOptions opts) {
  opts.tol = tol;
  return lowest_eigenpairs(model.H.matrix, k_lowest, opts);
}

DiagonalizationCheck check_diagonalization(const VhmModel& model, int budget) {
  const auto& b = *model.basis;
  const OneParticleVector g = vhm_ground_config(model.v, model.modes);
  const Displacement disp = displacement(g, model.basis, budget);
  const SpMat& w = disp.op.matrix;
  const double e_shift = -model.ground_energy_formula;
  const RVec omega = model.modes.omegas();
  const std::size_t k = b.dim_up_to(budget);
  const double vnorm = model.v.norm();
  const double edge = vnorm * std::sqrt(b.cap() + 1.0);
  const auto top = static_cast<Eigen::Index>(b.grade_begin(b.cap()));
  const auto end = static_cast<Eigen::Index>(b.dim());

  double hnorm = 0.0;
  for (Eigen::Index r = 0; r < model.H.matrix.outerSize(); ++r) {
    double s = 0.0;
    for (SpMat::InnerIterator it(model.H.matrix, r); it; ++it) s += std::abs(it.value());
    hnorm = std::max(hnorm, s);
  }

  std::vector<CVec> wcol(k), hwcol(k);
  std::vector<double> eps(k), edge_norm(k);
  for (std::size_t j = 0; j < k; ++j) {
    CVec e = CVec::Zero(b.dim());
    e[j] = 1.0;
    wcol[j] = w * e;
    hwcol[j] = model.H.matrix * wcol[j];
    double ej = 0.0;
    const auto o = b.occupation(j);
    for (int i = 0; i < b.modes(); ++i) ej += omega[i] * o[i];
    eps[j] = ej - e_shift;
    edge_norm[j] = wcol[j].segment(top, end - top).norm();
  }
  DiagonalizationCheck out;
  const double u = std::numeric_limits<double>::epsilon();
  for (std::size_t i = 0; i < k; ++i) {
    for (std::size_t j = 0; j < k; ++j) {
      const cplx y = wcol[i].dot(hwcol[j]) - (i == j ? eps[j] : 0.0);
      out.defect = std::max(out.defect, std::abs(y));
      const double ti = disp.leak[i], tj = disp.leak[j];
      const double rounding = 16.0 * u * (8.0 + std::sqrt(double(b.dim()))) *
                              (hnorm * wcol[i].norm() * wcol[j].norm() +
                               std::abs(eps[j]));
      out.bound = std::max(out.bound, std::abs(eps[j]) * ti * tj +
                                          edge * edge_norm[i] * tj + rounding);
    }
  }
  return out;
}

CMat RenormalizedOperator::transported() const {
  const CMat d = CMat(metric.D);
  // D X D^{-1}; D is unit triangular, so the solve is exact up to rounding.
  CMat dx = d * op;
  d.triangularView<Eigen::Upper>().solveInPlace<Eigen::OnTheRight>(dx);
  return dx;
}

RenormalizedOperator renormalized_vhm(const OneParticleVector& g,
                                      const ModeSet& modes, const BasisPtr& basis) {
  if (g.size() != modes.size()) throw ShapeError("g does not match the mode set");
  RenormalizedOperator r;
  r.metric = renorm_metric(g, basis);
  const SpMat dg = second_quantization(modes.omegas(), basis).matrix;
  const SpMat d_inv = dress_lower(-g, basis).matrix;
  const CMat d = CMat(r.metric.D);
  const CMat dgd = dg * d;
  r.form = d.adjoint() * dgd;
  r.form = 0.5 * (r.form + r.form.adjoint()).eval();
  r.op = d_inv * dgd;
  return r;
}

}  // namespace renormfock
