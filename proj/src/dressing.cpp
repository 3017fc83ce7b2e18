#include "renormfock/dressing.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "renormfock/errors.hpp"

namespace renormfock {

FockOperator dress_lower(const OneParticleVector& g, const BasisPtr& basis) {
  const SpMat a = annihilator(g, basis).matrix;
  return {basis, nilpotent_exp(a, basis->cap()), std::nullopt, false};
}

double RenormMetric::norm(const CVec& psi) const {
  return std::sqrt(std::max(0.0, inner(psi, psi).real()));
}

CMat RenormMetric::whiten(const CMat& form) const {
  const auto tri = L.triangularView<Eigen::Lower>();
  CMat y = tri.solve(form);
  // y L^{-†} = (L^{-1} y†)†
  CMat z = tri.solve(y.adjoint());
  return z.adjoint();
}

CMat RenormMetric::solve(const CMat& form) const {
  const auto tri = L.triangularView<Eigen::Lower>();
  CMat y = tri.solve(form);
  return L.adjoint().triangularView<Eigen::Upper>().solve(y);
}

double RenormMetric::log_det() const {
  double s = 0.0;
  for (Eigen::Index i = 0; i < L.rows(); ++i) s += 2.0 * std::log(std::abs(L(i, i)));
  return s;
}

namespace {

double estimate_condition(const CMat& g, const Eigen::LLT<CMat>* llt) {
  const Eigen::Index n = g.rows();
  if (n <= 400) {
    Eigen::SelfAdjointEigenSolver<CMat> es(g, Eigen::EigenvaluesOnly);
    const double lo = es.eigenvalues().minCoeff();
    const double hi = es.eigenvalues().maxCoeff();
    if (lo <= 0.0) return std::numeric_limits<double>::infinity();
    return hi / lo;
  }
  // Power iteration for the extreme eigenvalues; fixed seed keeps it
  // reproducible.
  std::mt19937_64 rng(0x5eed);
  std::normal_distribution<double> nd;
  CVec x(n);
  for (Eigen::Index i = 0; i < n; ++i) x[i] = cplx(nd(rng), nd(rng));
  x.normalize();
  CVec y = x;
  double hi = 0.0;
  for (int it = 0; it < 80; ++it) {
    CVec z = g * x;
    hi = z.norm();
    if (hi == 0.0) break;
    x = z / hi;
  }
  if (llt == nullptr) return std::numeric_limits<double>::infinity();
  double inv = 0.0;
  for (int it = 0; it < 80; ++it) {
    CVec z = llt->solve(y);
    inv = z.norm();
    if (inv == 0.0) break;
    y = z / inv;
  }
  return hi * inv;
}

}  // namespace

RenormMetric metric_from_dressing(const SpMat& dressing,
                                  const OneParticleVector& g) {
  RenormMetric m;
  m.g = g;
  m.D = dressing;
  const CMat d = CMat(dressing);
  m.G = d.adjoint() * d;
  // Exact symmetrization removes rounding asymmetry from the product.
  m.G = 0.5 * (m.G + m.G.adjoint()).eval();
  Eigen::LLT<CMat> llt(m.G);
  bool ok = llt.info() == Eigen::Success;
  if (ok) {
    const CMat l = llt.matrixL();
    for (Eigen::Index i = 0; i < l.rows() && ok; ++i) {
      ok = std::isfinite(l(i, i).real()) && l(i, i).real() > 0.0;
    }
  }
  m.condition_estimate = estimate_condition(m.G, ok ? &llt : nullptr);
  if (!ok) {
    std::ostringstream os;
    os << "renormalized metric is numerically indefinite (condition estimate "
       << m.condition_estimate << ")";
    throw MetricDegeneracyError(os.str());
  }
  m.L = llt.matrixL();
  if (m.condition_estimate > 1e12) {
    std::ostringstream os;
    os << "renormalized metric condition estimate " << m.condition_estimate
       << " exceeds 1e12";
    warn(os.str());
  }
  return m;
}

RenormMetric renorm_metric(const OneParticleVector& g, const BasisPtr& basis) {
  return metric_from_dressing(dress_lower(g, basis).matrix, g);
}

FockOperator transfer(const OneParticleVector& g, const OneParticleVector& g2,
                      const BasisPtr& basis) {
  if (g.size() != g2.size()) throw ShapeError("configurations differ in length");
  return dress_lower(g - g2, basis);
}

MollifiedCheck mollified_inner_check(const CVec& psi, const CVec& phi,
                                     const OneParticleVector& g,
                                     const RenormMetric& metric,
                                     const BasisPtr& basis) {
  const auto& b = *basis;
  if (psi.size() != static_cast<Eigen::Index>(b.dim()) ||
      phi.size() != static_cast<Eigen::Index>(b.dim())) {
    throw ShapeError("state vectors do not match the basis");
  }
  const int budget = b.cap() / 2;
  const int gp = max_grade(psi, b), gf = max_grade(phi, b);
  if (gp > budget || gf > budget) {
    throw PreconditionError("mollified check needs inputs on grades <= " +
                            std::to_string(budget) + " (got " +
                            std::to_string(std::max(gp, gf)) + ")");
  }
  MollifiedCheck out;
  out.lhs = metric.inner(psi, phi);

  const SpMat up = nilpotent_exp(creator(g, basis).matrix, b.cap());
  const CVec up_psi = up * psi;
  const CVec up_phi = up * phi;
  const double x = g.squaredNorm();
  const double den = exp_partial_sum(x, b.cap());
  out.rhs = up_psi.dot(up_phi) / den;
  out.gap = std::abs(out.lhs - out.rhs);

  const double gn = std::sqrt(x);
  const auto tp = raising_tail_norms(gn, grade_norms(psi, b), b.cap());
  const auto tf = raising_tail_norms(gn, grade_norms(phi, b), b.cap());
  double err = 0.0;
  for (std::size_t i = 0; i < std::min(tp.size(), tf.size()); ++i) err += tp[i] * tf[i];
  const double tail = exp_series_tail(x, b.cap());
  const double eps = std::numeric_limits<double>::epsilon();
  const double rounding =
      16.0 * eps * (8.0 + std::sqrt(double(b.dim()))) *
      (std::abs(out.lhs) + metric.norm(psi) * metric.norm(phi) +
       up_psi.norm() * up_phi.norm() / den);
  out.bound = (err + std::abs(out.lhs) * tail) / den + rounding;
  return out;
}

FockOperator free_field(const OneParticleVector& f, FieldKind kind,
                        const BasisPtr& basis) {
  const SpMat ad = creator(f, basis).matrix;
  const SpMat a = annihilator(f, basis).matrix;
  SpMat m;
  if (kind == FieldKind::position) {
    m = (ad + a) / std::sqrt(2.0);
  } else {
    m = (ad - a) * (cplx(0.0, -1.0) / std::sqrt(2.0));
  }
  return {basis, m, std::nullopt, true};
}

FockOperator interacting_field(const OneParticleVector& g,
                               const OneParticleVector& f, FieldKind kind,
                               const BasisPtr& basis) {
  const cplx gf = g.dot(f);
  const double shift = kind == FieldKind::position ? std::sqrt(2.0) * gf.real()
                                                   : std::sqrt(2.0) * gf.imag();
  SpMat inner = free_field(f, kind, basis).matrix;
  SpMat id(inner.rows(), inner.cols());
  id.setIdentity();
  inner += shift * id;
  const SpMat d = dress_lower(g, basis).matrix;
  const SpMat d_inv = dress_lower(-g, basis).matrix;
  SpMat x = SpMat(d_inv * inner) * d;
  x.makeCompressed();
  return {basis, x, std::nullopt, false};
}

RepresentationDistance representation_distance(const OneParticleVector& g,
                                               const OneParticleVector& g2) {
  if (g.size() != g2.size()) throw ShapeError("configurations differ in length");
  const double gap = (g - g2).squaredNorm();
  return {gap, std::exp(-0.5 * gap)};
}

CMat to_standard_metric(const CMat& x, const SpMat& d, const SpMat& d_inv) {
  return d * (x * d_inv);
}

CMat from_standard_metric(const CMat& y, const SpMat& d, const SpMat& d_inv) {
  return d_inv * (y * d);
}

}  // namespace renormfock
