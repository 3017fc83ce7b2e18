#pragma once

#include "renormfock/fock.hpp"

namespace renormfock {

// Matrix of e^{a(g)}: the series Σ a(g)^k/k! terminates at k = N_max.
FockOperator dress_lower(const OneParticleVector& g, const BasisPtr& basis);

// Gram matrix of ⟨Ψ,Φ⟩_g = ⟨DΨ, DΦ⟩ for an invertible dressing D. The same
// structure serves the spin-boson dressing, where the state space is a
// spin ⊗ Fock product and D acts on it.
struct RenormMetric {
  OneParticleVector g;
  SpMat D;
  CMat G;
  CMat L;  // lower Cholesky factor, G = L L†
  double condition_estimate = 1.0;

  Eigen::Index dim() const { return G.rows(); }
  cplx inner(const CVec& psi, const CVec& phi) const { return psi.dot(G * phi); }
  double norm(const CVec& psi) const;
  // L^{-1} F L^{-†}: the whitened standard-metric form of a sesquilinear form F.
  CMat whiten(const CMat& form) const;
  // Riesz step: the operator X with G X = F.
  CMat solve(const CMat& form) const;
  double log_det() const;
};

// Builds G = D†D, its Cholesky factor and a condition estimate. Warns above
// 1e12; throws MetricDegeneracyError when the factorization breaks down.
RenormMetric metric_from_dressing(const SpMat& dressing,
                                  const OneParticleVector& g = {});

RenormMetric renorm_metric(const OneParticleVector& g, const BasisPtr& basis);

// e^{a(g - g2)}, the matrix of U_{g,g2}.
FockOperator transfer(const OneParticleVector& g, const OneParticleVector& g2,
                      const BasisPtr& basis);

struct MollifiedCheck {
  cplx lhs;
  cplx rhs;
  double gap = 0.0;
  // Rigorous bound on |lhs - rhs| from the e^{a†(g)} truncation tail.
  double bound = 0.0;
};

// Compares ⟨Ψ,Φ⟩_g with the mollified ratio
// ⟨e^{a†(g)}Ψ, e^{a†(g)}Φ⟩ / Σ_{n≤N} ||g||^{2n}/n!.
// Ψ and Φ must live on grades ≤ N_max/2.
MollifiedCheck mollified_inner_check(const CVec& psi, const CVec& phi,
                                     const OneParticleVector& g,
                                     const RenormMetric& metric,
                                     const BasisPtr& basis);

enum class FieldKind { position, momentum };

// φ_g(f) or π_g(f) as a matrix acting on coefficient vectors of 𝓕_g.
FockOperator interacting_field(const OneParticleVector& g,
                               const OneParticleVector& f, FieldKind kind,
                               const BasisPtr& basis);

// Free fields φ₀(f) = (a†+a)/√2 and π₀(f) = (a†-a)/(i√2).
FockOperator free_field(const OneParticleVector& f, FieldKind kind,
                        const BasisPtr& basis);

struct RepresentationDistance {
  double l2_gap = 0.0;
  double vacuum_overlap = 1.0;
};

RepresentationDistance representation_distance(const OneParticleVector& g,
                                               const OneParticleVector& g2);

// Conjugations used by the renormalized operators: D X D^{-1} moves an
// operator on 𝓕_g to the standard metric; D^{-1} Y D moves it back.
CMat to_standard_metric(const CMat& x, const SpMat& d, const SpMat& d_inv);
CMat from_standard_metric(const CMat& y, const SpMat& d, const SpMat& d_inv);

}  // namespace renormfock
