#pragma once

#include "renormfock/dressing.hpp"
#include "renormfock/eigensolver.hpp"
#include "renormfock/modes.hpp"

namespace renormfock {

struct VhmModel {
  ModeSet modes;
  BasisPtr basis;
  OneParticleVector v;
  FockOperator H;
  // -||v/√ω||²
  double ground_energy_formula = 0.0;
};

// H(v) = dΓ(ω) + a†(v) + a(v).
VhmModel assemble_vhm(const OneParticleVector& v, const ModeSet& modes,
                      const BasisPtr& basis);

Eigenpairs ground_state(const VhmModel& model, int k_lowest, double tol,
                        SolverOptions opts = {});

struct DiagonalizationCheck {
  // max |W†HW - (dΓ(ω) - ||v/√ω||²)| on the block of grades ≤ budget.
  double defect = 0.0;
  double bound = 0.0;
};

// Conjugates H(v) by the truncated displacement with g = -v/ω and compares
// with the diagonal form on interior states.
DiagonalizationCheck check_diagonalization(const VhmModel& model, int budget = 1);

// Operator on 𝓕_g: X = e^{-a(g)} dΓ(ω) e^{a(g)}, together with the form
// G X = D† dΓ(ω) D and the metric.
struct RenormalizedOperator {
  CMat op;
  CMat form;
  RenormMetric metric;
  // Whitened standard-metric version, for spectra.
  CMat whitened() const { return metric.whiten(form); }
  // D X D^{-1}: the same operator transported to the standard Fock metric.
  CMat transported() const;
};

RenormalizedOperator renormalized_vhm(const OneParticleVector& g,
                                      const ModeSet& modes, const BasisPtr& basis);

}  // namespace renormfock
